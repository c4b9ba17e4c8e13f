"""
Pose containers and the pinhole camera model.

Conventions used throughout advpose:
    - world frame is Y-up, millimeters
    - camera frame: x right, y down, z forward (optical axis), millimeters
    - camera coordinates of a world point p are R·(p − t), where t is the
      camera center in world coordinates
    - pixels: u = fx·x/z + cx, v = fy·y/z + cy
"""

from dataclasses import dataclass

import numpy as np

from advpose.errors import NonPositiveDepthError, ShapeMismatchError, NonFiniteError

WORLD = "world"
CAMERA = "camera"

_ROTATION_TOLERANCE = 1e-9


def _frozen(array, shape_tail, label):
    values = np.array(array, dtype=np.float64)
    if values.ndim != 2 or values.shape[1:] != shape_tail:
        raise ShapeMismatchError(f"{label} must have shape (P, {shape_tail[0]}), got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{label} contains non-finite values")
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class Pose3D:
    """P×3 joint coordinates in millimeters, tagged with their frame."""

    coords: np.ndarray
    frame: str = WORLD

    def __post_init__(self):
        if self.frame not in (WORLD, CAMERA):
            raise ValueError(f"Unknown frame '{self.frame}'")
        object.__setattr__(self, "coords", _frozen(self.coords, (3,), "Pose3D"))

    @property
    def joint_count(self):
        return self.coords.shape[0]

    def root_relative(self, root=0):
        """Coordinates with the root joint moved to the origin."""
        return self.coords - self.coords[root]


@dataclass(frozen=True, eq=False)
class Pose2D:
    """P×2 joint coordinates in image pixels (u, v)."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen(self.coords, (2,), "Pose2D"))

    @property
    def joint_count(self):
        return self.coords.shape[0]


@dataclass(frozen=True, eq=False)
class CameraModel:
    """
    Pinhole camera.

    Attributes:
        fx, fy: Focal lengths in pixels
        cx, cy: Principal point in pixels
        rotation: 3×3 world-to-camera rotation
        translation: Camera center in world millimeters
    """

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("Focal lengths must be positive")
        rotation = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        translation = np.array(self.translation, dtype=np.float64).reshape(3)
        if not np.allclose(rotation @ rotation.T, np.eye(3), atol=_ROTATION_TOLERANCE, rtol=0.0):
            raise ValueError("Camera rotation is not orthonormal")
        if abs(np.linalg.det(rotation) - 1.0) > _ROTATION_TOLERANCE:
            raise ValueError("Camera rotation must have determinant +1")
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    def to_vector(self):
        """Flatten to 16 values: fx, fy, cx, cy, rotation (row-major), translation."""
        return np.concatenate([[self.fx, self.fy, self.cx, self.cy],
                               self.rotation.ravel(), self.translation])

    @classmethod
    def from_vector(cls, vector):
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (16,):
            raise ShapeMismatchError(f"Camera vector must have 16 values, got {vector.shape}")
        return cls(fx=float(vector[0]), fy=float(vector[1]), cx=float(vector[2]), cy=float(vector[3]),
                   rotation=vector[4:13].reshape(3, 3), translation=vector[13:16])

    def same_as(self, other):
        return np.array_equal(self.to_vector(), other.to_vector())


def world_to_camera(points, cam):
    """Apply R·(p − t) to an (..., 3) array of world points."""
    return (np.asarray(points, dtype=np.float64) - cam.translation) @ cam.rotation.T


def camera_to_pixels(points, cam):
    """
    Perspective-divide (..., 3) camera-frame points to (..., 2) pixels.

    Raises:
        NonPositiveDepthError: If any depth is <= 0
    """
    points = np.asarray(points, dtype=np.float64)
    depth = points[..., 2]
    if np.any(depth <= 0):
        bad = np.flatnonzero(np.ravel(depth) <= 0)
        raise NonPositiveDepthError(f"Joint(s) {bad.tolist()} lie on or behind the camera plane")
    u = cam.fx * points[..., 0] / depth + cam.cx
    v = cam.fy * points[..., 1] / depth + cam.cy
    return np.stack([u, v], axis=-1)


def project(pose, cam):
    """
    Project a world-frame pose through a camera.

    Args:
        pose: Pose3D in the world frame
        cam: CameraModel

    Returns:
        Tuple of (Pose3D in the camera frame, Pose2D in pixels)

    Raises:
        NonPositiveDepthError: If any joint is on or behind the camera plane
    """
    if pose.frame != WORLD:
        raise ValueError("project() expects a world-frame pose")
    camera_coords = world_to_camera(pose.coords, cam)
    pixels = camera_to_pixels(camera_coords, cam)
    return Pose3D(camera_coords, frame=CAMERA), Pose2D(pixels)


def look_at_camera(azimuth, elevation, distance, focal, principal):
    """
    Build a camera on a sphere around the world origin, looking at it.

    Azimuth rotates about the world Y axis (0 looks along +Z), elevation
    lifts the camera above the horizontal plane. Both are in radians.

    Args:
        azimuth: Angle about the vertical axis
        elevation: Angle above the horizontal plane
        distance: Distance from the origin in millimeters
        focal: (fx, fy) in pixels
        principal: (cx, cy) in pixels

    Returns:
        CameraModel whose optical axis passes through the origin
    """
    center = distance * np.array([
        np.cos(elevation) * np.sin(azimuth),
        np.sin(elevation),
        -np.cos(elevation) * np.cos(azimuth),
    ])
    forward = -center / np.linalg.norm(center)
    down = np.array([0.0, -1.0, 0.0])
    down = down - forward * np.dot(down, forward)
    down /= np.linalg.norm(down)
    right = np.cross(down, forward)
    rotation = np.stack([right, down, forward])
    return CameraModel(fx=float(focal[0]), fy=float(focal[1]),
                       cx=float(principal[0]), cy=float(principal[1]),
                       rotation=rotation, translation=center)
