"""
Pairwise geometric descriptor and 2D + depth back-projection.

The descriptor of ordered joint pair (i, j) is the 6-vector
[Δx, Δy, Δz, Δx², Δy², Δz²] with Δ = z_i − z_j, stacked into a 6×P×P array.
"""

from dataclasses import dataclass

import numpy as np

from advpose.errors import NonPositiveDepthError, ShapeMismatchError
from advpose.skeleton.camera import Pose3D, CAMERA


@dataclass(frozen=True, eq=False)
class GeoDescriptor:
    """6×P×P pairwise offsets (mm) and squared offsets (mm²)."""

    values: np.ndarray

    def violations(self, tolerance=1e-9):
        """Largest violation of each descriptor invariant, keyed by name."""
        offsets, squares = self.values[:3], self.values[3:]
        diagonal = np.diagonal(self.values, axis1=1, axis2=2)
        return {
            "antisymmetry": float(np.max(np.abs(offsets + offsets.transpose(0, 2, 1)))),
            "symmetry": float(np.max(np.abs(squares - squares.transpose(0, 2, 1)))),
            "nonnegative": float(max(0.0, -squares.min())),
            "diagonal": float(np.max(np.abs(diagonal))),
            "square": float(np.max(np.abs(squares - offsets * offsets))),
        }


def descriptor_values(coords):
    """Descriptor of (..., P, 3) coordinates as a (..., 6, P, P) array."""
    coords = np.asarray(coords, dtype=np.float64)
    per_axis = np.moveaxis(coords, -1, -2)
    delta = per_axis[..., :, :, None] - per_axis[..., :, None, :]
    return np.concatenate([delta, delta * delta], axis=-3)


def descriptor_backward(coords, grad):
    """
    Gradient of descriptor_values w.r.t. the coordinates.

    Args:
        coords: (P, 3) coordinates passed forward
        grad: (6, P, P) upstream gradient

    Returns:
        (P, 3) gradient
    """
    per_axis = coords.T
    delta = per_axis[:, :, None] - per_axis[:, None, :]
    through_delta = grad[:3] + 2.0 * delta * grad[3:]
    return (through_delta.sum(axis=2) - through_delta.sum(axis=1)).T


def geometric_descriptor(pose):
    """
    Compute the pairwise geometric descriptor of a pose.

    Args:
        pose: Pose3D (or (P, 3) array) in millimeters

    Returns:
        GeoDescriptor with values of shape (6, P, P)
    """
    coords = np.asarray(getattr(pose, "coords", pose), dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 3:
        raise ShapeMismatchError(f"Expected (P, 3) coordinates, got {coords.shape}")
    return GeoDescriptor(descriptor_values(coords))


def compose_3d(pose2d, depths, cam):
    """
    Back-project pixels with known absolute depths into the camera frame.

    x = (u − cx)·z/fx, y = (v − cy)·z/fy.

    Args:
        pose2d: Pose2D (or (P, 2) array) in image pixels
        depths: (P,) absolute depths in millimeters
        cam: CameraModel

    Returns:
        Camera-frame Pose3D

    Raises:
        NonPositiveDepthError: If any depth is <= 0
    """
    return Pose3D(compose_3d_coords(getattr(pose2d, "coords", pose2d), depths, cam), frame=CAMERA)


def compose_3d_coords(pixels, depths, cam):
    """Array form of compose_3d: (P, 2) pixels and (P,) depths to (P, 3)."""
    pixels = np.asarray(pixels, dtype=np.float64)
    depths = np.asarray(depths, dtype=np.float64)
    if pixels.shape != (depths.shape[0], 2):
        raise ShapeMismatchError(f"Cannot compose {pixels.shape} pixels with {depths.shape} depths")
    if np.any(depths <= 0):
        raise NonPositiveDepthError("Back-projection needs positive depths")
    x = (pixels[:, 0] - cam.cx) * depths / cam.fx
    y = (pixels[:, 1] - cam.cy) * depths / cam.fy
    return np.stack([x, y, depths], axis=1)


def compose_3d_backward(pixels, depths, cam, grad_coords):
    """
    Gradient of compose_3d_coords w.r.t. pixels and depths.

    Returns:
        Tuple of ((P, 2) pixel gradient, (P,) depth gradient)
    """
    grad_pixels = np.stack([grad_coords[:, 0] * depths / cam.fx,
                            grad_coords[:, 1] * depths / cam.fy], axis=1)
    grad_depths = (grad_coords[:, 0] * (pixels[:, 0] - cam.cx) / cam.fx
                   + grad_coords[:, 1] * (pixels[:, 1] - cam.cy) / cam.fy
                   + grad_coords[:, 2])
    return grad_pixels, grad_depths
