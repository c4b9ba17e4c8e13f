"""
Capture domains for advpose.

A DomainSpec describes how one synthetic domain is captured: which cameras
look at the subject, how much of the pose space is used and whether 3D labels
are kept. The defaults model a constrained lab studio, unconstrained wild
footage, and a held-out transfer domain.
"""

from dataclasses import dataclass

import numpy as np

from advpose.skeleton.camera import look_at_camera

FIXED_LIST = "fixed-list"
SAMPLED = "sampled"

DEFAULT_IMAGE_SIZE = (32, 32)
FOCAL_PER_PIXEL_WIDTH = 1.25


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """
    Capture settings of one synthetic domain.

    Attributes:
        name: Domain label written into every sample
        camera_mode: FIXED_LIST or SAMPLED
        cameras: Explicit CameraModel list (fixed-list mode)
        azimuth_range, elevation_range: Radians (sampled mode)
        distance_range: Millimeters (sampled mode)
        pose_scope: Fraction of each joint's angle range used, in (0, 1]
        has_3d_labels: Whether samples keep their 3D pose
        image_size: (H_img, W_img) in pixels
        focal: Focal length in pixels for sampled cameras (None → derived)
    """

    name: str
    camera_mode: str = SAMPLED
    cameras: tuple = ()
    azimuth_range: tuple = (-np.pi, np.pi)
    elevation_range: tuple = (0.0, 0.0)
    distance_range: tuple = (4000.0, 4000.0)
    pose_scope: float = 1.0
    has_3d_labels: bool = True
    image_size: tuple = DEFAULT_IMAGE_SIZE
    focal: float = None

    @property
    def focal_length(self):
        if self.focal is not None:
            return float(self.focal)
        return FOCAL_PER_PIXEL_WIDTH * self.image_size[1]

    @property
    def principal_point(self):
        return self.image_size[1] / 2.0, self.image_size[0] / 2.0

    def validate(self):
        """Return a list of violated invariants (empty when valid)."""
        violations = []
        if self.camera_mode not in (FIXED_LIST, SAMPLED):
            violations.append(f"unknown camera mode '{self.camera_mode}'")
        if self.camera_mode == FIXED_LIST and not self.cameras:
            violations.append("fixed-list domain needs at least one camera")
        for label, (low, high) in (("azimuth", self.azimuth_range),
                                   ("elevation", self.elevation_range),
                                   ("distance", self.distance_range)):
            if low > high:
                violations.append(f"{label} range is empty")
        if self.distance_range[0] <= 0:
            violations.append("camera distance must be positive")
        if not 0 < self.pose_scope <= 1:
            violations.append("pose scope must lie in (0, 1]")
        if self.image_size[0] < 8 or self.image_size[1] < 8:
            violations.append("image size must be at least 8x8")
        return violations


def ring_cameras(count, elevation, distance, image_size, focal=None):
    """`count` cameras evenly spaced in azimuth, offset by half a step."""
    focal = focal if focal is not None else FOCAL_PER_PIXEL_WIDTH * image_size[1]
    principal = (image_size[1] / 2.0, image_size[0] / 2.0)
    step = 2 * np.pi / count
    return tuple(look_at_camera(step * (k + 0.5), elevation, distance, (focal, focal), principal)
                 for k in range(count))


def default_domains(image_size=DEFAULT_IMAGE_SIZE):
    """
    Desk-scale lab, wild and transfer domains.

    Returns:
        Dict of domain name -> DomainSpec
    """
    lab = DomainSpec(
        name="lab", camera_mode=FIXED_LIST,
        cameras=ring_cameras(4, 0.15, 4000.0, image_size),
        pose_scope=0.6, has_3d_labels=True, image_size=image_size,
    )
    wild = DomainSpec(
        name="wild", camera_mode=SAMPLED,
        azimuth_range=(-np.pi, np.pi), elevation_range=(-0.1, 0.5),
        distance_range=(3500.0, 5000.0),
        pose_scope=1.0, has_3d_labels=False, image_size=image_size,
    )
    xfer = DomainSpec(
        name="xfer", camera_mode=SAMPLED,
        azimuth_range=(-np.pi, np.pi), elevation_range=(0.3, 0.7),
        distance_range=(4500.0, 5500.0),
        pose_scope=0.85, has_3d_labels=True, image_size=image_size,
    )
    return {domain.name: domain for domain in (lab, wild, xfer)}


def sample_camera(domain, rng):
    """
    Draw a camera for one sample of a domain.

    Fixed-list domains pick uniformly among their cameras; sampled domains
    draw azimuth, elevation and distance uniformly in range and aim the
    camera at the skeleton root.

    Args:
        domain: DomainSpec
        rng: numpy Generator

    Returns:
        CameraModel
    """
    if domain.camera_mode == FIXED_LIST:
        return domain.cameras[rng.integers(len(domain.cameras))]
    azimuth = rng.uniform(*domain.azimuth_range)
    elevation = rng.uniform(*domain.elevation_range)
    distance = rng.uniform(*domain.distance_range)
    focal = domain.focal_length
    return look_at_camera(azimuth, elevation, distance, (focal, focal), domain.principal_point)
