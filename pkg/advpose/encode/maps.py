"""
Heatmaps and depth maps.

Map j of a stack is indexed [j, y, x]; coordinates are (x, y) in heatmap
pixels. Ground-truth heatmaps are unit-peak Gaussians with identity
covariance, depth maps are root-relative depth times the heatmap.
"""

from dataclasses import dataclass

import numpy as np

from advpose.errors import DegenerateMapError, ShapeMismatchError


@dataclass(frozen=True, eq=False)
class HeatmapStack:
    """P×H×W unit-peak maps, values in [0, 1]."""

    values: np.ndarray

    @property
    def resolution(self):
        return self.values.shape[1:]


@dataclass(frozen=True, eq=False)
class DepthMapStack:
    """P×H×W depth maps in millimeters, same shape as their heatmaps."""

    values: np.ndarray


def pixel_grid(height, width):
    """(ys, xs) coordinate grids of shape (H, W)."""
    return np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij")


def render_heatmaps(centers, joint_count, height, width):
    """
    Render one Gaussian per joint.

    Value at pixel p of map j is exp(−‖p − center_j‖²/2): identity covariance,
    peak 1 at the center. Off-map centers leave truncated tails.

    Args:
        centers: (P, 2) joint (x, y) in heatmap coordinates, or a Pose2D
        joint_count: P
        height, width: Heatmap resolution

    Returns:
        HeatmapStack
    """
    centers = np.asarray(getattr(centers, "coords", centers), dtype=np.float64)
    if centers.shape != (joint_count, 2):
        raise ShapeMismatchError(f"Expected ({joint_count}, 2) centers, got {centers.shape}")
    ys, xs = pixel_grid(height, width)
    dx = xs[None] - centers[:, 0, None, None]
    dy = ys[None] - centers[:, 1, None, None]
    return HeatmapStack(np.exp(-(dx * dx + dy * dy) / 2.0))


def render_depth_maps(heatmaps, depths):
    """
    Spread each joint's root-relative depth over its heatmap.

    Args:
        heatmaps: HeatmapStack (or P×H×W array)
        depths: (P,) root-relative depths in millimeters

    Returns:
        DepthMapStack with map j = depth_j × heatmap_j

    Raises:
        ShapeMismatchError: If depths do not match the number of maps
    """
    values = np.asarray(getattr(heatmaps, "values", heatmaps), dtype=np.float64)
    depths = np.asarray(depths, dtype=np.float64)
    if values.ndim != 3 or depths.shape != (values.shape[0],):
        raise ShapeMismatchError(f"Cannot combine {values.shape} heatmaps with {depths.shape} depths")
    return DepthMapStack(depths[:, None, None] * values)


def soft_argmax(heatmap):
    """
    Expected (x, y) under a nonnegative map normalized to sum 1.

    Args:
        heatmap: (H, W) nonnegative map

    Returns:
        Tuple (x, y) in heatmap coordinates

    Raises:
        DegenerateMapError: If the map has no positive value
    """
    coords = soft_argmax_stack(np.asarray(heatmap, dtype=np.float64)[None])
    return float(coords[0, 0]), float(coords[0, 1])


def soft_argmax_stack(maps):
    """Vectorized soft_argmax over a (P, H, W) stack; returns (P, 2)."""
    maps = np.asarray(maps, dtype=np.float64)
    totals = maps.sum(axis=(1, 2))
    if np.any(totals <= 0) or np.any(maps.max(axis=(1, 2)) <= 0):
        raise DegenerateMapError("Heatmap has no positive mass")
    ys, xs = pixel_grid(*maps.shape[1:])
    x = (maps * xs).sum(axis=(1, 2)) / totals
    y = (maps * ys).sum(axis=(1, 2)) / totals
    return np.stack([x, y], axis=1)


def soft_argmax_backward(maps, coords, grad_coords):
    """
    Gradient of soft_argmax_stack w.r.t. the maps.

    d x / d m[y', x'] = (x' − x) / Σm, likewise for y.

    Args:
        maps: (P, H, W) maps passed forward
        coords: (P, 2) forward result
        grad_coords: (P, 2) upstream gradient

    Returns:
        (P, H, W) gradient
    """
    totals = maps.sum(axis=(1, 2))
    ys, xs = pixel_grid(*maps.shape[1:])
    grad = (grad_coords[:, 0, None, None] * (xs[None] - coords[:, 0, None, None])
            + grad_coords[:, 1, None, None] * (ys[None] - coords[:, 1, None, None]))
    return grad / totals[:, None, None]


def decode_heatmaps(maps):
    """
    Non-differentiable peak decoding for evaluation.

    Takes the argmax of each map and shifts it a quarter pixel toward the
    larger neighbour along each axis.

    Args:
        maps: (P, H, W) heatmaps

    Returns:
        (P, 2) (x, y) in heatmap coordinates
    """
    maps = np.asarray(getattr(maps, "values", maps), dtype=np.float64)
    count, height, width = maps.shape
    coords = np.zeros((count, 2))
    for joint in range(count):
        y, x = np.unravel_index(np.argmax(maps[joint]), (height, width))
        fx, fy = float(x), float(y)
        if 0 < x < width - 1:
            fx += 0.25 * np.sign(maps[joint, y, x + 1] - maps[joint, y, x - 1])
        if 0 < y < height - 1:
            fy += 0.25 * np.sign(maps[joint, y + 1, x] - maps[joint, y - 1, x])
        coords[joint] = fx, fy
    return coords
