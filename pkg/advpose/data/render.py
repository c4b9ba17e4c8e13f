"""
Stick-figure rendering for advpose.

Bones are drawn with integer Bresenham lines, no anti-aliasing, so rendered
images are bit-exact across platforms.
"""

import numpy as np

from advpose.skeleton.topology import default_topology


def _round_pixel(value):
    return int(np.floor(value + 0.5))


def line_pixels(x0, y0, x1, y1):
    """Integer Bresenham line from (x0, y0) to (x1, y1), endpoints included."""
    pixels = []
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        pixels.append((x, y))
        if x == x1 and y == y1:
            return pixels
        doubled = 2 * err
        if doubled >= dy:
            err += dy
            x += sx
        if doubled <= dx:
            err += dx
            y += sy


def render_stick_figure(pose2d, size, bones=None):
    """
    Rasterize a 2D pose as a 1-pixel-wide stick figure.

    Args:
        pose2d: Pose2D (or (P, 2) array) in image pixels
        size: (H_img, W_img)
        bones: (parent, child) joint pairs to draw (default skeleton when None)

    Returns:
        (H_img, W_img) float64 image, 1.0 on bones and 0.0 elsewhere;
        segments are clipped at the frame
    """
    if bones is None:
        bones = default_topology().bones
    height, width = size
    coords = np.asarray(getattr(pose2d, "coords", pose2d), dtype=np.float64)
    image = np.zeros((height, width))
    for parent, child in bones:
        x0, y0 = _round_pixel(coords[parent, 0]), _round_pixel(coords[parent, 1])
        x1, y1 = _round_pixel(coords[child, 0]), _round_pixel(coords[child, 1])
        # segment bounding box misses the frame entirely
        if max(x0, x1) < 0 or min(x0, x1) >= width or max(y0, y1) < 0 or min(y0, y1) >= height:
            continue
        for x, y in line_pixels(x0, y0, x1, y1):
            if 0 <= x < width and 0 <= y < height:
                image[y, x] = 1.0
    return image
