"""
Discriminator input encoding.

Ground-truth poses and generator outputs are encoded into the same
DiscriminatorInput: heatmaps, depth maps and the geometric descriptor. The
prediction pathway is differentiable; PredictionEncoding.backward() maps
gradients on the encoding back to heatmaps and depths.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from advpose.encode.geometry import (
    GeoDescriptor, compose_3d_backward, compose_3d_coords, descriptor_backward, descriptor_values,
)
from advpose.encode.maps import (
    DepthMapStack, HeatmapStack, render_depth_maps, render_heatmaps, soft_argmax_backward, soft_argmax_stack,
)
from advpose.errors import MissingLabelsError, ShapeMismatchError
from advpose.skeleton.camera import camera_to_pixels

NOMINAL_ROOT_DEPTH_MM = 4000.0
OFFSET_SCALE_MM = 500.0


@dataclass(frozen=True, eq=False)
class DiscriminatorInput:
    """The encoded pose seen by the discriminator besides the image."""

    heatmaps: HeatmapStack
    depth_maps: DepthMapStack
    descriptor: GeoDescriptor

    def violations(self):
        """List of broken invariants (empty when consistent)."""
        problems = []
        if self.heatmaps.values.shape != self.depth_maps.values.shape:
            problems.append("depth maps and heatmaps differ in shape")
        if self.heatmaps.values.min() < 0 or self.heatmaps.values.max() > 1:
            problems.append("heatmap values outside [0, 1]")
        joints = self.heatmaps.values.shape[0]
        if self.descriptor.values.shape != (6, joints, joints):
            problems.append("descriptor shape is not 6xPxP")
        else:
            for name, amount in self.descriptor.violations().items():
                if amount > 1e-9 * max(1.0, float(np.abs(self.descriptor.values).max())):
                    problems.append(f"descriptor {name} violated by {amount:g}")
        return problems


class InputGradient(NamedTuple):
    """Gradients w.r.t. the three arrays of a DiscriminatorInput."""

    heatmaps: np.ndarray
    depth_maps: np.ndarray
    descriptor: np.ndarray


def heatmap_scale(image_size, heatmap_size):
    """(sx, sy) factors mapping image pixels to heatmap pixels."""
    return np.array([heatmap_size[1] / image_size[1], heatmap_size[0] / image_size[0]])


def encode_pose(pose3d, cam, image_size, heatmap_size, root=0, pose2d=None):
    """
    Encode a camera-frame 3D pose.

    Args:
        pose3d: Camera-frame Pose3D
        cam: CameraModel it was captured with
        image_size: (H_img, W_img)
        heatmap_size: (H, W)
        root: Root joint index for root-relative depths
        pose2d: Pixels to render heatmaps from (default: projection of pose3d)

    Returns:
        DiscriminatorInput
    """
    coords = pose3d.coords
    pixels = camera_to_pixels(coords, cam) if pose2d is None else pose2d.coords
    centers = pixels * heatmap_scale(image_size, heatmap_size)
    heatmaps = render_heatmaps(centers, coords.shape[0], *heatmap_size)
    depths = coords[:, 2] - coords[root, 2]
    return DiscriminatorInput(
        heatmaps=heatmaps,
        depth_maps=render_depth_maps(heatmaps, depths),
        descriptor=GeoDescriptor(descriptor_values(coords - coords[root])),
    )


def encode_ground_truth(sample, heatmap_size, root=0):
    """
    Encode a labeled sample's ground truth.

    Raises:
        MissingLabelsError: If the sample carries no 3D pose
    """
    if sample.pose3d is None:
        raise MissingLabelsError(f"Sample {sample.id} of domain '{sample.domain}' has no 3D labels")
    return encode_pose(sample.pose3d, sample.camera, sample.image.shape, heatmap_size,
                       root=root, pose2d=sample.pose2d)


class PredictionEncoding:
    """
    Differentiable encoding of one generator output.

    Attributes:
        input: The DiscriminatorInput built from the prediction
        pixels: (P, 2) soft-argmax joint locations in image pixels
        coords: (P, 3) back-projected camera-frame joints, millimeters
    """

    def __init__(self, heatmaps, depths, cam, image_size, root_depth=NOMINAL_ROOT_DEPTH_MM):
        maps = np.asarray(getattr(heatmaps, "values", heatmaps), dtype=np.float64)
        depths = np.asarray(depths, dtype=np.float64)
        if depths.shape != (maps.shape[0],):
            raise ShapeMismatchError(f"Cannot encode {maps.shape} heatmaps with {depths.shape} depths")
        self._maps = maps
        self._depths = depths
        self._cam = cam
        self._scale = heatmap_scale(image_size, maps.shape[1:])

        self._map_coords = soft_argmax_stack(maps)
        self.pixels = self._map_coords / self._scale
        self._absolute = depths + root_depth
        self.coords = compose_3d_coords(self.pixels, self._absolute, cam)
        self.input = DiscriminatorInput(
            heatmaps=HeatmapStack(maps),
            depth_maps=DepthMapStack(depths[:, None, None] * maps),
            descriptor=GeoDescriptor(descriptor_values(self.coords)),
        )

    def backward(self, grad):
        """
        Map an InputGradient back to the generator outputs.

        Returns:
            Tuple of ((P, H, W) heatmap gradient, (P,) depth gradient)
        """
        grad_maps = grad.heatmaps + grad.depth_maps * self._depths[:, None, None]
        grad_depths = (grad.depth_maps * self._maps).sum(axis=(1, 2))

        grad_coords = descriptor_backward(self.coords, grad.descriptor)
        grad_pixels, grad_absolute = compose_3d_backward(self.pixels, self._absolute, self._cam, grad_coords)
        grad_depths = grad_depths + grad_absolute
        grad_maps = grad_maps + soft_argmax_backward(self._maps, self._map_coords, grad_pixels / self._scale)
        return grad_maps, grad_depths


def encode_prediction(heatmaps, depths, cam, image_size, root_depth=NOMINAL_ROOT_DEPTH_MM):
    """
    Encode generator outputs for the discriminator.

    2D joints come from soft-argmax of each heatmap, mapped to image pixels;
    3D joints from compose_3d with the root-relative depths offset by a
    nominal root depth.

    Args:
        heatmaps: HeatmapStack or (P, H, W) predicted heatmaps
        depths: (P,) predicted root-relative depths, millimeters
        cam: CameraModel of the image
        image_size: (H_img, W_img)
        root_depth: Nominal absolute root depth, millimeters

    Returns:
        PredictionEncoding (its `.input` is the DiscriminatorInput)

    Raises:
        DegenerateMapError: If a heatmap has no positive mass
    """
    return PredictionEncoding(heatmaps, depths, cam, image_size, root_depth=root_depth)


def network_arrays(inputs):
    """
    Flatten and scale a list of DiscriminatorInputs for the network.

    Depth maps and descriptor offsets are divided by OFFSET_SCALE_MM,
    squared offsets by its square.

    Returns:
        Tuple of ((B, 2·P·H·W) map array, (B, 6·P·P) descriptor array)
    """
    maps = np.stack([np.concatenate([item.heatmaps.values.ravel(),
                                     item.depth_maps.values.ravel() / OFFSET_SCALE_MM]) for item in inputs])
    geo = np.stack([_scaled_descriptor(item.descriptor.values).ravel() for item in inputs])
    return maps, geo


def _descriptor_scales(joints):
    scales = np.empty((6, joints, joints))
    scales[:3] = 1.0 / OFFSET_SCALE_MM
    scales[3:] = 1.0 / OFFSET_SCALE_MM ** 2
    return scales


def _scaled_descriptor(values):
    return values * _descriptor_scales(values.shape[1])


def input_gradients(grad_maps, grad_geo, map_shape):
    """
    Undo network_arrays for gradients.

    Args:
        grad_maps: (B, 2·P·H·W) gradient, or None when the map source is off
        grad_geo: (B, 6·P·P) gradient, or None when the geometric source is off
        map_shape: (P, H, W)

    Returns:
        List of InputGradient, one per batch row
    """
    joints = map_shape[0]
    size = int(np.prod(map_shape))
    batch = (grad_maps if grad_maps is not None else grad_geo).shape[0]
    scales = _descriptor_scales(joints)
    gradients = []
    for row in range(batch):
        if grad_maps is not None:
            heat = grad_maps[row, :size].reshape(map_shape)
            depth = grad_maps[row, size:].reshape(map_shape) / OFFSET_SCALE_MM
        else:
            heat = np.zeros(map_shape)
            depth = np.zeros(map_shape)
        if grad_geo is not None:
            geo = grad_geo[row].reshape(6, joints, joints) * scales
        else:
            geo = np.zeros((6, joints, joints))
        gradients.append(InputGradient(heat, depth, geo))
    return gradients
