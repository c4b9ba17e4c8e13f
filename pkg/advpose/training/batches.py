"""
Minibatch assembly.

Batch membership is drawn from a seed derived from (seed, stream, iteration),
so a run resumed at any iteration draws exactly the batches an uninterrupted
run would.
"""

from dataclasses import dataclass

import numpy as np

from advpose.encode.encoder import heatmap_scale
from advpose.encode.maps import render_heatmaps


@dataclass(eq=False)
class Batch:
    """
    Network-ready arrays for a list of samples.

    Attributes:
        samples: The SyntheticSamples, in batch order
        images: (B, H_img, W_img)
        target_heatmaps: (B, P, H, W) ground-truth heatmaps (every sample has 2D labels)
        target_depths: (B, P) root-relative depths in mm, zero where unlabeled
        labeled: (B,) True where the sample carries a 3D pose
    """

    samples: list
    images: np.ndarray
    target_heatmaps: np.ndarray
    target_depths: np.ndarray
    labeled: np.ndarray

    def __len__(self):
        return len(self.samples)

    @property
    def cameras(self):
        return [sample.camera for sample in self.samples]


def make_batch(samples, heatmap_size, root=0):
    """
    Build a Batch from samples of any domains.

    Args:
        samples: List of SyntheticSample
        heatmap_size: (H, W)
        root: Root joint index for root-relative depths

    Returns:
        Batch
    """
    if not samples:
        raise ValueError("a batch needs at least one sample")
    joints = samples[0].pose2d.joint_count
    images = np.stack([np.asarray(sample.image, dtype=np.float64) for sample in samples])
    targets = np.zeros((len(samples), joints) + tuple(heatmap_size))
    depths = np.zeros((len(samples), joints))
    labeled = np.zeros(len(samples), dtype=bool)
    for row, sample in enumerate(samples):
        centers = sample.pose2d.coords * heatmap_scale(sample.image.shape, heatmap_size)
        targets[row] = render_heatmaps(centers, joints, *heatmap_size).values
        if sample.pose3d is not None:
            z = sample.pose3d.coords[:, 2]
            depths[row] = z - z[root]
            labeled[row] = True
    return Batch(samples=list(samples), images=images, target_heatmaps=targets,
                 target_depths=depths, labeled=labeled)


def iteration_rng(seed, stream, iteration, step=0):
    """Generator for one (stream, iteration, step) of a run."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream), int(iteration), int(step)]))


def draw(samples, count, rng):
    """Draw `count` samples uniformly with replacement."""
    if count <= 0:
        return []
    if not samples:
        raise ValueError("cannot draw from an empty sample list")
    return [samples[index] for index in rng.integers(len(samples), size=count)]


def split_counts(total):
    """(first, second) halves of `total`; the first half takes the odd one."""
    return total - total // 2, total // 2
