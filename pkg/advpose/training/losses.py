"""
Training objectives.

    loss_pose = Σ_n ‖Ĥ_n − H_n‖² + Σ_{n labeled} ‖(d̂_n − d_n) / unit‖²
    loss_D    = mean_real bce(D(real), 1) + mean_fake bce(D(fake), 0)
    loss_G    = λ · Σ_fake bce(D(fake), 1) + loss_pose

The depth unit (default 1000 mm) keeps the depth term commensurable with
the heatmap term.
"""

import numpy as np

from advpose.encode.encoder import NOMINAL_ROOT_DEPTH_MM, encode_prediction
from advpose.models.generator import ORACLE_2D
from advpose.nn.losses import bce, bce_grad

DEFAULT_DEPTH_UNIT_MM = 1000.0


def pose_loss_terms(heatmaps, depths, batch, depth_unit_mm=DEFAULT_DEPTH_UNIT_MM):
    """
    Pose loss and its gradients for given generator outputs.

    Args:
        heatmaps: (B, P, H, W) predicted heatmaps
        depths: (B, P) predicted root-relative depths (mm), or None to
            evaluate the heatmap term only
        batch: Batch with targets
        depth_unit_mm: Unit of the depth term

    Returns:
        Tuple of (loss, heatmap gradient, depth gradient or None)
    """
    diff = heatmaps - batch.target_heatmaps
    loss = float(np.sum(diff * diff))
    grad_heatmaps = 2.0 * diff
    grad_depths = None
    if depths is not None:
        mask = batch.labeled.astype(np.float64)[:, None]
        depth_diff = (depths - batch.target_depths) / depth_unit_mm * mask
        loss += float(np.sum(depth_diff * depth_diff))
        grad_depths = 2.0 * depth_diff / depth_unit_mm
    return loss, grad_heatmaps, grad_depths


def generator_outputs(generator, batch, with_depth=True):
    """Run the generator on a batch, feeding ground-truth maps in oracle-2d mode."""
    oracle = batch.target_heatmaps if generator.mode == ORACLE_2D else None
    return generator.forward(batch.images, oracle_heatmaps=oracle, with_depth=with_depth)


def loss_pose(generator, batch, depth_unit_mm=DEFAULT_DEPTH_UNIT_MM):
    """Pose loss of the generator on a batch (no gradients)."""
    heatmaps, depths = generator_outputs(generator, batch)
    return pose_loss_terms(heatmaps, depths, batch, depth_unit_mm)[0]


def discriminator_loss_terms(real_scores, fake_scores):
    """
    Discriminator loss from its scores.

    Returns:
        Tuple of (loss, gradient w.r.t. real scores, gradient w.r.t. fake scores)
    """
    real_scores = np.asarray(real_scores, dtype=np.float64)
    fake_scores = np.asarray(fake_scores, dtype=np.float64)
    loss = 0.0
    grad_real = np.zeros_like(real_scores)
    grad_fake = np.zeros_like(fake_scores)
    if real_scores.size:
        loss += float(np.mean(bce(real_scores, 1.0)))
        grad_real = bce_grad(real_scores, 1.0) / real_scores.size
    if fake_scores.size:
        loss += float(np.mean(bce(fake_scores, 0.0)))
        grad_fake = bce_grad(fake_scores, 0.0) / fake_scores.size
    return loss, grad_real, grad_fake


def loss_D(discriminator, real_images, real_inputs, fake_images, fake_inputs):
    """
    Discriminator loss on real (labeled ground truth) and fake (generated) inputs.

    Args:
        discriminator: DiscriminatorModel
        real_images, fake_images: (N, H_img, W_img) images
        real_inputs, fake_inputs: Lists of DiscriminatorInput

    Returns:
        Scalar loss
    """
    real_scores = discriminator.forward(real_images, real_inputs) if real_inputs else np.zeros(0)
    fake_scores = discriminator.forward(fake_images, fake_inputs) if fake_inputs else np.zeros(0)
    return discriminator_loss_terms(real_scores, fake_scores)[0]


def adversarial_term(scores):
    """Σ bce(score, 1) over generated samples, and its gradient."""
    scores = np.asarray(scores, dtype=np.float64)
    return float(np.sum(bce(scores, 1.0))), bce_grad(scores, 1.0)


def encode_batch_predictions(heatmaps, depths, batch, root_depth=NOMINAL_ROOT_DEPTH_MM):
    """One PredictionEncoding per batch row."""
    return [encode_prediction(heatmaps[row], depths[row], sample.camera, sample.image.shape,
                              root_depth=root_depth)
            for row, sample in enumerate(batch.samples)]


def loss_G(generator, discriminator, batch, lam, depth_unit_mm=DEFAULT_DEPTH_UNIT_MM,
           root_depth=NOMINAL_ROOT_DEPTH_MM):
    """
    Generator loss: λ times the adversarial term plus the pose loss.

    Args:
        generator: GeneratorModel
        discriminator: DiscriminatorModel (None contributes no adversarial term)
        batch: Batch mixing domains
        lam: Trade-off weight λ ≥ 0
        depth_unit_mm: Unit of the depth term
        root_depth: Nominal root depth used to encode predictions

    Returns:
        Scalar loss
    """
    heatmaps, depths = generator_outputs(generator, batch)
    pose = pose_loss_terms(heatmaps, depths, batch, depth_unit_mm)[0]
    if discriminator is None:
        return pose
    encodings = encode_batch_predictions(heatmaps, depths, batch, root_depth)
    scores = discriminator.forward(batch.images, [encoding.input for encoding in encodings])
    return lam * adversarial_term(scores)[0] + pose
