"""
Alternating adversarial training.

Every cycle runs `d_steps` discriminator updates followed by one generator
update. Discriminator minibatches hold ⌈B/2⌉ real lab ground-truth
encodings and ⌊B/2⌋ generated encodings, the generated half split between
lab and wild images. Generator minibatches mix lab and wild images half and
half. Without a discriminator the loop trains on the pose loss alone.
"""

import logging
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from advpose.data.anthropometry import CORRUPTION_MODES, corrupt_pose
from advpose.encode.encoder import NOMINAL_ROOT_DEPTH_MM, encode_ground_truth, encode_pose
from advpose.errors import NonFiniteError
from advpose.nn.checkpoint import save_checkpoint
from advpose.nn.optim import Adam
from advpose.training.batches import draw, iteration_rng, make_batch, split_counts
from advpose.training.history import HistoryRecord, TrainHistory
from advpose.training.losses import (
    DEFAULT_DEPTH_UNIT_MM, adversarial_term, discriminator_loss_terms, encode_batch_predictions,
    generator_outputs, pose_loss_terms,
)

logger = logging.getLogger(__name__)

_D_STREAM = 2
_G_STREAM = 3
_NEGATIVE_STREAM = 4


@dataclass(frozen=True)
class AdvConfig:
    """
    Adversarial training schedule.

    Attributes:
        lam: Weight λ of the adversarial term in the generator loss
        iterations: Number of cycles
        batch_size: Samples per minibatch
        d_steps: Discriminator updates per generator update
        g_learning_rate, d_learning_rate: Adam step sizes
        seed: Batch sampling seed
        depth_unit_mm: Unit of the depth term of the pose loss
        root_depth_mm: Nominal root depth for encoding predictions
    """

    lam: float = 1e-4
    iterations: int = 5000
    batch_size: int = 12
    d_steps: int = 1
    g_learning_rate: float = 2.5e-4
    d_learning_rate: float = 1e-4
    seed: int = 0
    depth_unit_mm: float = DEFAULT_DEPTH_UNIT_MM
    root_depth_mm: float = NOMINAL_ROOT_DEPTH_MM

    def validate(self):
        problems = []
        if self.lam < 0:
            problems.append("lambda must be non-negative")
        if self.iterations <= 0:
            problems.append("iterations must be positive")
        if self.batch_size < 2:
            problems.append("batch size must be at least 2")
        if int(self.d_steps) != self.d_steps or self.d_steps < 1:
            problems.append("d_steps must be an integer >= 1")
        if self.g_learning_rate <= 0 or self.d_learning_rate <= 0:
            problems.append("learning rates must be positive")
        return problems


def _check(value, iteration, name):
    if value is not None and not np.isfinite(value):
        raise NonFiniteError(f"Iteration {iteration}: {name} is not finite ({value})")


class AdversarialTrainer:
    """
    Owns the generator, the discriminator and their optimizers for one run.

    Attributes:
        d_updates: Discriminator updates applied so far
        g_updates: Generator updates applied so far
    """

    def __init__(self, generator, discriminator, lab_samples, wild_samples, config, heatmap_size,
                 validator=None, val_every=0, show_progress=False):
        problems = config.validate()
        if problems:
            raise ValueError(f"Invalid adversarial config: {'; '.join(problems)}")
        self.generator = generator
        self.discriminator = discriminator
        self.lab_samples = [sample for sample in lab_samples if sample.has_3d]
        if not self.lab_samples:
            raise ValueError("Adversarial training needs labeled lab samples")
        self.wild_samples = list(wild_samples)
        self.config = config
        self.heatmap_size = tuple(heatmap_size)
        self.validator = validator
        self.val_every = val_every
        self.show_progress = show_progress
        self.g_optimizer = Adam(generator.trainable_parameters(), lr=config.g_learning_rate)
        self.d_optimizer = Adam(discriminator.parameters(), lr=config.d_learning_rate) \
            if discriminator is not None else None
        self.iteration = 0
        self.d_updates = 0
        self.g_updates = 0
        self.history = TrainHistory()

    @property
    def optimizers(self):
        optimizers = {"opt/g": self.g_optimizer}
        if self.d_optimizer is not None:
            optimizers["opt/d"] = self.d_optimizer
        return optimizers

    def _split_draw(self, count, rng):
        lab_count, wild_count = split_counts(count)
        if not self.wild_samples:
            lab_count, wild_count = count, 0
        return draw(self.lab_samples, lab_count, rng) + draw(self.wild_samples, wild_count, rng)

    def discriminator_step(self, iteration, step):
        """
        One discriminator update.

        Returns:
            Tuple of (loss, real accuracy, fake accuracy)
        """
        rng = iteration_rng(self.config.seed, _D_STREAM, iteration, step)
        real_count = self.config.batch_size - self.config.batch_size // 2
        fake_count = self.config.batch_size // 2
        reals = draw(self.lab_samples, real_count, rng)
        fakes = self._split_draw(fake_count, rng)

        fake_batch = make_batch(fakes, self.heatmap_size)
        heatmaps, depths = generator_outputs(self.generator, fake_batch)
        fake_inputs = [encoding.input for encoding in
                       encode_batch_predictions(heatmaps, depths, fake_batch, self.config.root_depth_mm)]
        real_inputs = [encode_ground_truth(sample, self.heatmap_size) for sample in reals]

        images = np.stack([np.asarray(sample.image, dtype=np.float64) for sample in reals + fakes])
        self.discriminator.zero_grad()
        scores = self.discriminator.forward(images, real_inputs + fake_inputs)
        real_scores, fake_scores = scores[:real_count], scores[real_count:]
        loss, grad_real, grad_fake = discriminator_loss_terms(real_scores, fake_scores)
        _check(loss, iteration, "l_d")
        self.discriminator.backward_arrays(np.concatenate([grad_real, grad_fake]))
        self.d_optimizer.step()
        self.d_updates += 1
        return loss, float(np.mean(real_scores > 0.5)), float(np.mean(fake_scores < 0.5))

    def generator_step(self, iteration):
        """
        One generator update.

        Returns:
            Tuple of (pose loss, generator loss or None without a discriminator)
        """
        rng = iteration_rng(self.config.seed, _G_STREAM, iteration)
        batch = make_batch(self._split_draw(self.config.batch_size, rng), self.heatmap_size)
        self.generator.zero_grad()
        heatmaps, depths = generator_outputs(self.generator, batch)
        pose, grad_heatmaps, grad_depths = pose_loss_terms(heatmaps, depths, batch, self.config.depth_unit_mm)
        _check(pose, iteration, "l_pose")

        loss_g = None
        if self.discriminator is not None:
            encodings = encode_batch_predictions(heatmaps, depths, batch, self.config.root_depth_mm)
            scores = self.discriminator.forward(batch.images, [encoding.input for encoding in encodings])
            classification, grad_scores = adversarial_term(scores)
            loss_g = self.config.lam * classification + pose
            _check(loss_g, iteration, "l_g")
            input_grads = self.discriminator.backward(self.config.lam * grad_scores)
            for row, (encoding, gradient) in enumerate(zip(encodings, input_grads)):
                grad_maps, grad_row_depths = encoding.backward(gradient)
                grad_heatmaps[row] += grad_maps
                grad_depths[row] += grad_row_depths
            # D parameter gradients from this pass are discarded
            self.discriminator.zero_grad()

        self.generator.backward(grad_heatmaps, grad_depths)
        self.g_optimizer.step()
        self.g_updates += 1
        return pose, loss_g

    def step(self):
        """Run one cycle; returns its HistoryRecord."""
        iteration = self.iteration + 1
        loss_d = acc_real = acc_fake = None
        if self.discriminator is not None:
            results = [self.discriminator_step(iteration, k) for k in range(self.config.d_steps)]
            loss_d, acc_real, acc_fake = results[-1]
        pose, loss_g = self.generator_step(iteration)
        self.iteration = iteration

        val_mpjpe = None
        if self.validator is not None and (iteration == self.config.iterations or
                                           (self.val_every and iteration % self.val_every == 0)):
            val_mpjpe = float(self.validator(self.generator))
            logger.info("Adversarial iteration %d: validation MPJPE %.1f mm", iteration, val_mpjpe)
        record = HistoryRecord(iteration=iteration, l_pose=pose, l_d=loss_d, l_g=loss_g,
                               d_acc_real=acc_real, d_acc_fake=acc_fake, val_mpjpe=val_mpjpe)
        self.history.append(record)
        logger.debug("Adversarial iteration %d: l_pose=%.6f l_d=%s l_g=%s", iteration, pose, loss_d, loss_g)
        return record

    def run(self, until=None):
        """Train up to cycle `until` (default: config.iterations)."""
        until = self.config.iterations if until is None else min(until, self.config.iterations)
        progress = tqdm(range(self.iteration, until), desc="adversarial", disable=not self.show_progress)
        for _ in progress:
            record = self.step()
            progress.set_postfix(l_pose=f"{record.l_pose:.4f}")
        return self.history

    def models(self):
        return [self.generator] + ([self.discriminator] if self.discriminator is not None else [])

    def save(self, path, meta=None):
        info = {"stage": "adversarial", "iteration": self.iteration}
        info.update(meta or {})
        save_checkpoint(path, models=self.models(), optimizers=self.optimizers, meta=info)

    def restore(self, checkpoint, history=None):
        """Resume from a Checkpoint written by save()."""
        for model in self.models():
            model.load_state_dict(checkpoint.records)
        for prefix, optimizer in self.optimizers.items():
            optimizer.load_state_dict(checkpoint.records, prefix)
        self.iteration = int(checkpoint.meta.get("iteration", 0))
        self.g_updates = self.iteration
        self.d_updates = self.iteration * self.config.d_steps if self.discriminator is not None else 0
        if history is not None:
            self.history = TrainHistory([record for record in history if record.iteration <= self.iteration])


def adversarial_train(generator, discriminator, lab_samples, wild_samples, config, heatmap_size,
                      validator=None, val_every=0, show_progress=False):
    """
    Alternately optimize the discriminator and the generator.

    Returns:
        Tuple of (generator, discriminator, TrainHistory)
    """
    trainer = AdversarialTrainer(generator, discriminator, lab_samples, wild_samples, config, heatmap_size,
                                 validator=validator, val_every=val_every, show_progress=show_progress)
    history = trainer.run()
    return generator, discriminator, history


def corrupted_encoding(sample, anthropometry, heatmap_size, rng, magnitude=0.5, mode=None):
    """
    Encode an anthropometrically invalid version of a labeled sample's pose.

    The corruption mode is drawn uniformly unless given.
    """
    mode = mode or CORRUPTION_MODES[rng.integers(len(CORRUPTION_MODES))]
    corrupted = corrupt_pose(sample.pose3d, mode, magnitude, rng, anthropometry)
    return encode_pose(corrupted, sample.camera, sample.image.shape, heatmap_size)


def _sanity_batch(samples, anthropometry, heatmap_size, rng, count, magnitude):
    reals = draw(samples, count - count // 2, rng)
    negatives = draw(samples, count // 2, rng)
    inputs = [encode_ground_truth(sample, heatmap_size) for sample in reals]
    inputs += [corrupted_encoding(sample, anthropometry, heatmap_size, rng, magnitude) for sample in negatives]
    images = np.stack([np.asarray(sample.image, dtype=np.float64) for sample in reals + negatives])
    return images, inputs, len(reals)


def train_discriminator_only(discriminator, samples, anthropometry, heatmap_size, iterations=500, batch_size=12,
                             learning_rate=1e-4, magnitude=0.5, seed=0, show_progress=False):
    """
    Train a discriminator to separate ground truth from corrupted poses.

    The generator plays no part: negatives are corrupt_pose copies of
    labeled poses, drawn across all corruption modes.

    Returns:
        TrainHistory with l_d and accuracy columns
    """
    optimizer = Adam(discriminator.parameters(), lr=learning_rate)
    history = TrainHistory()
    for iteration in tqdm(range(1, iterations + 1), desc="discriminator", disable=not show_progress):
        rng = iteration_rng(seed, _NEGATIVE_STREAM, iteration)
        images, inputs, real_count = _sanity_batch(samples, anthropometry, heatmap_size, rng, batch_size,
                                                   magnitude)
        discriminator.zero_grad()
        scores = discriminator.forward(images, inputs)
        loss, grad_real, grad_fake = discriminator_loss_terms(scores[:real_count], scores[real_count:])
        _check(loss, iteration, "l_d")
        discriminator.backward_arrays(np.concatenate([grad_real, grad_fake]))
        optimizer.step()
        history.append(HistoryRecord(iteration=iteration, l_d=loss,
                                     d_acc_real=float(np.mean(scores[:real_count] > 0.5)),
                                     d_acc_fake=float(np.mean(scores[real_count:] < 0.5))))
    return history


def discriminator_accuracy(discriminator, samples, anthropometry, heatmap_size, count=200, magnitude=0.5, seed=1):
    """
    Held-out classification accuracy against corrupted negatives.

    Returns:
        Tuple of (overall, real, fake) accuracies in [0, 1]
    """
    rng = iteration_rng(seed, _NEGATIVE_STREAM, 0)
    images, inputs, real_count = _sanity_batch(samples, anthropometry, heatmap_size, rng, count, magnitude)
    scores = discriminator.forward(images, inputs)
    real = scores[:real_count] > 0.5
    fake = scores[real_count:] < 0.5
    return float(np.mean(np.concatenate([real, fake]))), float(np.mean(real)), float(np.mean(fake))
