"""
Generator pretraining.

Phase 1 trains the 2D module on the heatmap term for lab and wild images;
phase 2 fine-tunes the whole generator on the full pose loss.
"""

import logging
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from advpose.errors import NonFiniteError
from advpose.nn.checkpoint import save_checkpoint
from advpose.nn.optim import Adam
from advpose.training.batches import draw, iteration_rng, make_batch, split_counts
from advpose.training.history import HistoryRecord, TrainHistory
from advpose.training.losses import DEFAULT_DEPTH_UNIT_MM, generator_outputs, pose_loss_terms

logger = logging.getLogger(__name__)

PHASE_2D = "2d"
PHASE_JOINT = "joint"
_BATCH_STREAM = 1


@dataclass(frozen=True)
class PretrainConfig:
    """
    Pretraining schedule.

    Attributes:
        phase1_iterations: 2D-module iterations
        phase2_iterations: Joint fine-tuning iterations
        batch_size: Samples per batch (half lab, half wild)
        learning_rate: Adam step size
        seed: Batch sampling seed
        depth_unit_mm: Unit of the depth term
    """

    phase1_iterations: int = 2000
    phase2_iterations: int = 3000
    batch_size: int = 12
    learning_rate: float = 2.5e-4
    seed: int = 0
    depth_unit_mm: float = DEFAULT_DEPTH_UNIT_MM

    @property
    def iterations(self):
        return self.phase1_iterations + self.phase2_iterations

    def validate(self):
        problems = []
        if self.phase1_iterations < 0 or self.phase2_iterations < 0:
            problems.append("iteration counts must be non-negative")
        if self.iterations <= 0:
            problems.append("pretraining needs at least one iteration")
        if self.batch_size <= 0:
            problems.append("batch size must be positive")
        if self.learning_rate <= 0:
            problems.append("learning rate must be positive")
        if self.depth_unit_mm <= 0:
            problems.append("depth unit must be positive")
        return problems


class GeneratorPretrainer:
    """
    Runs the two pretraining phases with resumable iteration numbering.

    Iterations are numbered from 1; iterations up to phase1_iterations belong
    to phase 1.
    """

    def __init__(self, generator, lab_samples, wild_samples, config, heatmap_size,
                 validator=None, val_every=0, show_progress=False):
        problems = config.validate()
        if problems:
            raise ValueError(f"Invalid pretraining config: {'; '.join(problems)}")
        self.generator = generator
        self.lab_samples = list(lab_samples)
        self.wild_samples = list(wild_samples)
        self.config = config
        self.heatmap_size = tuple(heatmap_size)
        self.validator = validator
        self.val_every = val_every
        self.show_progress = show_progress
        self.two_d_optimizer = Adam(generator.two_d_parameters(), lr=config.learning_rate)
        self.depth_optimizer = Adam(generator.depth_parameters(), lr=config.learning_rate)
        self.iteration = 0
        self.history = TrainHistory()

    @property
    def optimizers(self):
        return {"opt/two_d": self.two_d_optimizer, "opt/depth": self.depth_optimizer}

    def phase_of(self, iteration):
        return PHASE_2D if iteration <= self.config.phase1_iterations else PHASE_JOINT

    def _batch(self, iteration):
        rng = iteration_rng(self.config.seed, _BATCH_STREAM, iteration)
        lab_count, wild_count = split_counts(self.config.batch_size)
        if not self.wild_samples:
            lab_count, wild_count = self.config.batch_size, 0
        samples = draw(self.lab_samples, lab_count, rng) + draw(self.wild_samples, wild_count, rng)
        return make_batch(samples, self.heatmap_size)

    def step(self):
        """Run one iteration; returns its HistoryRecord."""
        iteration = self.iteration + 1
        batch = self._batch(iteration)
        self.generator.zero_grad()
        if self.phase_of(iteration) == PHASE_2D:
            heatmaps, _ = generator_outputs(self.generator, batch, with_depth=False)
            loss, grad_heatmaps, _ = pose_loss_terms(heatmaps, None, batch, self.config.depth_unit_mm)
            _check(loss, iteration, "l_pose")
            self.generator.backward_two_d(grad_heatmaps)
            self.two_d_optimizer.step()
        else:
            heatmaps, depths = generator_outputs(self.generator, batch)
            loss, grad_heatmaps, grad_depths = pose_loss_terms(heatmaps, depths, batch, self.config.depth_unit_mm)
            _check(loss, iteration, "l_pose")
            self.generator.backward(grad_heatmaps, grad_depths)
            if self.generator.trains_two_d:
                self.two_d_optimizer.step()
            self.depth_optimizer.step()
        self.iteration = iteration

        val_mpjpe = None
        if self.validator is not None and self.phase_of(iteration) == PHASE_JOINT and \
                (iteration == self.config.iterations or (self.val_every and iteration % self.val_every == 0)):
            val_mpjpe = float(self.validator(self.generator))
            logger.info("Pretrain iteration %d: validation MPJPE %.1f mm", iteration, val_mpjpe)
        record = HistoryRecord(iteration=iteration, l_pose=loss, val_mpjpe=val_mpjpe)
        self.history.append(record)
        logger.debug("Pretrain iteration %d (%s): l_pose=%.6f", iteration, self.phase_of(iteration), loss)
        return record

    def run(self, until=None):
        """
        Train up to iteration `until` (default: the end of the schedule).

        Returns:
            TrainHistory of every iteration run so far
        """
        until = self.config.iterations if until is None else min(until, self.config.iterations)
        if self.iteration < self.config.phase1_iterations:
            logger.info("Pretraining the 2D module for %d iterations", self.config.phase1_iterations)
        progress = tqdm(range(self.iteration, until), desc="pretrain", disable=not self.show_progress)
        for _ in progress:
            if self.iteration == self.config.phase1_iterations and self.config.phase2_iterations:
                logger.info("Joint fine-tuning for %d iterations", self.config.phase2_iterations)
            record = self.step()
            progress.set_postfix(l_pose=f"{record.l_pose:.4f}")
        return self.history

    def save(self, path, meta=None):
        """Checkpoint the generator, the optimizer and the iteration counter."""
        info = {"stage": "pretrain", "iteration": self.iteration, "phase": self.phase_of(max(self.iteration, 1))}
        info.update(meta or {})
        save_checkpoint(path, models=[self.generator], optimizers=self.optimizers, meta=info)

    def restore(self, checkpoint, history=None):
        """Resume from a Checkpoint written by save()."""
        self.generator.load_state_dict(checkpoint.records)
        for prefix, optimizer in self.optimizers.items():
            optimizer.load_state_dict(checkpoint.records, prefix)
        self.iteration = int(checkpoint.meta.get("iteration", 0))
        if history is not None:
            self.history = TrainHistory([record for record in history if record.iteration <= self.iteration])
        logger.info("Resumed pretraining at iteration %d", self.iteration)


def _check(value, iteration, name):
    if not np.isfinite(value):
        raise NonFiniteError(f"Iteration {iteration}: {name} is not finite ({value})")


def pretrain_generator(generator, lab_samples, wild_samples, config, heatmap_size, validator=None,
                       val_every=0, show_progress=False):
    """
    Pretrain a generator on lab and wild samples.

    Returns:
        Tuple of (generator, TrainHistory)
    """
    trainer = GeneratorPretrainer(generator, lab_samples, wild_samples, config, heatmap_size,
                                  validator=validator, val_every=val_every, show_progress=show_progress)
    return generator, trainer.run()
