"""
Unit tests for generator pretraining and adversarial training.
"""

import os
import shutil
import tempfile
import unittest
from unittest.mock import patch

import numpy as np
import pytest

from advpose.data.anthropometry import default_anthropometry
from advpose.data.dataset import generate_dataset
from advpose.data.domains import default_domains
from advpose.encode.encoder import encode_ground_truth
from advpose.models.discriminator import GEO, SOURCES
from advpose.models.generator import END_TO_END, FIX_2D
from advpose.models.variants import ModelConfig, make_discriminator, make_generator
from advpose.nn.checkpoint import read_checkpoint
from advpose.training.adversarial import (
    AdvConfig, AdversarialTrainer, discriminator_accuracy, train_discriminator_only,
)
from advpose.training.pretrain import PHASE_2D, PHASE_JOINT, GeneratorPretrainer, PretrainConfig

HEATMAP_SIZE = (8, 8)
TINY = ModelConfig(joint_count=16, image_size=(32, 32), heatmap_size=HEATMAP_SIZE,
                   two_d_widths=(12,), depth_widths=(8,), embed_width=6, head_widths=(4,))


def snapshot(tensors):
    return {tensor.name: tensor.value.copy() for tensor in tensors}


class TrainingTestCase(unittest.TestCase):
    """Shared tiny datasets and a scratch directory."""

    @classmethod
    def setUpClass(cls):
        domains = default_domains()
        cls.anthropometry = default_anthropometry()
        cls.lab = generate_dataset(domains["lab"], cls.anthropometry, 6, 11).samples
        cls.wild = generate_dataset(domains["wild"], cls.anthropometry, 6, 12).samples

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        """Tear down test fixtures."""
        shutil.rmtree(self.temp_dir)


class TestGeneratorPretrainer(TrainingTestCase):
    """Test cases for GeneratorPretrainer."""

    def make_trainer(self, validator=None, seed=0):
        config = PretrainConfig(phase1_iterations=2, phase2_iterations=2, batch_size=4, seed=seed)
        return GeneratorPretrainer(make_generator(TINY, seed=seed), self.lab, self.wild, config, HEATMAP_SIZE,
                                   validator=validator)

    def test_phases(self):
        """Test that iterations after phase 1 belong to the joint phase."""
        trainer = self.make_trainer()
        self.assertEqual(trainer.phase_of(2), PHASE_2D)
        self.assertEqual(trainer.phase_of(3), PHASE_JOINT)

    def test_phase_one_leaves_depth_regressor(self):
        """Test that 2D pretraining does not move the depth regressor."""
        trainer = self.make_trainer()
        depth_before = snapshot(trainer.generator.depth_parameters())
        two_d_before = snapshot(trainer.generator.two_d_parameters())
        trainer.run(until=2)
        for tensor in trainer.generator.depth_parameters():
            np.testing.assert_array_equal(tensor.value, depth_before[tensor.name])
        moved = [not np.array_equal(tensor.value, two_d_before[tensor.name])
                 for tensor in trainer.generator.two_d_parameters()]
        self.assertTrue(any(moved))

    def test_history_and_validation(self):
        """Test one record per iteration and validation at the end."""
        calls = []

        def validator(generator):
            calls.append(generator)
            return 123.5

        history = self.make_trainer(validator=validator).run()
        self.assertEqual([record.iteration for record in history], [1, 2, 3, 4])
        self.assertEqual(len(calls), 1)
        self.assertEqual(history.last_value("val_mpjpe"), 123.5)
        self.assertTrue(all(record.l_pose >= 0.0 for record in history))

    def test_invalid_config(self):
        """Test that a schedule without iterations is rejected."""
        config = PretrainConfig(phase1_iterations=0, phase2_iterations=0)
        with self.assertRaises(ValueError):
            GeneratorPretrainer(make_generator(TINY), self.lab, self.wild, config, HEATMAP_SIZE)

    def test_resume_matches_uninterrupted_run(self):
        """Test that stopping, saving and restoring changes nothing."""
        straight = self.make_trainer()
        straight.run()

        first = self.make_trainer()
        first.run(until=3)
        path = os.path.join(self.temp_dir, "pretrain.ckpt")
        first.save(path)
        resumed = self.make_trainer()
        resumed.restore(read_checkpoint(path), history=first.history)
        resumed.run()

        self.assertEqual(resumed.iteration, 4)
        for name, value in straight.generator.state_dict().items():
            np.testing.assert_allclose(resumed.generator.state_dict()[name], value, rtol=0.0, atol=1e-12)
        self.assertEqual(len(resumed.history), 4)


class TestAdversarialTrainer(TrainingTestCase):
    """Test cases for AdversarialTrainer."""

    def make_trainer(self, sources=SOURCES, mode=None, d_steps=1, iterations=3):
        generator = make_generator(TINY, seed=1, mode=mode or END_TO_END)
        discriminator = make_discriminator(TINY, sources, seed=1) if sources else None
        config = AdvConfig(lam=0.5, iterations=iterations, batch_size=4, d_steps=d_steps, seed=2)
        return AdversarialTrainer(generator, discriminator, self.lab, self.wild, config, HEATMAP_SIZE)

    def test_records_every_loss(self):
        """Test that adversarial cycles record pose, D and G losses."""
        history = self.make_trainer().run()
        self.assertEqual(len(history), 3)
        for record in history:
            self.assertGreaterEqual(record.l_d, 0.0)
            self.assertGreaterEqual(record.l_g, record.l_pose)
            self.assertIn(record.d_acc_real, (0.0, 0.5, 1.0))

    def test_discriminator_reals_come_from_lab(self):
        """Test that only labeled lab samples are encoded as discriminator reals."""
        with patch("advpose.training.adversarial.encode_ground_truth", wraps=encode_ground_truth) as mock_encode:
            trainer = self.make_trainer(d_steps=2, iterations=3)
            trainer.run()
        reals = [call.args[0] for call in mock_encode.call_args_list]
        # two reals per discriminator step, two steps per cycle
        self.assertEqual(len(reals), 3 * 2 * 2)
        self.assertTrue(all(sample.domain == "lab" and sample.has_3d for sample in reals))
        self.assertTrue(all(any(sample is lab for lab in self.lab) for sample in reals))

    def test_without_discriminator(self):
        """Test that the baseline trains on the pose loss alone."""
        trainer = self.make_trainer(sources=())
        history = trainer.run()
        self.assertIsNone(history.last_value("l_d"))
        self.assertIsNone(history.last_value("l_g"))
        self.assertEqual(trainer.d_updates, 0)
        self.assertEqual(trainer.g_updates, 3)
        self.assertEqual(list(trainer.optimizers), ["opt/g"])

    def test_update_ratio(self):
        """Test that d_steps discriminator updates precede each generator update."""
        trainer = self.make_trainer(d_steps=2, iterations=2)
        trainer.run()
        self.assertEqual(trainer.d_updates, 4)
        self.assertEqual(trainer.g_updates, 2)

    def test_fix_2d_keeps_two_d_module(self):
        """Test that fix-2d training leaves the 2D module untouched."""
        trainer = self.make_trainer(mode=FIX_2D, iterations=2)
        before = snapshot(trainer.generator.two_d_parameters())
        trainer.run()
        for tensor in trainer.generator.two_d_parameters():
            np.testing.assert_array_equal(tensor.value, before[tensor.name])

    def test_needs_labeled_lab_samples(self):
        """Test that training without labeled samples is refused."""
        config = AdvConfig(iterations=1, batch_size=4)
        with self.assertRaises(ValueError):
            AdversarialTrainer(make_generator(TINY), None, self.wild, self.wild, config, HEATMAP_SIZE)

    def test_invalid_config(self):
        """Test that fractional d_steps and tiny batches are rejected."""
        self.assertTrue(AdvConfig(d_steps=1.5).validate())
        self.assertTrue(AdvConfig(batch_size=1).validate())
        self.assertTrue(AdvConfig(lam=-1.0).validate())
        self.assertEqual(AdvConfig().validate(), [])

    def test_resume_matches_uninterrupted_run(self):
        """Test that a restored run reproduces both models exactly."""
        straight = self.make_trainer(iterations=4)
        straight.run()

        first = self.make_trainer(iterations=4)
        first.run(until=2)
        path = os.path.join(self.temp_dir, "adversarial.ckpt")
        first.save(path)
        resumed = self.make_trainer(iterations=4)
        resumed.restore(read_checkpoint(path), history=first.history)
        resumed.run()

        for model, reference in ((resumed.generator, straight.generator),
                                 (resumed.discriminator, straight.discriminator)):
            for name, value in reference.state_dict().items():
                np.testing.assert_allclose(model.state_dict()[name], value, rtol=0.0, atol=1e-12)
        self.assertEqual(resumed.d_updates, 4)


class TestDiscriminatorSanity(TrainingTestCase):
    """Test cases for discriminator-only training against corrupted poses."""

    def test_history_and_accuracy_ranges(self):
        """Test the history shape and accuracy bounds."""
        discriminator = make_discriminator(TINY, SOURCES, seed=3)
        history = train_discriminator_only(discriminator, self.lab, self.anthropometry, HEATMAP_SIZE,
                                           iterations=3, batch_size=4)
        self.assertEqual(len(history), 3)
        self.assertIsNotNone(history.last_value("l_d"))
        overall, real, fake = discriminator_accuracy(discriminator, self.lab, self.anthropometry, HEATMAP_SIZE,
                                                     count=10)
        for value in (overall, real, fake):
            self.assertGreaterEqual(value, 0.0)
            self.assertLessEqual(value, 1.0)

    @pytest.mark.slow
    def test_separates_held_out_corruptions(self):
        """Test that a trained descriptor discriminator rejects corrupted poses it has not seen."""
        domains = default_domains()
        train = generate_dataset(domains["lab"], self.anthropometry, 1500, 21).samples
        held_out = generate_dataset(domains["lab"], self.anthropometry, 200, 22).samples
        config = ModelConfig(joint_count=16, image_size=(32, 32), heatmap_size=HEATMAP_SIZE,
                             embed_width=64, head_widths=(32,))
        discriminator = make_discriminator(config, (GEO,), seed=5)
        history = train_discriminator_only(discriminator, train, self.anthropometry, HEATMAP_SIZE,
                                           iterations=800, batch_size=32, learning_rate=1e-3, seed=7)
        self.assertLess(np.mean([record.l_d for record in history.records[-50:]]),
                        np.mean([record.l_d for record in history.records[:50]]))
        overall, _, _ = discriminator_accuracy(discriminator, held_out, self.anthropometry, HEATMAP_SIZE,
                                               count=200, seed=9)
        self.assertGreaterEqual(overall, 0.9)


if __name__ == "__main__":
    unittest.main()
