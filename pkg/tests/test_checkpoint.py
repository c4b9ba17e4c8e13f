"""
Unit tests for binary checkpoints.
"""

import os
import shutil
import struct
import tempfile
import unittest

import numpy as np

from advpose.errors import BadMagicError, CheckpointError, VersionMismatchError
from advpose.nn.checkpoint import MAGIC, read_checkpoint, save_checkpoint, write_checkpoint
from advpose.nn.dense import RELU, SIGMOID, DenseNet, DenseNetSpec
from advpose.nn.optim import Adam


class TestCheckpoint(unittest.TestCase):
    """Test cases for checkpoint reading and writing."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()
        self.path = os.path.join(self.temp_dir, "runs", "model.ckpt")

    def tearDown(self):
        """Tear down test fixtures."""
        shutil.rmtree(self.temp_dir)

    def test_records_round_trip_bitwise(self):
        """Test that arrays of any rank come back bit-identical."""
        rng = np.random.default_rng(0)
        records = {"a": rng.standard_normal((3, 4)), "b": rng.standard_normal(5),
                   "c": np.array(2.5), "d": rng.standard_normal((2, 1, 3))}
        write_checkpoint(self.path, records, meta={"variant": "Full", "iteration": 12})
        checkpoint = read_checkpoint(self.path)
        self.assertEqual(list(checkpoint.records), list(records))
        for name, value in records.items():
            np.testing.assert_array_equal(checkpoint.records[name], value)
            self.assertEqual(checkpoint.records[name].shape, value.shape)
        self.assertEqual(checkpoint.meta, {"iteration": "12", "variant": "Full"})

    def test_model_and_optimizer(self):
        """Test save_checkpoint with a network and its optimizer."""
        net = DenseNet(DenseNetSpec(3, (4, 1), (RELU, SIGMOID), seed=1), name="d/head")
        optimizer = Adam(net.parameters())
        net.forward(np.ones((2, 3)))
        net.backward(np.ones((2, 1)))
        optimizer.step()
        save_checkpoint(self.path, models=[net], optimizers={"opt/d": optimizer}, meta={"stage": "adversarial"})
        checkpoint = read_checkpoint(self.path)

        restored = DenseNet(DenseNetSpec(3, (4, 1), (RELU, SIGMOID), seed=2), name="d/head")
        restored.load_state_dict(checkpoint.records)
        np.testing.assert_array_equal(restored.forward(np.ones((1, 3))), net.forward(np.ones((1, 3))))
        self.assertEqual(set(checkpoint.section("opt/d/")),
                         {"opt/d/step"} | {f"opt/d/{k}/{t.name}" for k in "mv" for t in net.parameters()})
        self.assertEqual(checkpoint.meta["stage"], "adversarial")

    def test_bad_magic(self):
        """Test that foreign files are rejected."""
        os.makedirs(os.path.dirname(self.path))
        with open(self.path, "wb") as handle:
            handle.write(b"NOTACKPT" + b"\x00" * 16)
        with self.assertRaises(BadMagicError):
            read_checkpoint(self.path)

    def test_truncated_file(self):
        """Test that a cut-off file is rejected."""
        write_checkpoint(self.path, {"w": np.ones((10, 10))})
        with open(self.path, "rb") as handle:
            data = handle.read()
        with open(self.path, "wb") as handle:
            handle.write(data[:-20])
        with self.assertRaises(BadMagicError):
            read_checkpoint(self.path)

    def test_version_mismatch(self):
        """Test that a future format version is rejected."""
        os.makedirs(os.path.dirname(self.path))
        with open(self.path, "wb") as handle:
            handle.write(MAGIC + struct.pack("<II", 99, 0))
        with self.assertRaises(VersionMismatchError):
            read_checkpoint(self.path)

    def test_errors_are_io_errors(self):
        """Test the checkpoint error hierarchy."""
        self.assertTrue(issubclass(BadMagicError, CheckpointError))
        self.assertTrue(issubclass(CheckpointError, IOError))

    def test_missing_file(self):
        """Test reading a checkpoint that does not exist."""
        with self.assertRaises(FileNotFoundError):
            read_checkpoint(os.path.join(self.temp_dir, "absent.ckpt"))

    def test_meta_key_with_colon(self):
        """Test that ambiguous metadata keys are refused."""
        with self.assertRaises(ValueError):
            write_checkpoint(self.path, {}, meta={"a:b": 1})


if __name__ == "__main__":
    unittest.main()
