"""
Unit tests for dataset generation and the dataset file format.
"""

import filecmp
import os
import shutil
import tempfile
import unittest

import numpy as np

from advpose.data.anthropometry import default_anthropometry
from advpose.data.dataset import (
    HEADER_PREFIX, PROJECTION_TOLERANCE_PX, generate_dataset, read_dataset, write_dataset,
)
from advpose.data.domains import default_domains
from advpose.errors import DatasetFormatError


class TestDataset(unittest.TestCase):
    """Test cases for generate_dataset, write_dataset and read_dataset."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()
        self.model = default_anthropometry()
        self.domains = default_domains()

    def tearDown(self):
        """Tear down test fixtures."""
        shutil.rmtree(self.temp_dir)

    def path(self, name):
        return os.path.join(self.temp_dir, name)

    def test_generation_is_deterministic(self):
        """Test that two runs write byte-identical files."""
        generate_dataset(self.domains["lab"], self.model, 10, 7, path=self.path("a.advds"))
        generate_dataset(self.domains["lab"], self.model, 10, 7, path=self.path("b.advds"))
        self.assertTrue(filecmp.cmp(self.path("a.advds"), self.path("b.advds"), shallow=False))

    def test_workers_do_not_change_output(self):
        """Test that threaded generation matches serial generation."""
        generate_dataset(self.domains["wild"], self.model, 12, 3, path=self.path("serial.advds"))
        generate_dataset(self.domains["wild"], self.model, 12, 3, path=self.path("threads.advds"), workers=4)
        self.assertTrue(filecmp.cmp(self.path("serial.advds"), self.path("threads.advds"), shallow=False))

    def test_different_seeds_differ(self):
        """Test that the seed changes the samples."""
        first = generate_dataset(self.domains["xfer"], self.model, 3, 0)
        second = generate_dataset(self.domains["xfer"], self.model, 3, 1)
        self.assertFalse(np.array_equal(first.samples[0].pose3d.coords, second.samples[0].pose3d.coords))

    def test_wild_samples_have_no_3d(self):
        """Test label discipline of the wild domain."""
        dataset = generate_dataset(self.domains["wild"], self.model, 10, 0, path=self.path("wild.advds"))
        loaded = read_dataset(self.path("wild.advds"))
        self.assertFalse(loaded.has_3d_labels)
        self.assertTrue(all(sample.pose3d is None for sample in dataset.samples))
        self.assertTrue(all(not sample.has_3d for sample in loaded.samples))

    def test_lab_samples_reproject(self):
        """Test that every loaded lab sample matches its projection."""
        generate_dataset(self.domains["lab"], self.model, 10, 2, path=self.path("lab.advds"))
        loaded = read_dataset(self.path("lab.advds"))
        self.assertEqual(len(loaded), 10)
        for sample in loaded.samples:
            self.assertLess(sample.projection_error(), PROJECTION_TOLERANCE_PX)
            self.assertTrue(np.all(sample.pose3d.coords[:, 2] > 0))

    def test_write_read_preserves_samples(self):
        """Test that the file keeps poses, cameras and images exactly."""
        dataset = generate_dataset(self.domains["lab"], self.model, 4, 5, path=self.path("lab.advds"))
        loaded = read_dataset(self.path("lab.advds"))
        self.assertEqual(loaded.domain, "lab")
        self.assertEqual(loaded.image_size, (32, 32))
        for original, sample in zip(dataset.samples, loaded.samples):
            self.assertEqual(original.id, sample.id)
            np.testing.assert_array_equal(original.pose2d.coords, sample.pose2d.coords)
            np.testing.assert_array_equal(original.pose3d.coords, sample.pose3d.coords)
            np.testing.assert_array_equal(original.image, sample.image)
            self.assertTrue(original.camera.same_as(sample.camera))

    def test_reading_does_not_modify_file(self):
        """Test that loading leaves the file unchanged."""
        generate_dataset(self.domains["lab"], self.model, 3, 0, path=self.path("lab.advds"))
        with open(self.path("lab.advds"), "rb") as handle:
            before = handle.read()
        read_dataset(self.path("lab.advds"))
        with open(self.path("lab.advds"), "rb") as handle:
            self.assertEqual(handle.read(), before)

    def test_images_show_the_figure(self):
        """Test that rendered images are binary and non-empty."""
        dataset = generate_dataset(self.domains["lab"], self.model, 5, 0)
        for sample in dataset.samples:
            self.assertGreater(sample.image.sum(), 0)
            self.assertTrue(set(np.unique(sample.image)) <= {0.0, 1.0})

    def test_non_positive_size(self):
        """Test that n <= 0 is rejected."""
        with self.assertRaises(ValueError):
            generate_dataset(self.domains["lab"], self.model, 0, 0)

    def test_missing_file(self):
        """Test reading a missing dataset."""
        with self.assertRaises(FileNotFoundError):
            read_dataset(self.path("absent.advds"))

    def test_unlabeled_file_with_3d_labels_is_rejected(self):
        """Test that 3D poses in an unlabeled file are an error."""
        dataset = generate_dataset(self.domains["lab"], self.model, 2, 0)
        dataset.has_3d_labels = False
        write_dataset(dataset, self.path("bad.advds"))
        with self.assertRaises(DatasetFormatError):
            read_dataset(self.path("bad.advds"))

    def test_bad_header(self):
        """Test header validation."""
        with open(self.path("bad.advds"), "w") as handle:
            handle.write("not a dataset\n")
        with self.assertRaises(DatasetFormatError):
            read_dataset(self.path("bad.advds"))
        with open(self.path("bad.advds"), "w") as handle:
            handle.write(f"{HEADER_PREFIX} version=9 domain=lab joints=16 image=32x32 has_3d_labels=1 count=0\n")
        with self.assertRaises(DatasetFormatError):
            read_dataset(self.path("bad.advds"))

    def test_count_mismatch(self):
        """Test that a truncated file is detected."""
        generate_dataset(self.domains["lab"], self.model, 3, 0, path=self.path("lab.advds"))
        with open(self.path("lab.advds"), "r") as handle:
            lines = handle.read().splitlines()
        with open(self.path("lab.advds"), "w") as handle:
            handle.write("\n".join(lines[:-1]) + "\n")
        with self.assertRaises(DatasetFormatError):
            read_dataset(self.path("lab.advds"))

    def test_tampered_pose_is_detected(self):
        """Test the projection consistency check."""
        generate_dataset(self.domains["lab"], self.model, 1, 0, path=self.path("lab.advds"))
        with open(self.path("lab.advds"), "r") as handle:
            header, record = handle.read().splitlines()
        fields = record.split("\t")
        pose2d = np.frombuffer(bytes.fromhex(fields[3]), dtype="<f8").copy()
        pose2d[0] += 1.0
        fields[3] = pose2d.tobytes().hex()
        with open(self.path("lab.advds"), "w") as handle:
            handle.write(header + "\n" + "\t".join(fields) + "\n")
        with self.assertRaises(DatasetFormatError):
            read_dataset(self.path("lab.advds"))

    def test_header_token_without_value(self):
        """Test that a header token lacking '=' is a format error."""
        with open(self.path("bad.advds"), "w") as handle:
            handle.write(f"{HEADER_PREFIX} version=1 domain=lab joints=16 image=32x32 has_3d_labels count=0\n")
        with self.assertRaises(DatasetFormatError):
            read_dataset(self.path("bad.advds"))

    def rewrite_record(self, column, value):
        generate_dataset(self.domains["lab"], self.model, 1, 0, path=self.path("lab.advds"))
        with open(self.path("lab.advds"), "r") as handle:
            header, record = handle.read().splitlines()
        fields = record.split("\t")
        fields[column] = value
        with open(self.path("lab.advds"), "w") as handle:
            handle.write(header + "\n" + "\t".join(fields) + "\n")

    def test_bad_camera_is_a_format_error(self):
        """Test that a camera with a non-orthonormal rotation is a format error."""
        camera = np.arange(16, dtype="<f8") + 1.0
        self.rewrite_record(5, camera.tobytes().hex())
        with self.assertRaises(DatasetFormatError):
            read_dataset(self.path("lab.advds"))

    def test_bad_sample_id_is_a_format_error(self):
        """Test that a non-numeric sample id is a format error."""
        self.rewrite_record(0, "first")
        with self.assertRaises(DatasetFormatError):
            read_dataset(self.path("lab.advds"))


if __name__ == "__main__":
    unittest.main()
