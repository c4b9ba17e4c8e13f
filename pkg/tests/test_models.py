"""
Unit tests for the generator, the discriminator and the variant table.
"""

import unittest

import numpy as np

from advpose.encode.encoder import encode_pose
from advpose.errors import NoForwardRecordedError, ShapeMismatchError, UnknownVariantError
from advpose.models.discriminator import GEO, IMAGE, MAPS, SOURCES
from advpose.models.generator import (
    DEPTH_SCALE_MM, END_TO_END, FIX_2D, ORACLE_2D, GeneratorConfig, GeneratorModel, child_seed,
)
from advpose.models.variants import (
    BASELINE, BASELINE_FIX_2D, FULL, FULL_FIX_2D, FULL_NO_PRETRAIN, GEO_VARIANT, MAP, VARIANTS, ModelConfig,
    build_gradcheck_suite, make_discriminator, make_variant, variant_settings,
)
from advpose.nn.gradcheck import PASS_THRESHOLD, check_gradients
from advpose.skeleton.camera import CAMERA, Pose3D, look_at_camera

SMALL = ModelConfig(joint_count=4, image_size=(6, 6), heatmap_size=(4, 4),
                    two_d_widths=(10, 8), depth_widths=(6,), embed_width=5, head_widths=(4,))


def small_generator(mode=END_TO_END, seed=0):
    return GeneratorModel(GeneratorConfig(
        joint_count=4, image_size=(6, 6), heatmap_size=(4, 4),
        two_d_widths=(10, 8), depth_widths=(6,), seed=seed, mode=mode,
    ))


def encodings(count, seed=0):
    rng = np.random.default_rng(seed)
    camera = look_at_camera(0.0, 0.0, 4000.0, (7.5, 7.5), (3.0, 3.0))
    inputs = []
    for _ in range(count):
        coords = rng.normal(0.0, 300.0, (4, 3)) + np.array([0.0, 0.0, 4000.0])
        inputs.append(encode_pose(Pose3D(coords, frame=CAMERA), camera, (6, 6), (4, 4)))
    return inputs


class TestGenerator(unittest.TestCase):
    """Test cases for GeneratorModel."""

    def setUp(self):
        self.images = np.random.default_rng(1).uniform(0.0, 1.0, (3, 6, 6))

    def test_output_shapes(self):
        """Test heatmap and depth shapes for a batch."""
        heatmaps, depths = small_generator().forward(self.images)
        self.assertEqual(heatmaps.shape, (3, 4, 4, 4))
        self.assertEqual(depths.shape, (3, 4))
        self.assertTrue(np.all((heatmaps > 0.0) & (heatmaps < 1.0)))

    def test_flat_images_accepted(self):
        """Test that flattened images give the same outputs."""
        generator = small_generator()
        heatmaps, depths = generator.forward(self.images)
        flat_maps, flat_depths = generator.forward(self.images.reshape(3, 36))
        np.testing.assert_array_equal(heatmaps, flat_maps)
        np.testing.assert_array_equal(depths, flat_depths)

    def test_without_depth(self):
        """Test that with_depth=False skips the depth regressor."""
        _, depths = small_generator().forward(self.images, with_depth=False)
        self.assertIsNone(depths)

    def test_wrong_image_size(self):
        """Test that a wrong image size raises ShapeMismatchError."""
        with self.assertRaises(ShapeMismatchError):
            small_generator().forward(np.zeros((2, 5, 5)))

    def test_unknown_mode(self):
        """Test that an unknown mode is rejected."""
        with self.assertRaises(ValueError):
            small_generator(mode="sideways")

    def test_oracle_needs_heatmaps(self):
        """Test that oracle-2d mode passes ground-truth heatmaps through."""
        generator = small_generator(mode=ORACLE_2D)
        with self.assertRaises(ShapeMismatchError):
            generator.forward(self.images)
        oracle = np.random.default_rng(2).uniform(0.0, 1.0, (3, 4, 4, 4))
        heatmaps, depths = generator.forward(self.images, oracle_heatmaps=oracle)
        np.testing.assert_array_equal(heatmaps, oracle)
        self.assertEqual(depths.shape, (3, 4))

    def test_backward_before_forward(self):
        """Test that backward without a forward raises NoForwardRecordedError."""
        with self.assertRaises(NoForwardRecordedError):
            small_generator().backward(np.zeros((3, 4, 4, 4)))

    def test_depth_gradient_without_depth_pass(self):
        """Test that a depth gradient needs a depth forward pass."""
        generator = small_generator()
        generator.forward(self.images, with_depth=False)
        with self.assertRaises(NoForwardRecordedError):
            generator.backward(grad_depths=np.ones((3, 4)))

    def test_end_to_end_reaches_two_d_module(self):
        """Test that depth gradients flow into the 2D module end to end."""
        generator = small_generator()
        generator.zero_grad()
        generator.forward(self.images)
        generator.backward(grad_depths=np.ones((3, 4)))
        two_d_norm = sum(np.abs(tensor.grad).sum() for tensor in generator.two_d_parameters())
        self.assertGreater(two_d_norm, 0.0)

    def test_fix_2d_leaves_two_d_module_untouched(self):
        """Test that fix-2d mode gives the 2D module zero gradients."""
        generator = small_generator(mode=FIX_2D)
        generator.zero_grad()
        generator.forward(self.images)
        generator.backward(np.ones((3, 4, 4, 4)), np.ones((3, 4)))
        for tensor in generator.two_d_parameters():
            np.testing.assert_array_equal(tensor.grad, np.zeros_like(tensor.value))
        depth_norm = sum(np.abs(tensor.grad).sum() for tensor in generator.depth_parameters())
        self.assertGreater(depth_norm, 0.0)
        self.assertEqual(generator.trainable_parameters(), generator.depth_parameters())

    def test_freeze_two_d(self):
        """Test that freezing switches end-to-end to fix-2d."""
        generator = small_generator()
        self.assertEqual(len(generator.trainable_parameters()), len(generator.parameters()))
        generator.freeze_two_d()
        self.assertEqual(generator.mode, FIX_2D)
        self.assertFalse(generator.trains_two_d)

    def test_backward_two_d_ignores_mode(self):
        """Test that 2D pretraining updates the 2D module even when frozen."""
        generator = small_generator(mode=FIX_2D)
        generator.zero_grad()
        generator.forward(self.images, with_depth=False)
        generator.backward_two_d(np.ones((3, 4, 4, 4)))
        two_d_norm = sum(np.abs(tensor.grad).sum() for tensor in generator.two_d_parameters())
        self.assertGreater(two_d_norm, 0.0)

    def test_depth_scale(self):
        """Test that depths are the regressor output times the depth unit."""
        generator = small_generator()
        for tensor in generator.depth_parameters():
            tensor.value = np.zeros_like(tensor.value)
        generator.depth_regressor.biases[-1].value = np.array([1.0, -1.0, 0.5, 0.0])
        _, depths = generator.forward(self.images)
        np.testing.assert_allclose(depths[0], np.array([1.0, -1.0, 0.5, 0.0]) * DEPTH_SCALE_MM)

    def test_reset_depth_regressor(self):
        """Test that resetting restores the initial depth weights only."""
        generator = small_generator()
        initial = {name: value.copy() for name, value in generator.state_dict().items()}
        for tensor in generator.parameters():
            tensor.value = tensor.value + 1.0
        generator.reset_depth_regressor()
        for tensor in generator.depth_parameters():
            np.testing.assert_array_equal(tensor.value, initial[tensor.name])
        for tensor in generator.two_d_parameters():
            np.testing.assert_array_equal(tensor.value, initial[tensor.name] + 1.0)

    def test_state_round_trip(self):
        """Test that loading a state dict reproduces the outputs."""
        source = small_generator(seed=5)
        target = small_generator(seed=6)
        target.load_state_dict(source.state_dict())
        np.testing.assert_array_equal(source.forward(self.images)[1], target.forward(self.images)[1])

    def test_two_d_only_load(self):
        """Test that a two_d_only load keeps the target's depth regressor."""
        source = small_generator(seed=5)
        target = small_generator(seed=6)
        depth_before = {tensor.name: tensor.value.copy() for tensor in target.depth_parameters()}
        target.load_state_dict(source.state_dict(), two_d_only=True)
        for tensor in target.two_d_parameters():
            np.testing.assert_array_equal(tensor.value, source.state_dict()[tensor.name])
        for tensor in target.depth_parameters():
            np.testing.assert_array_equal(tensor.value, depth_before[tensor.name])

    def test_child_seed(self):
        """Test that child seeds are deterministic and distinct."""
        self.assertEqual(child_seed(3, 0), child_seed(3, 0))
        self.assertNotEqual(child_seed(3, 0), child_seed(3, 1))
        self.assertNotEqual(child_seed(3, 0), child_seed(4, 0))


class TestDiscriminator(unittest.TestCase):
    """Test cases for DiscriminatorModel."""

    def setUp(self):
        self.images = np.random.default_rng(3).uniform(0.0, 1.0, (2, 6, 6))
        self.inputs = encodings(2)

    def test_source_order(self):
        """Test that sources are kept in canonical order."""
        model = make_discriminator(SMALL, (GEO, IMAGE))
        self.assertEqual(model.source_set, (IMAGE, GEO))
        self.assertFalse(model.has_source(MAPS))

    def test_rejects_bad_sources(self):
        """Test that unknown or empty source sets raise ValueError."""
        with self.assertRaises(ValueError):
            make_discriminator(SMALL, ("depth",))
        with self.assertRaises(ValueError):
            make_discriminator(SMALL, ())

    def test_scores_in_unit_interval(self):
        """Test one score per row, strictly inside (0, 1)."""
        scores = make_discriminator(SMALL, SOURCES).forward(self.images, self.inputs)
        self.assertEqual(scores.shape, (2,))
        self.assertTrue(np.all((scores > 0.0) & (scores < 1.0)))

    def test_count_mismatch(self):
        """Test that images and encodings must agree in count."""
        with self.assertRaises(ShapeMismatchError):
            make_discriminator(SMALL, SOURCES).forward(self.images, self.inputs[:1])

    def test_backward_shapes(self):
        """Test that encoding gradients match the encoded arrays."""
        model = make_discriminator(SMALL, SOURCES)
        model.forward(self.images, self.inputs)
        gradients = model.backward(np.ones(2))
        self.assertEqual(len(gradients), 2)
        self.assertEqual(gradients[0].heatmaps.shape, (4, 4, 4))
        self.assertEqual(gradients[0].depth_maps.shape, (4, 4, 4))
        self.assertEqual(gradients[0].descriptor.shape, (6, 4, 4))

    def test_image_only_gives_zero_encoding_gradients(self):
        """Test that an image-only discriminator passes nothing to the encodings."""
        model = make_discriminator(SMALL, (IMAGE,))
        model.forward(self.images, self.inputs)
        for gradient in model.backward(np.ones(2)):
            self.assertFalse(np.any(gradient.heatmaps))
            self.assertFalse(np.any(gradient.depth_maps))
            self.assertFalse(np.any(gradient.descriptor))

    def test_scores_ignore_images_without_image_branch(self):
        """Test that discriminators without the image source do not look at the image."""
        other_images = np.random.default_rng(4).uniform(0.0, 1.0, (2, 6, 6))
        for sources in ((MAPS,), (GEO,), (MAPS, GEO)):
            model = make_discriminator(SMALL, sources, seed=2)
            np.testing.assert_array_equal(model.forward(self.images, self.inputs),
                                          model.forward(other_images, self.inputs))

    def test_backward_before_forward(self):
        """Test that backward without a forward raises NoForwardRecordedError."""
        with self.assertRaises(NoForwardRecordedError):
            make_discriminator(SMALL, SOURCES).backward(np.ones(2))

    def test_state_round_trip(self):
        """Test that loading a state dict reproduces the scores."""
        source = make_discriminator(SMALL, SOURCES, seed=1)
        target = make_discriminator(SMALL, SOURCES, seed=2)
        target.load_state_dict(source.state_dict())
        np.testing.assert_array_equal(source.forward(self.images, self.inputs),
                                      target.forward(self.images, self.inputs))


class TestVariants(unittest.TestCase):
    """Test cases for the variant table and the gradient self-test suite."""

    def test_settings(self):
        """Test what distinguishes each variant."""
        self.assertFalse(variant_settings(BASELINE).adversarial)
        self.assertFalse(variant_settings(BASELINE_FIX_2D).adversarial)
        self.assertEqual(variant_settings(BASELINE_FIX_2D).generator_mode, FIX_2D)
        self.assertEqual(variant_settings(MAP).sources, (IMAGE, MAPS))
        self.assertEqual(variant_settings(GEO_VARIANT).sources, (IMAGE, GEO))
        self.assertEqual(variant_settings(FULL).sources, SOURCES)
        self.assertEqual(variant_settings(FULL_FIX_2D).generator_mode, FIX_2D)
        self.assertFalse(variant_settings(FULL_NO_PRETRAIN).pretrain_depth)
        self.assertEqual(len(VARIANTS), 7)

    def test_unknown_variant(self):
        """Test that an unknown name raises UnknownVariantError."""
        with self.assertRaises(UnknownVariantError):
            variant_settings("Full-plus")
        with self.assertRaises(UnknownVariantError):
            make_variant("Full-plus", SMALL)

    def test_baseline_has_no_discriminator(self):
        """Test that the baseline builds a generator only."""
        generator, discriminator = make_variant(BASELINE, SMALL)
        self.assertIsNone(discriminator)
        self.assertEqual(generator.mode, END_TO_END)

    def test_variant_modes(self):
        """Test that each adversarial variant gets its sources and mode."""
        generator, discriminator = make_variant(FULL_FIX_2D, SMALL, seed=2)
        self.assertEqual(generator.mode, FIX_2D)
        self.assertEqual(discriminator.source_set, SOURCES)
        _, discriminator = make_variant(GEO_VARIANT, SMALL)
        self.assertEqual(discriminator.source_set, (IMAGE, GEO))
        generator, discriminator = make_variant(BASELINE_FIX_2D, SMALL)
        self.assertIsNone(discriminator)
        self.assertEqual(generator.mode, FIX_2D)

    def test_gradcheck_suite_passes(self):
        """Test that every architecture passes the gradient check."""
        cases = build_gradcheck_suite(seed=0)
        self.assertEqual(len(cases), 10)
        for case in cases:
            errors = check_gradients(case.tensors, case.evaluate)
            self.assertLess(max(errors.values()), PASS_THRESHOLD, case.name)


if __name__ == "__main__":
    unittest.main()
