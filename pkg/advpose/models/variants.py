"""
Model variants of the ablation and the gradient self-test suite.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, NamedTuple

import numpy as np

from advpose.encode.encoder import encode_pose, encode_prediction, network_arrays
from advpose.errors import UnknownVariantError
from advpose.models.discriminator import (
    DiscriminatorConfig, DiscriminatorModel, GEO, IMAGE, MAPS, SOURCES,
)
from advpose.models.generator import END_TO_END, FIX_2D, GeneratorConfig, GeneratorModel
from advpose.nn.dense import DenseNet, DenseNetSpec, IDENTITY, RELU, SIGMOID
from advpose.nn.gradcheck import check_loss
from advpose.nn.losses import bce, bce_grad
from advpose.skeleton.camera import CAMERA, Pose3D, look_at_camera

logger = logging.getLogger(__name__)

BASELINE = "Baseline"
BASELINE_FIX_2D = "Baseline-fix2D"
MAP = "Map"
GEO_VARIANT = "Geo"
FULL = "Full"
FULL_FIX_2D = "Full-fix2D"
FULL_NO_PRETRAIN = "Full-no-pretrain"
VARIANTS = (BASELINE, BASELINE_FIX_2D, MAP, GEO_VARIANT, FULL, FULL_FIX_2D, FULL_NO_PRETRAIN)


@dataclass(frozen=True)
class VariantSettings:
    """
    What distinguishes one ablation variant.

    Attributes:
        name: Variant name
        sources: Discriminator sources; empty means no discriminator
        generator_mode: Mode of the generator during adversarial training
        pretrain_depth: Whether the depth regressor keeps its pretrained weights
    """

    name: str
    sources: tuple
    generator_mode: str = END_TO_END
    pretrain_depth: bool = True

    @property
    def adversarial(self):
        return bool(self.sources)


_SETTINGS = {
    BASELINE: VariantSettings(BASELINE, ()),
    BASELINE_FIX_2D: VariantSettings(BASELINE_FIX_2D, (), generator_mode=FIX_2D),
    MAP: VariantSettings(MAP, (IMAGE, MAPS)),
    GEO_VARIANT: VariantSettings(GEO_VARIANT, (IMAGE, GEO)),
    FULL: VariantSettings(FULL, SOURCES),
    FULL_FIX_2D: VariantSettings(FULL_FIX_2D, SOURCES, generator_mode=FIX_2D),
    FULL_NO_PRETRAIN: VariantSettings(FULL_NO_PRETRAIN, SOURCES, pretrain_depth=False),
}


@dataclass(frozen=True)
class ModelConfig:
    """Layer sizes shared by every variant."""

    joint_count: int = 16
    image_size: tuple = (32, 32)
    heatmap_size: tuple = (16, 16)
    two_d_widths: tuple = (1024, 1024)
    depth_widths: tuple = (512, 256)
    embed_width: int = 128
    head_widths: tuple = (128, 64)


def variant_settings(name):
    """
    Look up a variant.

    Raises:
        UnknownVariantError: If the name is not one of VARIANTS
    """
    if name not in _SETTINGS:
        raise UnknownVariantError(f"Unknown variant '{name}' (expected one of: {', '.join(VARIANTS)})")
    return _SETTINGS[name]


def make_generator(model_config, seed=0, mode=END_TO_END):
    return GeneratorModel(GeneratorConfig(
        joint_count=model_config.joint_count,
        image_size=tuple(model_config.image_size),
        heatmap_size=tuple(model_config.heatmap_size),
        two_d_widths=tuple(model_config.two_d_widths),
        depth_widths=tuple(model_config.depth_widths),
        seed=seed,
        mode=mode,
    ))


def make_discriminator(model_config, sources, seed=0):
    return DiscriminatorModel(DiscriminatorConfig(
        joint_count=model_config.joint_count,
        image_size=tuple(model_config.image_size),
        heatmap_size=tuple(model_config.heatmap_size),
        sources=tuple(sources),
        embed_width=model_config.embed_width,
        head_widths=tuple(model_config.head_widths),
        seed=seed,
    ))


def make_variant(variant, model_config=None, seed=0):
    """
    Build the generator and discriminator of a variant.

    Args:
        variant: One of VARIANTS
        model_config: ModelConfig (defaults when None)
        seed: Initialization seed

    Returns:
        Tuple of (GeneratorModel, DiscriminatorModel or None for the baselines)

    Raises:
        UnknownVariantError: If the variant is unknown
    """
    settings = variant_settings(variant)
    model_config = model_config or ModelConfig()
    generator = make_generator(model_config, seed=seed, mode=settings.generator_mode)
    discriminator = None
    if settings.adversarial:
        discriminator = make_discriminator(model_config, settings.sources, seed=seed)
    logger.debug("Built variant %s (sources=%s, mode=%s)", variant, settings.sources, generator.mode)
    return generator, discriminator


class GradcheckCase(NamedTuple):
    """One architecture to gradient-check: tensors and a loss evaluator."""

    name: str
    tensors: List
    evaluate: Callable


def _net_case(name, spec, inputs, seed):
    net = DenseNet(spec, name=name)
    loss_fn = check_loss((inputs.shape[0], spec.widths[-1]), seed=seed)

    def evaluate(with_grad):
        output = net.forward(inputs)
        loss, grad = loss_fn(output)
        if with_grad:
            net.backward(grad)
        return loss

    return GradcheckCase(name, net.parameters(), evaluate)


def build_gradcheck_suite(seed=0):
    """
    Reduced-width copies of every architecture in the package.

    Covers the 2D module, the depth regressor, each discriminator branch,
    heads for two and three sources, the full generator, the full
    discriminator, and the generator trained through the encoder and a
    discriminator.

    Returns:
        List of GradcheckCase
    """
    rng = np.random.default_rng(seed)
    joints, image_size, heatmap_size = 5, (6, 6), (5, 5)
    batch = 3
    small = ModelConfig(joint_count=joints, image_size=image_size, heatmap_size=heatmap_size,
                        two_d_widths=(8, 6), depth_widths=(7,), embed_width=4, head_widths=(5, 3))
    map_size = joints * heatmap_size[0] * heatmap_size[1]
    images = rng.uniform(0.0, 1.0, (batch,) + image_size)
    flat_images = images.reshape(batch, -1)

    camera = look_at_camera(0.3, 0.2, 4000.0, (7.5, 7.5), (3.0, 3.0))
    real_inputs = []
    for _ in range(batch):
        coords = rng.normal(0.0, 300.0, (joints, 3)) + np.array([0.0, 0.0, 4000.0])
        real_inputs.append(encode_pose(Pose3D(coords, frame=CAMERA), camera, image_size, heatmap_size))
    maps, geo = network_arrays(real_inputs)

    cases = [
        _net_case("two_d_module", DenseNetSpec(flat_images.shape[1], (8, 6, map_size), (RELU, RELU, SIGMOID),
                                               seed=seed), flat_images, seed),
        _net_case("depth_regressor", DenseNetSpec(map_size + 6, (7, joints), (RELU, IDENTITY), seed=seed + 1),
                  rng.uniform(0.0, 1.0, (batch, map_size + 6)), seed + 1),
        _net_case("branch/image", DenseNetSpec(flat_images.shape[1], (4,), (RELU,), seed=seed + 2),
                  flat_images, seed + 2),
        _net_case("branch/maps", DenseNetSpec(maps.shape[1], (4,), (RELU,), seed=seed + 3), maps, seed + 3),
        _net_case("branch/geo", DenseNetSpec(geo.shape[1], (4,), (RELU,), seed=seed + 4), geo, seed + 4),
        _net_case("head/2-sources", DenseNetSpec(8, (5, 3, 1), (RELU, RELU, SIGMOID), seed=seed + 5),
                  rng.uniform(0.0, 1.0, (batch, 8)), seed + 5),
        _net_case("head/3-sources", DenseNetSpec(12, (5, 3, 1), (RELU, RELU, SIGMOID), seed=seed + 6),
                  rng.uniform(0.0, 1.0, (batch, 12)), seed + 6),
    ]

    generator = make_generator(small, seed=seed)
    map_loss = check_loss((batch, joints) + heatmap_size, seed=seed + 7)
    depth_loss = check_loss((batch, joints), seed=seed + 8)

    def evaluate_generator(with_grad):
        heatmaps, depths = generator.forward(images)
        # depths are O(100) mm; scale keeps both loss terms comparable
        loss_maps, grad_maps = map_loss(heatmaps)
        loss_depths, grad_depths = depth_loss(depths / 100.0)
        if with_grad:
            generator.backward(grad_maps, grad_depths / 100.0)
        return loss_maps + loss_depths

    cases.append(GradcheckCase("generator", generator.parameters(), evaluate_generator))

    discriminator = make_discriminator(small, SOURCES, seed=seed)
    targets = np.array([1.0, 0.0, 1.0])

    def evaluate_discriminator(with_grad):
        scores = discriminator.forward(images, real_inputs)
        if with_grad:
            discriminator.backward(bce_grad(scores, targets))
        return float(np.sum(bce(scores, targets)))

    cases.append(GradcheckCase("discriminator", discriminator.parameters(), evaluate_discriminator))

    adversary = make_discriminator(small, SOURCES, seed=seed + 9)
    path_generator = make_generator(small, seed=seed + 9)

    def evaluate_adversarial(with_grad):
        heatmaps, depths = path_generator.forward(images)
        encodings = [encode_prediction(heatmaps[row], depths[row], camera, image_size) for row in range(batch)]
        scores = adversary.forward(images, [encoding.input for encoding in encodings])
        if with_grad:
            gradients = adversary.backward(bce_grad(scores, np.ones(batch)))
            grad_maps = np.zeros_like(heatmaps)
            grad_depths = np.zeros_like(depths)
            for row, (encoding, gradient) in enumerate(zip(encodings, gradients)):
                grad_maps[row], grad_depths[row] = encoding.backward(gradient)
            path_generator.backward(grad_maps, grad_depths)
        return float(np.sum(bce(scores, np.ones(batch))))

    cases.append(GradcheckCase("generator-through-discriminator", path_generator.parameters(),
                               evaluate_adversarial))
    return cases
