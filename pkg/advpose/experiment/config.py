"""
YAML experiment configuration.

This module contains functions for reading, validating and bootstrapping the
experiment document, and the dataclasses the commands consume.
"""

import copy
import logging
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import yaml

from advpose.data.anthropometry import default_anthropometry
from advpose.data.domains import FIXED_LIST, FOCAL_PER_PIXEL_WIDTH, SAMPLED, DomainSpec
from advpose.errors import ConfigError
from advpose.models.variants import VARIANTS, ModelConfig
from advpose.skeleton.camera import look_at_camera
from advpose.skeleton.topology import default_topology, load_topology
from advpose.training.adversarial import AdvConfig
from advpose.training.pretrain import PretrainConfig
from advpose.utils.colors import error

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = "advpose.yaml"
THREADS_ENV = "ADVPOSE_THREADS"
DOMAIN_NAMES = ("lab", "wild", "xfer")
SPLITS = ("train", "test")


def _ring_camera_entries(count, elevation, distance):
    step = 2 * np.pi / count
    return [{"azimuth": float(step * (k + 0.5)), "elevation": elevation, "distance": distance}
            for k in range(count)]


DEFAULT_CONFIG = {
    "paths": {"data_dir": "data", "checkpoint_dir": "checkpoints", "report_dir": "reports"},
    "skeleton": None,
    "image_size": [32, 32],
    "heatmap_size": [16, 16],
    "root_depth_mm": 4000.0,
    "data_seed": 0,
    "domains": {
        "lab": {
            "camera_mode": FIXED_LIST,
            "cameras": _ring_camera_entries(4, 0.15, 4000.0),
            "pose_scope": 0.6,
            "has_3d_labels": True,
            "n_train": 2000,
            "n_test": 400,
        },
        "wild": {
            "camera_mode": SAMPLED,
            "azimuth_range": [-float(np.pi), float(np.pi)],
            "elevation_range": [-0.1, 0.5],
            "distance_range": [3500.0, 5000.0],
            "pose_scope": 1.0,
            "has_3d_labels": False,
            "n_train": 2000,
            "n_test": 400,
        },
        "xfer": {
            "camera_mode": SAMPLED,
            "azimuth_range": [-float(np.pi), float(np.pi)],
            "elevation_range": [0.3, 0.7],
            "distance_range": [4500.0, 5500.0],
            "pose_scope": 0.85,
            "has_3d_labels": True,
            "n_train": 400,
            "n_test": 400,
        },
    },
    "model": {
        "two_d_widths": [1024, 1024],
        "depth_widths": [512, 256],
        "embed_width": 128,
        "head_widths": [128, 64],
    },
    "pretrain": {
        "phase1_iterations": 2000,
        "phase2_iterations": 3000,
        "batch_size": 12,
        "learning_rate": 2.5e-4,
        "depth_unit_mm": 1000.0,
    },
    "adversarial": {
        "lam": 1e-4,
        "iterations": 5000,
        "batch_size": 12,
        "d_steps": 1,
        "g_learning_rate": 2.5e-4,
        "d_learning_rate": 1e-4,
    },
    "evaluation": {"val_every": 500, "val_samples": 200, "with_scale": True},
    "variant": "Full",
    "seeds": [0, 1, 2],
}


_CLOSED_SECTIONS = ("paths", "model", "pretrain", "adversarial", "evaluation")


def read_yaml(file_path):
    """
    Read and parse a YAML file.

    Args:
        file_path: Path to the YAML file to read

    Returns:
        Parsed YAML content as Python objects

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigError: If the file contains invalid YAML
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError(f"Config file not found: {file_path}")
    with open(file_path, "r") as yaml_file:
        try:
            return yaml.safe_load(yaml_file)
        except yaml.YAMLError as e:
            problem_mark = getattr(e, "problem_mark", None)
            if problem_mark:
                raise ConfigError(f"YAML parsing error at line {problem_mark.line + 1}, "
                                  f"column {problem_mark.column + 1}: {e}")
            raise ConfigError(f"YAML parsing error: {e}")


def merge_defaults(data, defaults=None):
    """Deep-merge a (partial) config mapping over the defaults."""
    merged = copy.deepcopy(DEFAULT_CONFIG if defaults is None else defaults)
    for key, value in (data or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_defaults(value, merged[key])
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_pair(value, check=_is_number):
    return isinstance(value, list) and len(value) == 2 and all(check(v) for v in value)


def _validate_domain(name, domain):
    if not isinstance(domain, dict):
        return f"Domain '{name}' must be a dictionary"
    mode = domain.get("camera_mode")
    if mode not in (FIXED_LIST, SAMPLED):
        return f"Invalid camera_mode '{mode}' for domain '{name}'. Valid options are: {FIXED_LIST}, {SAMPLED}"
    if mode == FIXED_LIST:
        cameras = domain.get("cameras")
        if not isinstance(cameras, list) or not cameras:
            return f"Domain '{name}' uses fixed-list cameras but lists none"
        for i, camera in enumerate(cameras):
            if not isinstance(camera, dict) or \
                    not all(_is_number(camera.get(key)) for key in ("azimuth", "elevation", "distance")):
                return f"Camera {i} of domain '{name}' needs numeric azimuth, elevation and distance"
            if camera["distance"] <= 0:
                return f"Camera {i} of domain '{name}' must have a positive distance"
    else:
        for key in ("azimuth_range", "elevation_range", "distance_range"):
            if not _is_pair(domain.get(key)):
                return f"'{key}' of domain '{name}' must be a list of two numbers"
            if domain[key][0] > domain[key][1]:
                return f"'{key}' of domain '{name}' is empty"
        if domain["distance_range"][0] <= 0:
            return f"Camera distances of domain '{name}' must be positive"
    scope = domain.get("pose_scope")
    if not _is_number(scope) or not 0 < scope <= 1:
        return f"pose_scope of domain '{name}' must lie in (0, 1]"
    if not isinstance(domain.get("has_3d_labels"), bool):
        return f"has_3d_labels of domain '{name}' must be true or false"
    for key in ("n_train", "n_test"):
        if not _is_int(domain.get(key)) or domain[key] <= 0:
            return f"{key} of domain '{name}' must be a positive integer"
    return ""


def validate_config(config_data):
    """
    Validate an experiment document (after merge_defaults).

    Args:
        config_data: Parsed config mapping

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(config_data, dict):
        return False, "Config must be a dictionary"

    for key, value in config_data.items():
        if key not in DEFAULT_CONFIG:
            return False, f"Unknown config key: {key}"
        if key in _CLOSED_SECTIONS and isinstance(value, dict):
            unknown = sorted(set(value) - set(DEFAULT_CONFIG[key]))
            if unknown:
                return False, f"Unknown key in '{key}': {', '.join(unknown)}"

    paths = config_data.get("paths")
    if not isinstance(paths, dict):
        return False, "The 'paths' key must contain a dictionary"
    for key in ("data_dir", "checkpoint_dir", "report_dir"):
        if not isinstance(paths.get(key), str) or not paths[key]:
            return False, f"paths.{key} must be a non-empty string"

    skeleton = config_data.get("skeleton")
    if skeleton is not None and not isinstance(skeleton, str):
        return False, "skeleton must be null or a path to a skeleton YAML file"

    for key in ("image_size", "heatmap_size"):
        value = config_data.get(key)
        if not _is_pair(value, _is_int) or min(value) <= 0:
            return False, f"{key} must be a list of two positive integers"
    if min(config_data["image_size"]) < 8:
        return False, "image_size must be at least 8x8"
    if not _is_number(config_data.get("root_depth_mm")) or config_data["root_depth_mm"] <= 0:
        return False, "root_depth_mm must be a positive number"
    if not _is_int(config_data.get("data_seed")):
        return False, "data_seed must be an integer"

    domains = config_data.get("domains")
    if not isinstance(domains, dict):
        return False, "The 'domains' key must contain a dictionary"
    for name in DOMAIN_NAMES:
        if name not in domains:
            return False, f"Domains must include '{name}'"
        message = _validate_domain(name, domains[name])
        if message:
            return False, message
    if not domains["lab"]["has_3d_labels"]:
        return False, "The lab domain must keep its 3D labels"

    model = config_data.get("model")
    if not isinstance(model, dict):
        return False, "The 'model' key must contain a dictionary"
    for key in ("two_d_widths", "depth_widths", "head_widths"):
        widths = model.get(key)
        if not isinstance(widths, list) or not all(_is_int(w) and w > 0 for w in widths):
            return False, f"model.{key} must be a list of positive integers"
    if not model["two_d_widths"]:
        return False, "model.two_d_widths needs at least one layer"
    if not _is_int(model.get("embed_width")) or model["embed_width"] <= 0:
        return False, "model.embed_width must be a positive integer"

    pretrain = config_data.get("pretrain")
    if not isinstance(pretrain, dict):
        return False, "The 'pretrain' key must contain a dictionary"
    for key in ("phase1_iterations", "phase2_iterations"):
        if not _is_int(pretrain.get(key)) or pretrain[key] < 0:
            return False, f"pretrain.{key} must be a non-negative integer"
    if pretrain["phase1_iterations"] + pretrain["phase2_iterations"] <= 0:
        return False, "pretraining needs at least one iteration"
    if not _is_int(pretrain.get("batch_size")) or pretrain["batch_size"] <= 0:
        return False, "pretrain.batch_size must be a positive integer"
    for key in ("learning_rate", "depth_unit_mm"):
        if not _is_number(pretrain.get(key)) or pretrain[key] <= 0:
            return False, f"pretrain.{key} must be a positive number"

    adversarial = config_data.get("adversarial")
    if not isinstance(adversarial, dict):
        return False, "The 'adversarial' key must contain a dictionary"
    if not _is_number(adversarial.get("lam")) or adversarial["lam"] < 0:
        return False, "adversarial.lam must be a non-negative number"
    for key in ("iterations", "batch_size", "d_steps"):
        if not _is_int(adversarial.get(key)) or adversarial[key] <= 0:
            return False, f"adversarial.{key} must be a positive integer"
    if adversarial["batch_size"] < 2:
        return False, "adversarial.batch_size must be at least 2"
    for key in ("g_learning_rate", "d_learning_rate"):
        if not _is_number(adversarial.get(key)) or adversarial[key] <= 0:
            return False, f"adversarial.{key} must be a positive number"

    evaluation = config_data.get("evaluation")
    if not isinstance(evaluation, dict):
        return False, "The 'evaluation' key must contain a dictionary"
    if not _is_int(evaluation.get("val_every")) or evaluation["val_every"] < 0:
        return False, "evaluation.val_every must be a non-negative integer"
    if not _is_int(evaluation.get("val_samples")) or evaluation["val_samples"] <= 0:
        return False, "evaluation.val_samples must be a positive integer"
    if not isinstance(evaluation.get("with_scale"), bool):
        return False, "evaluation.with_scale must be true or false"

    if config_data.get("variant") not in VARIANTS:
        return False, f"Invalid variant '{config_data.get('variant')}'. Valid options are: {', '.join(VARIANTS)}"
    seeds = config_data.get("seeds")
    if not isinstance(seeds, list) or not seeds or not all(_is_int(seed) for seed in seeds):
        return False, "seeds must be a non-empty list of integers"

    return True, ""


def create_default_config(file_path):
    """
    Write the desk-scale default config.

    Args:
        file_path: Path where the config should be created

    Returns:
        Boolean indicating success or failure
    """
    try:
        directory = os.path.dirname(file_path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)
        with open(file_path, "w") as yaml_file:
            yaml.safe_dump(DEFAULT_CONFIG, yaml_file, default_flow_style=False, sort_keys=False)
        return True
    except OSError as e:
        print(error(f"Failed to create default config: {e}"))
        return False


def resolve_topology(skeleton_path):
    """
    Skeleton named by the config, or the built-in one when the path is None.

    Raises:
        FileNotFoundError: If the skeleton file does not exist
        ConfigError: If the skeleton file is malformed or not a valid tree
    """
    if not skeleton_path:
        return default_topology()
    try:
        return load_topology(skeleton_path)
    except yaml.YAMLError as e:
        raise ConfigError(f"Skeleton file {skeleton_path} is not valid YAML: {e}")
    except (ValueError, TypeError, KeyError) as e:
        raise ConfigError(f"Skeleton file {skeleton_path}: {e}")


@dataclass(frozen=True)
class PathsConfig:
    data_dir: str = "data"
    checkpoint_dir: str = "checkpoints"
    report_dir: str = "reports"


@dataclass(frozen=True)
class DomainConfig:
    """A domain section: capture settings plus split sizes."""

    name: str
    settings: dict
    n_train: int
    n_test: int

    def spec(self, image_size):
        """Build the DomainSpec for images of `image_size`."""
        settings = self.settings
        focal = FOCAL_PER_PIXEL_WIDTH * image_size[1]
        principal = (image_size[1] / 2.0, image_size[0] / 2.0)
        cameras = ()
        if settings["camera_mode"] == FIXED_LIST:
            cameras = tuple(look_at_camera(float(c["azimuth"]), float(c["elevation"]), float(c["distance"]),
                                           (focal, focal), principal) for c in settings["cameras"])
        return DomainSpec(
            name=self.name,
            camera_mode=settings["camera_mode"],
            cameras=cameras,
            azimuth_range=tuple(settings.get("azimuth_range", (-np.pi, np.pi))),
            elevation_range=tuple(settings.get("elevation_range", (0.0, 0.0))),
            distance_range=tuple(settings.get("distance_range", (4000.0, 4000.0))),
            pose_scope=float(settings["pose_scope"]),
            has_3d_labels=bool(settings["has_3d_labels"]),
            image_size=tuple(image_size),
        )


@dataclass(frozen=True)
class EvaluationConfig:
    val_every: int = 500
    val_samples: int = 200
    with_scale: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    """
    A resolved experiment.

    Attributes:
        paths: Output directories
        skeleton: Path to a skeleton YAML file, or None for the default
        image_size, heatmap_size: (H, W) pairs
        root_depth_mm: Nominal root depth for encoding predictions
        data_seed: Seed of dataset generation
        domains: Dict name -> DomainConfig
        model: ModelConfig (joint count filled from the skeleton)
        pretrain: PretrainConfig
        adversarial: AdvConfig
        evaluation: EvaluationConfig
        variant: Ablation variant name
        seeds: Run seeds
    """

    paths: PathsConfig
    skeleton: str
    image_size: tuple
    heatmap_size: tuple
    root_depth_mm: float
    data_seed: int
    domains: dict
    model: ModelConfig
    pretrain: PretrainConfig
    adversarial: AdvConfig
    evaluation: EvaluationConfig
    variant: str
    seeds: tuple
    source: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_dict(cls, data, joint_count=None):
        """
        Resolve a config mapping (partial documents are merged over defaults).

        Raises:
            ConfigError: If the merged document is invalid
        """
        merged = merge_defaults(data)
        is_valid, message = validate_config(merged)
        if not is_valid:
            raise ConfigError(message)
        if joint_count is None:
            joint_count = resolve_topology(merged["skeleton"]).joint_count
        image_size = tuple(merged["image_size"])
        heatmap_size = tuple(merged["heatmap_size"])
        domains = {}
        for name, section in merged["domains"].items():
            settings = {key: value for key, value in section.items() if key not in ("n_train", "n_test")}
            domains[name] = DomainConfig(name=name, settings=settings, n_train=section["n_train"],
                                         n_test=section["n_test"])
        model = merged["model"]
        return cls(
            paths=PathsConfig(**merged["paths"]),
            skeleton=merged["skeleton"],
            image_size=image_size,
            heatmap_size=heatmap_size,
            root_depth_mm=float(merged["root_depth_mm"]),
            data_seed=merged["data_seed"],
            domains=domains,
            model=ModelConfig(
                joint_count=joint_count,
                image_size=image_size,
                heatmap_size=heatmap_size,
                two_d_widths=tuple(model["two_d_widths"]),
                depth_widths=tuple(model["depth_widths"]),
                embed_width=model["embed_width"],
                head_widths=tuple(model["head_widths"]),
            ),
            pretrain=PretrainConfig(**merged["pretrain"]),
            adversarial=AdvConfig(root_depth_mm=float(merged["root_depth_mm"]),
                                  depth_unit_mm=float(merged["pretrain"]["depth_unit_mm"]),
                                  **merged["adversarial"]),
            evaluation=EvaluationConfig(**merged["evaluation"]),
            variant=merged["variant"],
            seeds=tuple(merged["seeds"]),
            source=merged,
        )

    def to_dict(self):
        """The resolved document, as written to resolved_config.yaml."""
        data = copy.deepcopy(self.source) if self.source else merge_defaults({})
        data["paths"] = asdict(self.paths)
        data["variant"] = self.variant
        data["seeds"] = list(self.seeds)
        return data

    def with_overrides(self, seed=None, variant=None, out=None):
        """Apply CLI overrides: --seed replaces the seed list, --variant, --out the report directory."""
        config = self
        if seed is not None:
            config = replace(config, seeds=(int(seed),))
        if variant is not None:
            if variant not in VARIANTS:
                raise ConfigError(f"Invalid variant '{variant}'. Valid options are: {', '.join(VARIANTS)}")
            config = replace(config, variant=variant)
        if out is not None:
            config = replace(config, paths=replace(config.paths, report_dir=out))
        return config

    def topology(self):
        return resolve_topology(self.skeleton)

    def anthropometry(self):
        """
        Body model for the configured skeleton.

        Raises:
            ConfigError: If the skeleton has joints without default bone statistics
        """
        topology = self.topology()
        try:
            return default_anthropometry(topology)
        except KeyError as e:
            raise ConfigError(f"No bone statistics for skeleton joint {e}")

    def domain_specs(self):
        return {name: domain.spec(self.image_size) for name, domain in self.domains.items()}

    def dataset_path(self, domain, split):
        return os.path.join(self.paths.data_dir, f"{domain}_{split}.advds")

    def write_resolved(self, directory):
        """Copy the resolved config next to a run's outputs."""
        if not os.path.exists(directory):
            os.makedirs(directory)
        path = os.path.join(directory, "resolved_config.yaml")
        with open(path, "w") as handle:
            yaml.safe_dump(self.to_dict(), handle, default_flow_style=False, sort_keys=False)
        return path


def load_config(file_path=None):
    """
    Read, validate and resolve a config file (defaults when the path is None).

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigError: If the document is invalid
    """
    if file_path is None:
        return ExperimentConfig.from_dict({})
    data = read_yaml(file_path)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("Config must be a dictionary")
    return ExperimentConfig.from_dict(data)


def worker_count():
    """Parallel workers allowed by ADVPOSE_THREADS (1 when unset or invalid)."""
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        logger.warning("Ignoring invalid %s=%r", THREADS_ENV, os.environ.get(THREADS_ENV))
        return 1
