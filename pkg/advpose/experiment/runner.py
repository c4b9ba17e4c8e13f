"""
Command handlers for the advpose CLI.

Every handler takes a resolved ExperimentConfig and returns an exit code:
0 success, 1 config or usage error, 2 I/O error, 3 missing upstream artifact.
"""

import glob
import logging
import os
from dataclasses import replace
from functools import partial

from tabulate import tabulate

from advpose.data.dataset import generate_dataset, read_dataset
from advpose.errors import CheckpointError, ConfigError, DatasetFormatError
from advpose.evaluation.metrics import predict_poses, validation_mpjpe
from advpose.evaluation.report import REPORT_COLUMNS, evaluate_predictions, read_report, write_rows
from advpose.experiment.config import DOMAIN_NAMES, SPLITS, worker_count
from advpose.models.variants import (
    build_gradcheck_suite, make_generator, make_variant, variant_settings,
)
from advpose.nn.checkpoint import read_checkpoint
from advpose.nn.gradcheck import DEFAULT_EPS, PASS_THRESHOLD, check_gradients
from advpose.training.adversarial import AdversarialTrainer
from advpose.training.history import TrainHistory
from advpose.training.pretrain import GeneratorPretrainer
from advpose.utils.colors import attempt, error, format_header, info, millimeters, success, verdict, warning

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_MISSING = 3


class MissingArtifactError(Exception):
    """A command needs an output of an earlier command that does not exist."""


def split_seed(data_seed, split):
    return data_seed * len(SPLITS) + SPLITS.index(split)


def run_dir(root, seed, variant=None):
    parts = [root, f"seed{seed}"]
    if variant:
        parts.append(variant)
    return os.path.join(*parts)


def pretrain_checkpoint_path(config, seed):
    return os.path.join(run_dir(config.paths.checkpoint_dir, seed), "pretrain.ckpt")


def variant_checkpoint_path(config, seed, variant):
    return os.path.join(run_dir(config.paths.checkpoint_dir, seed, variant), "adversarial.ckpt")


def load_samples(config, domain, split):
    """
    Samples of one dataset split.

    Raises:
        MissingArtifactError: If the dataset file has not been generated
    """
    path = config.dataset_path(domain, split)
    if not os.path.exists(path):
        raise MissingArtifactError(f"Dataset {path} not found; run 'advpose gen-data' first")
    return read_dataset(path).samples


def guarded(handler):
    """Map exceptions raised by a command to exit codes."""
    try:
        return handler()
    except MissingArtifactError as e:
        print(error(str(e)))
        return EXIT_MISSING
    except (DatasetFormatError, CheckpointError) as e:
        print(error(f"Corrupt artifact: {e}"))
        return EXIT_IO
    except ConfigError as e:
        print(error(f"Invalid configuration: {e}"))
        return EXIT_CONFIG
    except ValueError as e:
        print(error(str(e)))
        return EXIT_CONFIG
    except OSError as e:
        print(error(f"I/O error: {e}"))
        return EXIT_IO


def cmd_gen_data(config, workers=None):
    """Generate train/test datasets for every domain."""
    def handler():
        anthropometry = config.anthropometry()
        specs = config.domain_specs()
        for name in DOMAIN_NAMES:
            problems = specs[name].validate()
            if problems:
                raise ConfigError(f"Domain '{name}': {'; '.join(problems)}")
        count = workers or worker_count()
        rows = []
        for name in DOMAIN_NAMES:
            domain = config.domains[name]
            for split in SPLITS:
                size = domain.n_train if split == "train" else domain.n_test
                path = config.dataset_path(name, split)
                print(attempt(f"Generating {name}/{split} ({size} samples)"))
                generate_dataset(specs[name], anthropometry, size, split_seed(config.data_seed, split),
                                 path=path, workers=count)
                rows.append((name, split, size, specs[name].has_3d_labels, path))
        config.write_resolved(config.paths.data_dir)
        print(tabulate(rows, headers=["domain", "split", "samples", "3D labels", "file"]))
        print(success(f"Wrote {len(rows)} dataset files to {config.paths.data_dir}"))
        return EXIT_OK

    return guarded(handler)


def make_validator(config, samples):
    """Validation MPJPE on the first val_samples labeled samples."""
    subset = [sample for sample in samples if sample.has_3d][:config.evaluation.val_samples]
    if not subset:
        return None
    return partial(validation_mpjpe, samples=subset, heatmap_size=config.heatmap_size)


def _read_history(path):
    return TrainHistory.from_csv(path) if os.path.exists(path) else None


def pretrain_for_seed(config, seed, resume=False, show_progress=False, phase2=True):
    """
    Pretrain a generator for one seed and write its checkpoint and history.

    Returns:
        Tuple of (GeneratorModel, TrainHistory)
    """
    lab = load_samples(config, "lab", "train")
    wild = load_samples(config, "wild", "train")
    validator = make_validator(config, load_samples(config, "lab", "test"))
    pretrain_config = replace(config.pretrain, seed=seed)
    if not phase2:
        pretrain_config = replace(pretrain_config, phase2_iterations=0)
    generator = make_generator(config.model, seed=seed)
    trainer = GeneratorPretrainer(generator, lab, wild, pretrain_config, config.heatmap_size,
                                  validator=validator, val_every=config.evaluation.val_every,
                                  show_progress=show_progress)
    if not phase2:
        return generator, trainer.run()

    checkpoint_path = pretrain_checkpoint_path(config, seed)
    history_path = os.path.join(run_dir(config.paths.report_dir, seed), "pretrain_history.csv")
    if resume:
        if os.path.exists(checkpoint_path):
            trainer.restore(read_checkpoint(checkpoint_path), _read_history(history_path))
        else:
            print(warning(f"No checkpoint at {checkpoint_path}; starting from scratch"))
    history = trainer.run()
    trainer.save(checkpoint_path, meta={"seed": seed})
    history.to_csv(history_path)
    config.write_resolved(run_dir(config.paths.report_dir, seed))
    return generator, history


def cmd_pretrain(config, resume=False, show_progress=False):
    """Pretrain the generator for the first configured seed."""
    def handler():
        seed = config.seeds[0]
        print(attempt(f"Pretraining generator (seed {seed}, {config.pretrain.iterations} iterations)"))
        _, history = pretrain_for_seed(config, seed, resume=resume, show_progress=show_progress)
        print(info(f"Final validation MPJPE: {millimeters(history.last_value('val_mpjpe'))}"))
        print(success(f"Checkpoint written to {pretrain_checkpoint_path(config, seed)}"))
        return EXIT_OK

    return guarded(handler)


def train_variant(config, variant, seed, resume=False, show_progress=False):
    """
    Build a variant from the seed's pretrained generator and train it.

    The baselines continue on the pose loss alone for the same number of
    iterations, Baseline-fix2D with its 2D module frozen. Full-no-pretrain keeps only the pretrained 2D module (its
    depth regressor restarts from initialization); without a pretrain
    checkpoint it pretrains the 2D module itself.

    Returns:
        Tuple of (GeneratorModel, TrainHistory)

    Raises:
        MissingArtifactError: If a required pretrain checkpoint is missing
    """
    settings = variant_settings(variant)
    generator, discriminator = make_variant(variant, config.model, seed=seed)
    pretrained = pretrain_checkpoint_path(config, seed)
    if settings.pretrain_depth:
        if not os.path.exists(pretrained):
            raise MissingArtifactError(f"Pretrain checkpoint {pretrained} not found; run 'advpose pretrain' first")
        generator.load_state_dict(read_checkpoint(pretrained).records)
    elif os.path.exists(pretrained):
        generator.load_state_dict(read_checkpoint(pretrained).records, two_d_only=True)
        generator.reset_depth_regressor()
    else:
        logger.info("No pretrain checkpoint for seed %d; pretraining the 2D module only", seed)
        two_d, _ = pretrain_for_seed(config, seed, show_progress=show_progress, phase2=False)
        generator.load_state_dict(two_d.state_dict(), two_d_only=True)

    lab = load_samples(config, "lab", "train")
    wild = load_samples(config, "wild", "train")
    validator = make_validator(config, load_samples(config, "lab", "test"))
    trainer = AdversarialTrainer(generator, discriminator, lab, wild, replace(config.adversarial, seed=seed),
                                 config.heatmap_size, validator=validator, val_every=config.evaluation.val_every,
                                 show_progress=show_progress)
    checkpoint_path = variant_checkpoint_path(config, seed, variant)
    report_dir = run_dir(config.paths.report_dir, seed, variant)
    history_path = os.path.join(report_dir, "train_history.csv")
    if resume and os.path.exists(checkpoint_path):
        trainer.restore(read_checkpoint(checkpoint_path), _read_history(history_path))

    history = trainer.run()
    trainer.save(checkpoint_path, meta={"variant": variant, "mode": generator.mode, "seed": seed})
    history.to_csv(history_path)
    config.write_resolved(report_dir)
    return generator, history


def cmd_train_adv(config, resume=False, show_progress=False):
    """Adversarially train the configured variant for the first seed."""
    def handler():
        variant = config.variant
        if not variant_settings(variant).adversarial:
            print(error(f"Variant {variant} has no adversarial phase"))
            return EXIT_CONFIG
        seed = config.seeds[0]
        print(attempt(f"Adversarial training of {variant} (seed {seed}, {config.adversarial.iterations} cycles)"))
        _, history = train_variant(config, variant, seed, resume=resume, show_progress=show_progress)
        rows = [(name, history.last_value(name)) for name in ("l_pose", "l_d", "l_g", "d_acc_real",
                                                               "d_acc_fake", "val_mpjpe")]
        print(tabulate(rows, headers=["final", "value"], floatfmt=".4f"))
        print(success(f"Checkpoint written to {variant_checkpoint_path(config, seed, variant)}"))
        return EXIT_OK

    return guarded(handler)


def load_generator(config, checkpoint_path, seed):
    """
    Generator weights from any advpose checkpoint.

    Raises:
        MissingArtifactError: If the checkpoint does not exist
    """
    if not os.path.exists(checkpoint_path):
        raise MissingArtifactError(f"Checkpoint {checkpoint_path} not found")
    generator = make_generator(config.model, seed=seed)
    generator.load_state_dict(read_checkpoint(checkpoint_path).records)
    return generator


def default_checkpoint(config, seed, variant):
    path = variant_checkpoint_path(config, seed, variant)
    if not variant_settings(variant).adversarial and not os.path.exists(path):
        return pretrain_checkpoint_path(config, seed)
    return path


def evaluate_generator(config, generator, samples, variant, seed, train_samples=None):
    """Predict and score one dataset; returns a MetricsReport."""
    preds3d, preds2d = predict_poses(generator, samples, config.heatmap_size, root_depth=config.root_depth_mm)
    return evaluate_predictions(preds3d, preds2d, samples, config.topology(), variant=variant, seed=seed,
                                with_scale=config.evaluation.with_scale, train_samples=train_samples)


def cmd_eval(config, checkpoint=None, dataset=None):
    """Evaluate a checkpoint on one dataset file, or on every test split."""
    def handler():
        seed = config.seeds[0]
        variant = config.variant
        generator = load_generator(config, checkpoint or default_checkpoint(config, seed, variant), seed)
        if dataset:
            if not os.path.exists(dataset):
                raise MissingArtifactError(f"Dataset {dataset} not found")
            targets = [read_dataset(dataset)]
        else:
            targets = []
            for name in DOMAIN_NAMES:
                path = config.dataset_path(name, "test")
                if not os.path.exists(path):
                    raise MissingArtifactError(f"Dataset {path} not found; run 'advpose gen-data' first")
                targets.append(read_dataset(path))
        train_path = config.dataset_path("lab", "train")
        train_samples = read_dataset(train_path).samples if os.path.exists(train_path) else None

        out_dir = run_dir(config.paths.report_dir, seed, variant)
        for target in targets:
            report = evaluate_generator(config, generator, target.samples, variant, seed, train_samples)
            problems = report.validate()
            if problems:
                print(warning(f"{target.domain}: {'; '.join(problems)}"))
            stem = os.path.join(out_dir, f"metrics_{target.domain}")
            report.write(csv_path=stem + ".csv", yaml_path=stem + ".yaml")
            print(format_header(f"{variant} on {target.domain} ({report.samples} samples)"))
            print(report.table())
        config.write_resolved(out_dir)
        print(success(f"Reports written to {out_dir}"))
        return EXIT_OK

    return guarded(handler)


def run_gradcheck(suite=None, eps=DEFAULT_EPS):
    """
    Gradient-check every case of a suite.

    Returns:
        List of (name, parameter count, max relative error)
    """
    results = []
    for case in suite if suite is not None else build_gradcheck_suite():
        errors = check_gradients(case.tensors, case.evaluate, eps=eps)
        count = sum(tensor.value.size for tensor in case.tensors)
        results.append((case.name, count, max(errors.values())))
        logger.info("gradcheck %s: %.3e", case.name, results[-1][2])
    return results


def cmd_gradcheck(suite=None, eps=DEFAULT_EPS, threshold=PASS_THRESHOLD):
    """Gradient self-test of every architecture; exit 1 if any error exceeds the threshold."""
    results = run_gradcheck(suite, eps=eps)
    rows = [(name, count, f"{worst:.3e}", verdict(worst < threshold)) for name, count, worst in results]
    print(tabulate(rows, headers=["architecture", "parameters", "max rel. error", "result"]))
    worst = max(result[2] for result in results)
    if worst < threshold:
        print(success(f"All {len(results)} architectures pass (max relative error {worst:.3e})"))
        return EXIT_OK
    print(error(f"Gradient check failed: max relative error {worst:.3e} >= {threshold:g}"))
    return EXIT_CONFIG


def cmd_report(config):
    """Collect metric reports and the ablation matrix into summary.csv."""
    def handler():
        root = config.paths.report_dir
        paths = sorted(glob.glob(os.path.join(root, "**", "metrics_*.yaml"), recursive=True))
        if not paths:
            raise MissingArtifactError(f"No metric reports under {root}; run 'advpose eval' first")
        rows = [read_report(path).to_row() for path in paths]
        print(format_header("Metrics"))
        print(tabulate([[row[column] for column in REPORT_COLUMNS] for row in rows],
                       headers=list(REPORT_COLUMNS), floatfmt=".2f", missingval=""))
        ablation_path = os.path.join(root, "ablation_report.txt")
        if os.path.exists(ablation_path):
            print(format_header("Ablation"))
            with open(ablation_path, "r") as handle:
                print(handle.read())
        summary = os.path.join(root, "summary.csv")
        write_rows(summary, rows, REPORT_COLUMNS)
        print(success(f"Wrote {len(rows)} rows to {summary}"))
        return EXIT_OK

    return guarded(handler)
