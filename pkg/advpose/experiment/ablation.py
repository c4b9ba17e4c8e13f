"""
Variant-by-seed ablation matrix.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from tabulate import tabulate

from advpose.evaluation.report import write_rows
from advpose.experiment.config import worker_count
from advpose.experiment.runner import (
    EXIT_CONFIG, EXIT_OK, guarded, evaluate_generator, load_samples, pretrain_checkpoint_path,
    pretrain_for_seed, run_dir, train_variant,
)
from advpose.models.variants import (
    BASELINE, BASELINE_FIX_2D, FULL, FULL_FIX_2D, FULL_NO_PRETRAIN, GEO_VARIANT, MAP, VARIANTS, variant_settings,
)
from advpose.utils.colors import attempt, error, format_header, success, warning

logger = logging.getLogger(__name__)

ABLATION_COLUMNS = (
    "variant", "seed", "status",
    "xfer_mpjpe_p1", "xfer_mpjpe_p2", "xfer_pck3d", "xfer_auc3d",
    "lab_mpjpe_p1", "lab_mpjpe_p2",
    "final_l_pose", "final_l_d", "final_l_g", "val_mpjpe",
)
MEDIAN_SEED = "median"
STATUS_OK = "ok"

# Human3.6M MPJPE (mm) of the full-scale system, for orientation only
REFERENCE_MPJPE_MM = {
    BASELINE_FIX_2D: 65.2,
    BASELINE: 64.8,
    MAP: 61.3,
    GEO_VARIANT: 60.3,
    FULL: 59.7,
    FULL_FIX_2D: 63.1,
    FULL_NO_PRETRAIN: 63.4,
}


def ablation_row(config, variant, seed, show_progress=False):
    """
    Train and evaluate one (variant, seed) cell.

    Failures are recorded in the row's status instead of raised, so one
    diverging run does not abort the matrix.
    """
    row = {column: None for column in ABLATION_COLUMNS}
    row.update(variant=variant, seed=seed)
    try:
        generator, history = train_variant(config, variant, seed, show_progress=show_progress)
        train_samples = load_samples(config, "lab", "train")
        out_dir = run_dir(config.paths.report_dir, seed, variant)
        for domain in ("xfer", "lab"):
            report = evaluate_generator(config, generator, load_samples(config, domain, "test"),
                                        variant, seed, train_samples)
            report.write(yaml_path=os.path.join(out_dir, f"metrics_{domain}.yaml"))
            row[f"{domain}_mpjpe_p1"] = report.mpjpe_p1
            row[f"{domain}_mpjpe_p2"] = report.mpjpe_p2
            if domain == "xfer":
                row["xfer_pck3d"] = report.pck3d
                row["xfer_auc3d"] = report.auc3d
        row["final_l_pose"] = history.last_value("l_pose")
        row["final_l_d"] = history.last_value("l_d")
        row["final_l_g"] = history.last_value("l_g")
        row["val_mpjpe"] = history.last_value("val_mpjpe")
        row["status"] = STATUS_OK
    except Exception as e:
        logger.error("Ablation %s/seed %s failed: %s", variant, seed, e)
        logger.debug("Traceback:", exc_info=True)
        row["status"] = f"failed: {e}"
    return row


def _pretrain_seed(config, seed, show_progress=False):
    if not os.path.exists(pretrain_checkpoint_path(config, seed)):
        pretrain_for_seed(config, seed, show_progress=show_progress)
    return seed


def median_rows(rows, variants=VARIANTS):
    """One row per variant holding the median of every numeric column over completed seeds."""
    medians = []
    for variant in variants:
        completed = [row for row in rows if row["variant"] == variant and row["status"] == STATUS_OK]
        if not completed:
            continue
        median = {"variant": variant, "seed": MEDIAN_SEED, "status": f"{len(completed)} seeds"}
        for column in ABLATION_COLUMNS[3:]:
            values = [row[column] for row in completed if row[column] is not None]
            median[column] = float(np.median(values)) if values else None
        medians.append(median)
    return medians


def reference_footer():
    lines = ["Reference MPJPE of the full-scale system (mm):"]
    lines += [f"  {variant}: {value:.1f}" for variant, value in REFERENCE_MPJPE_MM.items()]
    return "\n".join(lines)


def render_matrix(rows):
    table = tabulate([[row[column] for column in ABLATION_COLUMNS] for row in rows],
                     headers=list(ABLATION_COLUMNS), floatfmt=".2f", missingval="")
    return f"{table}\n\n{reference_footer()}\n"


def cmd_ablate(config, variants=None, show_progress=False, workers=None):
    """
    Run every variant over every seed and write the ablation matrix.

    Pretraining is shared by all variants of a seed and runs first. Cells run
    in worker processes when more than one worker is allowed.

    Returns:
        0 if at least one cell completed, 1 otherwise
    """
    variants = tuple(variants or VARIANTS)
    count = workers or worker_count()
    cells = [(variant, seed) for seed in config.seeds for variant in variants]

    def handler():
        for variant in variants:
            variant_settings(variant)
        # fail before any training if the evaluation splits are missing
        load_samples(config, "xfer", "test")
        load_samples(config, "lab", "test")
        print(attempt(f"Ablation: {len(variants)} variants x {len(config.seeds)} seeds with {count} worker(s)"))
        if count > 1:
            with ProcessPoolExecutor(max_workers=count) as pool:
                list(pool.map(_pretrain_seed, [config] * len(config.seeds), config.seeds))
                rows = list(pool.map(ablation_row, [config] * len(cells),
                                     [variant for variant, _ in cells], [seed for _, seed in cells]))
        else:
            for seed in config.seeds:
                _pretrain_seed(config, seed, show_progress=show_progress)
            rows = [ablation_row(config, variant, seed, show_progress=show_progress) for variant, seed in cells]

        matrix = rows + median_rows(rows, variants)
        root = config.paths.report_dir
        write_rows(os.path.join(root, "ablation.csv"), matrix, ABLATION_COLUMNS)
        rendered = render_matrix(matrix)
        with open(os.path.join(root, "ablation_report.txt"), "w") as handle:
            handle.write(rendered)
        config.write_resolved(root)
        print(format_header("Ablation"))
        print(rendered)

        failed = [row for row in rows if row["status"] != STATUS_OK]
        for row in failed:
            print(warning(f"{row['variant']} seed {row['seed']}: {row['status']}"))
        if len(failed) == len(rows):
            print(error("No ablation cell completed"))
            return EXIT_CONFIG
        print(success(f"{len(rows) - len(failed)}/{len(rows)} cells completed; matrix in {root}"))
        return EXIT_OK

    return guarded(handler)
