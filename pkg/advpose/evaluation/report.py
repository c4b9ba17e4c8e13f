"""
Metrics reports: one CSV row and one YAML document per evaluation.
"""

import csv
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml
from tabulate import tabulate

from advpose.evaluation.metrics import (
    mean_pose_baseline, mpjpe, mpjpe_p2, pck3d_auc, pckh_2d, per_group_error,
)
from advpose.skeleton.topology import LIMB_GROUP_NAMES

REPORT_COLUMNS = ("variant", "seed", "domain", "samples", "mpjpe_p1", "mpjpe_p2") + LIMB_GROUP_NAMES + (
    "pckh05", "pck3d", "auc3d", "mean_pose_mpjpe")


@dataclass
class MetricsReport:
    """
    Evaluation results for one model on one dataset.

    3D fields are None for datasets without 3D labels.
    """

    variant: str
    seed: int
    domain: str
    samples: int
    pckh05: float
    mpjpe_p1: Optional[float] = None
    mpjpe_p2: Optional[float] = None
    per_group: dict = field(default_factory=dict)
    pck3d: Optional[float] = None
    auc3d: Optional[float] = None
    mean_pose_mpjpe: Optional[float] = None

    def validate(self):
        """Return a list of violated invariants (empty when valid)."""
        problems = []
        for name in ("pckh05", "mpjpe_p1", "mpjpe_p2", "pck3d", "auc3d", "mean_pose_mpjpe"):
            value = getattr(self, name)
            if value is not None and not np.isfinite(value):
                problems.append(f"{name} is not finite")
        for name in ("pckh05", "pck3d", "auc3d"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 100.0:
                problems.append(f"{name} = {value} lies outside [0, 100]")
        return problems

    def to_row(self):
        """Flat mapping keyed by REPORT_COLUMNS."""
        row = {
            "variant": self.variant,
            "seed": self.seed,
            "domain": self.domain,
            "samples": self.samples,
            "mpjpe_p1": self.mpjpe_p1,
            "mpjpe_p2": self.mpjpe_p2,
            "pckh05": self.pckh05,
            "pck3d": self.pck3d,
            "auc3d": self.auc3d,
            "mean_pose_mpjpe": self.mean_pose_mpjpe,
        }
        for name in LIMB_GROUP_NAMES:
            row[name] = self.per_group.get(name)
        return {column: row[column] for column in REPORT_COLUMNS}

    def to_dict(self):
        data = dict(vars(self))
        data["per_group"] = dict(self.per_group)
        return {key: (float(value) if isinstance(value, np.floating) else value) for key, value in data.items()}

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def write(self, csv_path=None, yaml_path=None):
        """Write the report as a CSV row (with header) and/or a YAML document."""
        if csv_path:
            write_rows(csv_path, [self.to_row()], REPORT_COLUMNS)
        if yaml_path:
            _ensure_directory(yaml_path)
            with open(yaml_path, "w") as handle:
                yaml.safe_dump(self.to_dict(), handle, default_flow_style=False, sort_keys=False)

    def table(self):
        """Two-column console rendering."""
        rows = [(name, _format(value)) for name, value in self.to_row().items()]
        return tabulate(rows, headers=["metric", "value"])


def _format(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.2f}"
    return value


def _ensure_directory(path):
    directory = os.path.dirname(path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)


def write_rows(path, rows, columns):
    """Write dict rows as CSV; None becomes an empty cell, floats keep full precision."""
    _ensure_directory(path)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if row.get(column) is None
                             else repr(float(row[column])) if isinstance(row[column], float)
                             else row[column] for column in columns])


def read_report(path):
    """Load a MetricsReport YAML document."""
    with open(path, "r") as handle:
        return MetricsReport.from_dict(yaml.safe_load(handle))


def evaluate_predictions(preds3d, preds2d, samples, topology, variant="", seed=0, with_scale=True,
                         train_samples=None):
    """
    Score predictions against the samples' labels.

    Args:
        preds3d: (N, P, 3) camera-frame predictions
        preds2d: (N, P, 2) pixel predictions
        samples: The N evaluated SyntheticSamples
        topology: SkeletonTopology (head segment, limb groups, root)
        variant, seed: Identifiers stored in the report
        with_scale: Protocol #2 alignment includes scale
        train_samples: Labeled training samples for the mean-pose baseline

    Returns:
        MetricsReport
    """
    root = topology.root
    report = MetricsReport(
        variant=variant,
        seed=int(seed),
        domain=samples[0].domain if samples else "",
        samples=len(samples),
        pckh05=pckh_2d(preds2d, [sample.pose2d.coords for sample in samples], topology),
    )
    if samples and all(sample.has_3d for sample in samples):
        gts = [sample.pose3d.coords for sample in samples]
        report.mpjpe_p1 = mpjpe(preds3d, gts, root=root)
        report.mpjpe_p2 = mpjpe_p2(preds3d, gts, with_scale=with_scale)
        report.per_group = per_group_error(preds3d, gts, topology, root=root)
        report.pck3d, report.auc3d = pck3d_auc(preds3d, gts, root=root)
        if train_samples and any(sample.has_3d for sample in train_samples):
            report.mean_pose_mpjpe = mean_pose_baseline(train_samples, samples, root=root)
    return report
