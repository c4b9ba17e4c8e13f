"""
Training history records and their CSV form.
"""

import csv
import os
from dataclasses import astuple, dataclass, fields
from typing import Optional

import numpy as np

from advpose.errors import NonFiniteError

HISTORY_COLUMNS = ("iteration", "l_pose", "l_d", "l_g", "d_acc_real", "d_acc_fake", "val_mpjpe")


@dataclass(frozen=True)
class HistoryRecord:
    """One iteration; optional columns are None when not measured."""

    iteration: int
    l_pose: Optional[float] = None
    l_d: Optional[float] = None
    l_g: Optional[float] = None
    d_acc_real: Optional[float] = None
    d_acc_fake: Optional[float] = None
    val_mpjpe: Optional[float] = None


def _cell(value):
    return "" if value is None else repr(float(value))


class TrainHistory:
    """
    Ordered per-iteration records.

    Iteration indices strictly increase and every recorded value is finite.
    """

    def __init__(self, records=None):
        self.records = []
        for record in records or []:
            self.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __eq__(self, other):
        return isinstance(other, TrainHistory) and self.records == other.records

    @property
    def last_iteration(self):
        return self.records[-1].iteration if self.records else 0

    def append(self, record):
        """
        Add a record.

        Raises:
            ValueError: If the iteration does not increase
            NonFiniteError: If a value is NaN/Inf
        """
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError(f"History iteration {record.iteration} does not follow {self.records[-1].iteration}")
        for column in fields(record)[1:]:
            value = getattr(record, column.name)
            if value is not None and not np.isfinite(value):
                raise NonFiniteError(f"Iteration {record.iteration}: {column.name} is not finite ({value})")
        self.records.append(record)

    def extend(self, other):
        for record in other:
            self.append(record)

    def column(self, name):
        """Values of one column (None where not measured)."""
        return [getattr(record, name) for record in self.records]

    def last_value(self, name):
        """Most recent measured value of a column, or None."""
        for record in reversed(self.records):
            value = getattr(record, name)
            if value is not None:
                return value
        return None

    def to_csv(self, path):
        """Write the history with HISTORY_COLUMNS as header; None is an empty cell."""
        directory = os.path.dirname(path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(HISTORY_COLUMNS)
            for record in self.records:
                writer.writerow([record.iteration] + [_cell(value) for value in astuple(record)[1:]])

    @classmethod
    def from_csv(cls, path):
        """Read a history written by to_csv."""
        with open(path, "r", newline="") as handle:
            reader = csv.DictReader(handle)
            records = []
            for row in reader:
                values = {name: (float(row[name]) if row[name] != "" else None) for name in HISTORY_COLUMNS[1:]}
                records.append(HistoryRecord(iteration=int(row["iteration"]), **values))
        return cls(records)
