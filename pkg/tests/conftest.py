"""Shared builders for the test suite."""

import numpy as np
import pytest

from cardiolearn.dataset import SCHEMA, Dataset, FeatureKind, RawRecord
from cardiolearn.preprocess import FeatureMatrix

# Plausible defaults for every schema column; tests override what they probe.
BASE_VALUES = {
    "Age": 54.0,
    "Sex": "M",
    "ChestPainType": "ASY",
    "RestingBP": 130.0,
    "Cholesterol": 240.0,
    "FastingBS": 0.0,
    "RestingECG": "Normal",
    "MaxHR": 150.0,
    "ExerciseAngina": "N",
    "Oldpeak": 1.0,
    "ST_Slope": "Flat",
}


def make_record(label: int = 0, **overrides) -> RawRecord:
    cells = []
    for spec in SCHEMA:
        value = overrides.get(spec.name, BASE_VALUES[spec.name])
        if spec.kind is FeatureKind.NUMERIC:
            value = float(value)
        cells.append(value)
    return RawRecord(values=tuple(cells), label=label)


def make_dataset(rows, source: str = "memory") -> Dataset:
    """rows: iterable of (overrides dict, label) pairs."""
    records = tuple(make_record(label=label, **overrides) for overrides, label in rows)
    return Dataset(records=records, source=source)


def spread_dataset(n_neg: int, n_pos: int, source: str = "memory") -> Dataset:
    """Distinct-content records so content-keyed ordering is unambiguous."""
    rows = []
    for i in range(n_neg):
        rows.append(({"Age": 40 + i, "MaxHR": 150 + i}, 0))
    for i in range(n_pos):
        rows.append(({"Age": 60 + i, "MaxHR": 120 + i, "Oldpeak": 2.0}, 1))
    return make_dataset(rows, source=source)


def matrix(values, labels, names=None) -> FeatureMatrix:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if names is None:
        names = tuple(f"f{i}" for i in range(arr.shape[1]))
    return FeatureMatrix(
        values=arr,
        labels=np.asarray(labels, dtype=np.int64),
        column_names=tuple(names),
    )


@pytest.fixture
def tiny_matrix() -> FeatureMatrix:
    return matrix(
        [[-2.0, 0.5], [-1.5, -0.3], [-1.0, 0.1], [1.0, -0.4], [1.5, 0.2], [2.0, -0.1]],
        [0, 0, 0, 1, 1, 1],
    )
