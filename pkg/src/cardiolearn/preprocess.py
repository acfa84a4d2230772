"""Feature transformations with strict fit-on-train / apply-everywhere rules.

Fitting learns, from the training partition only:

* a lexicographically sorted vocabulary per categorical column (label
  encoding maps token -> sorted position),
* an imputation table of per-column medians keyed by (Sex token, age
  decade), with whole-column medians as fallback,
* per-numeric-column mean and population standard deviation, computed on
  the imputed values.

Transforming encodes categories, imputes sentinel cells, and standardizes
numeric columns to (x - mean) / std; constant columns (std = 0) map to 0 and
encoded category columns are left unscaled.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dataset import (
    CATEGORICAL_FEATURES,
    FEATURE_NAMES,
    NUMERIC_FEATURES,
    Dataset,
    FeatureKind,
    SCHEMA,
)
from .errors import (
    EmptyDataset,
    KTooLarge,
    MinorityTooSmall,
    UnseenCategory,
)
from .rng import SplitMix64

_AGE_COLUMN = FEATURE_NAMES.index("Age")
_SEX_COLUMN = FEATURE_NAMES.index("Sex")


class UnseenPolicy(enum.Enum):
    ERROR = "error"
    MAP_TO_MODE = "map_to_mode"


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    labels: np.ndarray
    column_names: tuple

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-d matrix")
        if len(self.labels) != self.values.shape[0]:
            raise ValueError("labels length must match row count")
        if len(self.column_names) != self.values.shape[1]:
            raise ValueError("column_names length must match column count")
        if self.values.size and not np.all(np.isfinite(self.values)):
            raise ValueError("matrix entries must be finite")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class OutlierReport:
    flags: np.ndarray
    threshold_z: float

    @property
    def count(self) -> int:
        return int(self.flags.sum())


@dataclass(frozen=True)
class FittedPreprocessor:
    vocab: dict          # categorical feature -> sorted token tuple
    modes: dict          # categorical feature -> most frequent training token
    scale_stats: dict    # numeric feature -> (mean, population std)
    impute_table: dict   # (sex token, age decade) -> {numeric feature: median}
    global_medians: dict # numeric feature -> median over all training rows
    unseen_policy: UnseenPolicy


def _median(values: list) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def _cohort_of(record) -> tuple:
    decade = int(math.floor(record.values[_AGE_COLUMN] / 10.0) * 10)
    return record.values[_SEX_COLUMN], decade


def fit(train: Dataset, unseen_policy: UnseenPolicy = UnseenPolicy.ERROR) -> FittedPreprocessor:
    """Learn vocabularies, imputation medians, and scaling statistics."""
    if len(train) == 0:
        raise EmptyDataset("cannot fit a preprocessor on an empty dataset")

    vocab = {}
    modes = {}
    for col, spec in enumerate(SCHEMA):
        if spec.kind is not FeatureKind.CATEGORICAL:
            continue
        counts = {}
        for record in train.records:
            token = record.values[col]
            counts[token] = counts.get(token, 0) + 1
        vocab[spec.name] = tuple(sorted(counts))
        modes[spec.name] = min(counts, key=lambda t: (-counts[t], t))

    # sentinel cells become missing before any median is taken
    cohort_values = {}
    global_values = {name: [] for name in NUMERIC_FEATURES}
    for record in train.records:
        cohort = _cohort_of(record)
        per_feature = cohort_values.setdefault(cohort, {name: [] for name in NUMERIC_FEATURES})
        for col, spec in enumerate(SCHEMA):
            if spec.kind is not FeatureKind.NUMERIC:
                continue
            value = record.values[col]
            if spec.missing_sentinel is not None and value == spec.missing_sentinel:
                continue
            per_feature[spec.name].append(value)
            global_values[spec.name].append(value)

    global_medians = {
        name: _median(values) if values else 0.0
        for name, values in global_values.items()
    }
    impute_table = {
        cohort: {
            name: _median(values) if values else global_medians[name]
            for name, values in per_feature.items()
        }
        for cohort, per_feature in cohort_values.items()
    }

    partial = FittedPreprocessor(
        vocab=vocab,
        modes=modes,
        scale_stats={name: (0.0, 1.0) for name in NUMERIC_FEATURES},
        impute_table=impute_table,
        global_medians=global_medians,
        unseen_policy=unseen_policy,
    )
    imputed = _imputed_numeric_columns(partial, train)
    scale_stats = {}
    for name in NUMERIC_FEATURES:
        column = imputed[name]
        mean = float(np.mean(column))
        std = float(np.sqrt(np.mean((column - mean) ** 2)))
        scale_stats[name] = (mean, std)
    return FittedPreprocessor(
        vocab=vocab,
        modes=modes,
        scale_stats=scale_stats,
        impute_table=impute_table,
        global_medians=global_medians,
        unseen_policy=unseen_policy,
    )


def _impute_value(fp: FittedPreprocessor, record, spec, value: float) -> float:
    if spec.missing_sentinel is None or value != spec.missing_sentinel:
        return value
    cohort = _cohort_of(record)
    table = fp.impute_table.get(cohort)
    if table is not None:
        return table[spec.name]
    return fp.global_medians[spec.name]


def _imputed_numeric_columns(fp: FittedPreprocessor, data: Dataset) -> dict:
    columns = {name: np.empty(len(data)) for name in NUMERIC_FEATURES}
    for row, record in enumerate(data.records):
        for col, spec in enumerate(SCHEMA):
            if spec.kind is not FeatureKind.NUMERIC:
                continue
            columns[spec.name][row] = _impute_value(fp, record, spec, record.values[col])
    return columns


def transform(fp: FittedPreprocessor, data: Dataset) -> FeatureMatrix:
    """Encode, impute, and scale a dataset with previously fitted state."""
    n = len(data)
    matrix = np.empty((n, len(SCHEMA)))
    for row, record in enumerate(data.records):
        for col, spec in enumerate(SCHEMA):
            value = record.values[col]
            if spec.kind is FeatureKind.CATEGORICAL:
                tokens = fp.vocab[spec.name]
                if value in tokens:
                    matrix[row, col] = tokens.index(value)
                elif fp.unseen_policy is UnseenPolicy.MAP_TO_MODE:
                    matrix[row, col] = tokens.index(fp.modes[spec.name])
                else:
                    raise UnseenCategory(spec.name, value)
            else:
                imputed = _impute_value(fp, record, spec, value)
                mean, std = fp.scale_stats[spec.name]
                matrix[row, col] = 0.0 if std == 0.0 else (imputed - mean) / std
    return FeatureMatrix(
        values=matrix,
        labels=np.array(data.labels, dtype=np.int64),
        column_names=FEATURE_NAMES,
    )


def flag_outliers(m: FeatureMatrix, threshold_z: float = 3.0) -> OutlierReport:
    """Flag standardized numeric cells with |value| > threshold_z.

    Flags are informational only; no row is ever dropped or altered.
    Encoded categorical columns are never flagged.
    """
    if threshold_z <= 0:
        raise ValueError("threshold_z must be positive")
    flags = np.zeros(m.values.shape, dtype=bool)
    numeric = set(NUMERIC_FEATURES)
    for col, name in enumerate(m.column_names):
        if name in numeric:
            flags[:, col] = np.abs(m.values[:, col]) > threshold_z
    return OutlierReport(flags=flags, threshold_z=threshold_z)


def smote(m: FeatureMatrix, k: int = 5, seed: int = 0) -> FeatureMatrix:
    """Balance classes by interpolated synthetic minority rows.

    Each synthetic row is x + u * (nn - x) with x a minority row (cycled in
    row order), nn one of its k nearest minority neighbours under Euclidean
    distance over all columns, and u uniform in [0, 1). Original rows are
    preserved unchanged, in order, ahead of the synthetic block.
    """
    labels = m.labels
    counts = {0: int(np.sum(labels == 0)), 1: int(np.sum(labels == 1))}
    minority = 1 if counts[1] <= counts[0] else 0
    minority_count = counts[minority]
    majority_count = counts[1 - minority]
    if minority_count < 2:
        raise MinorityTooSmall(f"minority class has {minority_count} sample(s), need at least 2")
    if k < 1:
        raise KTooLarge("k must be at least 1")
    if k > minority_count - 1:
        raise KTooLarge(f"k={k} exceeds minority_count-1={minority_count - 1}")

    needed = majority_count - minority_count
    if needed == 0:
        return FeatureMatrix(m.values.copy(), m.labels.copy(), m.column_names)

    minority_rows = np.flatnonzero(labels == minority)
    points = m.values[minority_rows]
    # k nearest minority neighbours per minority row, self excluded,
    # distance ties broken by row position for determinism
    diffs = points[:, None, :] - points[None, :, :]
    distances = np.sqrt(np.sum(diffs * diffs, axis=2))
    neighbour_ids = []
    for i in range(minority_count):
        order = sorted(
            (j for j in range(minority_count) if j != i),
            key=lambda j: (distances[i, j], j),
        )
        neighbour_ids.append(order[:k])

    gen = SplitMix64(seed)
    synthetic = np.empty((needed, m.values.shape[1]))
    for s in range(needed):
        i = s % minority_count
        nn = neighbour_ids[i][gen.randint(k)]
        u = gen.uniform()
        synthetic[s] = points[i] + u * (points[nn] - points[i])

    values = np.vstack([m.values, synthetic])
    new_labels = np.concatenate([labels, np.full(needed, minority, dtype=np.int64)])
    return FeatureMatrix(values=values, labels=new_labels, column_names=m.column_names)
