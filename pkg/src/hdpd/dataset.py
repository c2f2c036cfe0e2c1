"""Horizon-labeled datasets: row selection, splits, and preprocessing.

A horizon dataset asks "does onset occur within the next n years?" for
every record that is currently onset-free and has at least one labeled
future record inside the window. Preprocessing drops sparse features,
imputes training medians, and one-hot expands categoricals while
remembering the expansion and the pre-imputation missingness (pair
eligibility downstream depends on what was originally observed).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .cohort import BINARY, CATEGORICAL, CONTINUOUS, Cohort, FeatureMeta

MISSING_DROP_FRACTION = 0.25

TRAIN = "train"
TEST = "test"


def lower_median(values: list[float]) -> float:
    """Median taking the lower of the two middles for even counts."""
    if not values:
        raise ValueError("median of empty sequence")
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


@dataclass(frozen=True)
class EncodedColumn:
    name: str            # encoded column name, e.g. "smoker" or "sex=female"
    source: str          # original feature name
    kind: str            # continuous | binary | onehot
    level: str | None = None


@dataclass
class FeatureSpace:
    """Fitted encoding: retained features, imputation values, column layout."""

    metas: list[FeatureMeta]                   # retained original features, in order
    columns: list[EncodedColumn]
    impute: dict[str, float | str]            # per original feature
    dropped: list[str] = field(default_factory=list)

    @property
    def feature_names(self) -> list[str]:
        return [m.name for m in self.metas]

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise KeyError(name)

    def columns_of(self, feature: str) -> list[int]:
        """Encoded column indices produced by one original feature."""
        return [i for i, c in enumerate(self.columns) if c.source == feature]

    def encode_row(self, values: dict) -> tuple[np.ndarray, np.ndarray]:
        """Encode one record's values.

        Returns (x, miss): x over encoded columns with imputation applied,
        miss over original retained features marking pre-imputation gaps.
        """
        x = np.empty(len(self.columns))
        miss = np.zeros(len(self.metas), dtype=bool)
        filled: dict[str, float | str] = {}
        for j, meta in enumerate(self.metas):
            v = values.get(meta.name)
            if v is None:
                miss[j] = True
                v = self.impute[meta.name]
            filled[meta.name] = v
        for i, col in enumerate(self.columns):
            v = filled[col.source]
            if col.kind == "onehot":
                x[i] = 1.0 if v == col.level else 0.0
            else:
                x[i] = float(v)
        return x, miss


def fit_feature_space(cohort: Cohort, train_keys: list[tuple[str, int]]) -> FeatureSpace:
    """Fit preprocessing on training rows only (no test leakage)."""
    if not train_keys:
        raise ValueError("cannot fit preprocessing without training rows")
    rows = [cohort.record(pid, year).values for pid, year in train_keys]
    n = len(rows)

    metas: list[FeatureMeta] = []
    dropped: list[str] = []
    impute: dict[str, float | str] = {}
    for meta in cohort.schema:
        observed = [r.get(meta.name) for r in rows]
        present = [v for v in observed if v is not None]
        if n - len(present) >= MISSING_DROP_FRACTION * n:
            dropped.append(meta.name)
            if not present:
                warnings.warn(f"feature {meta.name!r} has no training values; dropped")
            continue
        if meta.kind == CATEGORICAL:
            counts = {lv: 0 for lv in meta.levels}
            for v in present:
                counts[v] += 1
            impute[meta.name] = max(meta.levels, key=lambda lv: counts[lv])
        else:
            impute[meta.name] = lower_median([float(v) for v in present])
        metas.append(meta)

    columns: list[EncodedColumn] = []
    for meta in metas:
        if meta.kind == CONTINUOUS:
            columns.append(EncodedColumn(meta.name, meta.name, CONTINUOUS))
        elif meta.kind == BINARY:
            columns.append(EncodedColumn(meta.name, meta.name, BINARY))
        else:
            for lv in meta.levels:
                columns.append(EncodedColumn(f"{meta.name}={lv}", meta.name, "onehot", lv))
    return FeatureSpace(metas, columns, impute, dropped)


@dataclass
class LabeledDataset:
    disease: str
    horizon_years: int
    keys: list[tuple[str, int]]
    y: np.ndarray                        # (n,) int8
    split: dict[str, str] = field(default_factory=dict)   # pid -> train|test
    space: FeatureSpace | None = None
    X: np.ndarray | None = None          # (n, columns) after preprocess
    miss: np.ndarray | None = None       # (n, features) pre-imputation gaps

    def __len__(self) -> int:
        return len(self.keys)

    def rows_in(self, part: str) -> np.ndarray:
        """Row indices whose participant belongs to the given split part."""
        return np.array(
            [i for i, (pid, _) in enumerate(self.keys) if self.split.get(pid) == part],
            dtype=np.intp,
        )


def build_horizon_dataset(
    cohort: Cohort,
    labels: dict[tuple[str, int], int | None],
    horizon_years: int,
    disease: str = "",
) -> LabeledDataset:
    if horizon_years < 0:
        raise ValueError("horizon_years must be >= 0")
    keys: list[tuple[str, int]] = []
    ys: list[int] = []
    grouped = cohort.by_participant()
    for pid in cohort.participants():
        series = grouped[pid]
        for i, rec in enumerate(series):
            current = labels.get((pid, rec.year))
            if current is None:
                continue
            if horizon_years == 0:
                keys.append((pid, rec.year))
                ys.append(current)
                continue
            if current == 1:
                continue
            future = [
                labels.get((pid, r.year))
                for r in series[i + 1 :]
                if rec.year < r.year <= rec.year + horizon_years
            ]
            future = [v for v in future if v is not None]
            if not future:
                continue
            keys.append((pid, rec.year))
            ys.append(1 if any(v == 1 for v in future) else 0)
    return LabeledDataset(disease, horizon_years, keys, np.array(ys, dtype=np.int8))


def split_by_participant(
    participants: list[str], train_fraction: float = 0.8, seed: int = 0
) -> dict[str, str]:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    ordered = sorted(participants)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ordered))
    n_train = round(train_fraction * len(ordered))
    split = {}
    for rank, idx in enumerate(perm):
        split[ordered[idx]] = TRAIN if rank < n_train else TEST
    return split


def preprocess(cohort: Cohort, dataset: LabeledDataset) -> LabeledDataset:
    """Fit the feature space on training rows and encode every row in place."""
    if not dataset.split:
        raise ValueError("assign a split before preprocessing")
    train_keys = [k for k in dataset.keys if dataset.split.get(k[0]) == TRAIN]
    space = fit_feature_space(cohort, train_keys)
    X = np.empty((len(dataset), len(space.columns)))
    miss = np.zeros((len(dataset), len(space.metas)), dtype=bool)
    for i, (pid, year) in enumerate(dataset.keys):
        X[i], miss[i] = space.encode_row(cohort.record(pid, year).values)
    dataset.space = space
    dataset.X = X
    dataset.miss = miss
    return dataset
