"""End-to-end glue: cohort + rule -> labeled dataset -> fitted model -> engine."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cohort import Cohort
from .dataset import (
    TEST,
    TRAIN,
    FeatureSpace,
    LabeledDataset,
    build_horizon_dataset,
    preprocess,
    split_by_participant,
)
from .diagrams import DiagramEngine
from .gbdt import TrainConfig, train_gbdt
from .metrics import auc
from .model_io import FittedModel
from .pmice import GridConfig, ProjectionConfig
from .rules import DiseaseRule, label_disease
from .selection import rfe, select_threshold_cv


@dataclass(frozen=True)
class PipelineConfig:
    horizon_years: int = 3
    train_fraction: float = 0.8
    split_seed: int = 0
    cv_folds: int = 5
    rfe_target: int | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)

    def to_json(self) -> dict:
        return {
            "horizon_years": self.horizon_years,
            "train_fraction": self.train_fraction,
            "split_seed": self.split_seed,
            "cv_folds": self.cv_folds,
            "rfe_target": self.rfe_target,
            "train": vars(self.train).copy(),
            "grid": vars(self.grid).copy(),
            "projection": vars(self.projection).copy(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "PipelineConfig":
        return cls(
            horizon_years=data.get("horizon_years", 3),
            train_fraction=data.get("train_fraction", 0.8),
            split_seed=data.get("split_seed", 0),
            cv_folds=data.get("cv_folds", 5),
            rfe_target=data.get("rfe_target"),
            train=TrainConfig(**data.get("train", {})),
            grid=GridConfig(**data.get("grid", {})),
            projection=ProjectionConfig(**data.get("projection", {})),
        )

    def config_hash(self) -> str:
        from .workspace import config_hash

        return config_hash(self.to_json())


def build_dataset(
    cohort: Cohort, rule: DiseaseRule, config: PipelineConfig
) -> LabeledDataset:
    labels = label_disease(cohort, rule)
    dataset = build_horizon_dataset(cohort, labels, config.horizon_years, rule.disease)
    if not dataset.keys:
        raise ValueError(f"no eligible rows for disease {rule.disease!r}")
    pids = sorted({pid for pid, _ in dataset.keys})
    dataset.split = split_by_participant(pids, config.train_fraction, config.split_seed)
    return preprocess(cohort, dataset)


def _restrict_space(space: FeatureSpace, column_names: list[str]) -> FeatureSpace:
    """Feature space reduced to the given encoded columns (order preserved)."""
    wanted = set(column_names)
    columns = [c for c in space.columns if c.name in wanted]
    sources = {c.source for c in columns}
    metas = [m for m in space.metas if m.name in sources]
    impute = {m.name: space.impute[m.name] for m in metas}
    return FeatureSpace(metas, columns, impute, list(space.dropped))


def restrict_dataset(dataset: LabeledDataset, column_names: list[str]) -> LabeledDataset:
    """Dataset view over a column subset (after feature elimination)."""
    space = _restrict_space(dataset.space, column_names)
    col_idx = [dataset.space.column_index(c.name) for c in space.columns]
    meta_idx = [dataset.space.feature_names.index(m.name) for m in space.metas]
    out = LabeledDataset(
        dataset.disease,
        dataset.horizon_years,
        list(dataset.keys),
        dataset.y,
        dict(dataset.split),
        space,
        dataset.X[:, col_idx],
        dataset.miss[:, meta_idx],
    )
    return out


@dataclass
class FitResult:
    model: FittedModel
    dataset: LabeledDataset        # restricted to the model's columns
    test_auc: float | None
    rfe_trace: list[tuple[int, float]] = field(default_factory=list)


def fit_model(dataset: LabeledDataset, config: PipelineConfig) -> FitResult:
    train_rows = dataset.rows_in(TRAIN)
    if train_rows.size == 0:
        raise ValueError("training split is empty")
    pids = [dataset.keys[i][0] for i in train_rows]
    X_tr = dataset.X[train_rows]
    y_tr = dataset.y[train_rows].astype(float)
    names = dataset.space.column_names

    trace: list[tuple[int, float]] = []
    if config.rfe_target is not None and config.rfe_target < len(names):
        names, trace = rfe(
            X_tr, y_tr, pids, names, config.train, config.rfe_target, config.cv_folds
        )
        dataset = restrict_dataset(dataset, names)
        train_rows = dataset.rows_in(TRAIN)
        X_tr = dataset.X[train_rows]

    ensemble = train_gbdt(X_tr, y_tr, config.train, names)
    tau = select_threshold_cv(X_tr, y_tr, pids, config.train, config.cv_folds)
    model = FittedModel(ensemble, tau, ensemble.feature_importance())

    test_rows = dataset.rows_in(TEST)
    test_auc = None
    y_te = dataset.y[test_rows]
    if test_rows.size and y_te.min() != y_te.max():
        test_auc = auc(model.predict_proba(dataset.X[test_rows]), y_te)
    return FitResult(model, dataset, test_auc, trace)


def build_engine(
    fit: FitResult, config: PipelineConfig, disease: str | None = None
) -> DiagramEngine:
    dataset = fit.dataset
    train_rows = dataset.rows_in(TRAIN)
    return DiagramEngine(
        fit.model,
        dataset.space,
        dataset.X[train_rows],
        dataset.y[train_rows],
        dataset.miss[train_rows],
        config.grid,
        config.projection,
        disease if disease is not None else dataset.disease,
        [dataset.keys[i][0] for i in train_rows],
    )


def run_pipeline(
    cohort: Cohort, rule: DiseaseRule, config: PipelineConfig
) -> tuple[FitResult, DiagramEngine]:
    dataset = build_dataset(cohort, rule, config)
    fit = fit_model(dataset, config)
    return fit, build_engine(fit, config)


def parse_record_id(record_id: str) -> tuple[str, int]:
    """Record ids are "participant@year"."""
    pid, sep, year = record_id.rpartition("@")
    if not sep or not pid:
        raise ValueError(f"record id must look like 'participant@year', got {record_id!r}")
    try:
        return pid, int(year)
    except ValueError:
        raise ValueError(f"record id has a non-integer year: {record_id!r}") from None


def record_id(pid: str, year: int) -> str:
    return f"{pid}@{year}"


def dumps_canonical(payload) -> str:
    """Canonical JSON for hashing and byte-identical caching."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)


def encode_record(dataset: LabeledDataset, cohort: Cohort, pid: str, year: int):
    x0, miss0 = dataset.space.encode_row(cohort.record(pid, year).values)
    return np.asarray(x0), np.asarray(miss0)
