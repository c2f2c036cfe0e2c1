"""Seeded synthetic longitudinal cohorts with a planted onset mechanism.

Each participant carries latent AR(1) trajectories. A small set of
designated "causal" biomarkers feeds a logistic risk score that drives
a disease marker upward year over year; the disease label is simply a
threshold rule on that marker, so labeling the generated cohort with
the matching rule reproduces the planted onsets. Remaining biomarkers
are grouped into correlated blocks and carry no signal.

A configurable fraction of participants is "intervened": from a given
year onward their causal biomarkers are pulled toward healthy values,
which lets retrospective analyses compare prevented against actual
onsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cohort import CONTINUOUS, Cohort, FeatureMeta, Record
from .rules import DiseaseRule, ThresholdClause


@dataclass(frozen=True)
class SyntheticConfig:
    n_participants: int = 2000
    n_years: int = 6
    seed: int = 0
    n_features: int = 8          # non-marker biomarkers, bm00..bm{n-1}
    n_blocks: int = 3            # correlation blocks for the non-causal biomarkers
    block_weight: float = 0.6
    ar_rho: float = 0.75
    causal_features: tuple[str, ...] = ("bm00", "bm01", "bm02")
    causal_coefs: tuple[float, ...] = (1.2, 0.9, 0.7)
    risk_bias: float = 2.2
    marker_name: str = "marker"
    marker_base: float = 5.5
    marker_cutoff: float = 6.5
    marker_gain: float = 0.7
    marker_decay: float = 0.22
    marker_noise: float = 0.05
    intervention_strength: float = 1.0
    intervened_fraction: float = 0.35
    intervention_year_index: int = 2   # offset from the first year
    healthy_target: float = -1.0       # standardized value intervened causal features approach
    missing_rate: float = 0.0
    start_year: int = 2008
    disease: str = "synthetic"

    def __post_init__(self):
        if self.n_participants < 1 or self.n_years < 1:
            raise ValueError("need at least one participant and one year")
        if len(self.causal_coefs) != len(self.causal_features):
            raise ValueError("one coefficient per causal feature")
        if not 2 <= len(self.causal_features) <= 4:
            raise ValueError("planted mechanism uses 2-4 designated features")
        known = {f"bm{i:02d}" for i in range(self.n_features)}
        for name in self.causal_features:
            if name not in known:
                raise ValueError(f"designated feature {name!r} not in feature spec")
        if not 0.0 <= self.missing_rate < 1.0:
            raise ValueError("missing_rate must be in [0, 1)")
        if not 0.0 <= self.intervened_fraction <= 1.0:
            raise ValueError("intervened_fraction must be in [0, 1]")

    @property
    def biomarker_names(self) -> list[str]:
        return [f"bm{i:02d}" for i in range(self.n_features)]

    def schema(self) -> list[FeatureMeta]:
        metas = [
            FeatureMeta(self.marker_name, CONTINUOUS, unit="au", risk_direction="high")
        ]
        causal = set(self.causal_features)
        for name in self.biomarker_names:
            metas.append(
                FeatureMeta(
                    name,
                    CONTINUOUS,
                    unit="au",
                    risk_direction="high" if name in causal else None,
                )
            )
        return metas

    def rule(self) -> DiseaseRule:
        return DiseaseRule(
            self.disease, (ThresholdClause(self.marker_name, ">=", self.marker_cutoff),)
        )


@dataclass
class SyntheticTruth:
    """Ground truth of a generated cohort, for validation only."""

    intervened: dict[str, bool] = field(default_factory=dict)
    causal_features: tuple[str, ...] = ()


def _ar1_path(rng: np.random.Generator, n: int, years: int, rho: float) -> np.ndarray:
    """Stationary AR(1) sample paths, shape (n, years)."""
    z = np.empty((n, years))
    z[:, 0] = rng.standard_normal(n)
    innov = math.sqrt(1.0 - rho * rho)
    for t in range(1, years):
        z[:, t] = rho * z[:, t - 1] + innov * rng.standard_normal(n)
    return z


def generate_synthetic(config: SyntheticConfig) -> Cohort:
    cohort, _ = generate_synthetic_with_truth(config)
    return cohort


def generate_synthetic_with_truth(config: SyntheticConfig) -> tuple[Cohort, SyntheticTruth]:
    rng = np.random.default_rng(config.seed)
    n, years = config.n_participants, config.n_years
    rho = config.ar_rho

    intervened = rng.random(n) < config.intervened_fraction
    pull = min(max(config.intervention_strength, 0.0), 1.0)

    causal = list(config.causal_features)
    causal_z = {}
    for name in causal:
        z = _ar1_path(rng, n, years, rho)
        for t in range(config.intervention_year_index, years):
            z[intervened, t] = (1.0 - pull) * z[intervened, t] + pull * config.healthy_target
        causal_z[name] = z

    block_u = [_ar1_path(rng, n, years, rho) for _ in range(max(config.n_blocks, 1))]
    w = config.block_weight
    noise_w = math.sqrt(max(0.0, 1.0 - w * w))
    other_z = {}
    for i, name in enumerate(config.biomarker_names):
        if name in causal_z:
            continue
        own = _ar1_path(rng, n, years, rho)
        other_z[name] = w * block_u[i % len(block_u)] + noise_w * own

    # Marker integrates logistic risk pressure from the causal features and
    # relaxes toward its base level once the pressure is gone.
    coefs = dict(zip(causal, config.causal_coefs))
    risk = -config.risk_bias * np.ones((n, years))
    for name in causal:
        risk += coefs[name] * causal_z[name]
    pressure = 1.0 / (1.0 + np.exp(-risk))
    marker = np.empty((n, years))
    marker[:, 0] = config.marker_base + 0.25 * rng.standard_normal(n)
    for t in range(1, years):
        marker[:, t] = (
            marker[:, t - 1]
            + config.marker_gain * pressure[:, t]
            - config.marker_decay * (marker[:, t - 1] - config.marker_base)
            + config.marker_noise * rng.standard_normal(n)
        )

    # Scale standardized trajectories into biomarker-like units, with a
    # mild quadratic bend so the marginals are not perfectly Gaussian.
    columns: dict[str, np.ndarray] = {config.marker_name: marker}
    all_z = {**causal_z, **other_z}
    for i, name in enumerate(config.biomarker_names):
        z = all_z[name]
        columns[name] = (40.0 + 7.0 * i) + (5.0 + i % 4) * (z + 0.08 * z * z)

    # the marker is never masked so every record stays labelable
    missing = None
    if config.missing_rate > 0.0:
        missing = rng.random((n, years, config.n_features)) < config.missing_rate

    names = [config.marker_name, *config.biomarker_names]
    records = []
    truth = SyntheticTruth(causal_features=tuple(causal))
    for p in range(n):
        pid = f"p{p:05d}"
        truth.intervened[pid] = bool(intervened[p])
        for t in range(years):
            values: dict[str, float | str | None] = {}
            for j, name in enumerate(names):
                if j > 0 and missing is not None and missing[p, t, j - 1]:
                    values[name] = None
                else:
                    values[name] = float(columns[name][p, t])
            records.append(Record(pid, config.start_year + t, values))

    return Cohort(config.schema(), records), truth
