"""Perturbation grids and data-manifold projection (the p-mICE kernel).

Step 1 perturbs two intervention variables of one record over a grid:
continuous axes move in 4%-of-domain increments up to 40% in either
direction, clipped to the domain (0.5th to 99.5th training
percentiles); binary axes are {0, 1}. Step 2 pulls every
non-intervention variable of each perturbed point back onto the data
manifold: the k nearest rows, among the original record plus training
rows whose dataset label matches the point's predicted label, are
averaged with weights decaying in normalized distance. Discrete
features are stratified (exact match preferred) rather than entering
the metric.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FeatureDomain:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError("domain requires lo <= hi")

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class GridConfig:
    step_fraction: float = 0.04
    max_fraction: float = 0.40
    percentile_clip: float = 0.005

    def __post_init__(self):
        if self.step_fraction <= 0 or self.max_fraction <= 0:
            raise ValueError("grid fractions must be positive")
        steps = self.max_fraction / self.step_fraction
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError("step_fraction must divide max_fraction")
        if not 0.0 <= self.percentile_clip < 0.5:
            raise ValueError("percentile_clip must be in [0, 0.5)")

    @property
    def n_steps(self) -> int:
        return round(self.max_fraction / self.step_fraction)


WEIGHT_SCHEMES = ("exponential", "inverse", "uniform")
POOL_POLICIES = ("point-label", "record-label")
_INVERSE_EPS = 1e-9


@dataclass(frozen=True)
class ProjectionConfig:
    k: int = 6
    weight_scheme: str = "exponential"
    stratify_discrete: bool = True
    pool_policy: str = "point-label"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.weight_scheme not in WEIGHT_SCHEMES:
            raise ValueError(f"unknown weight scheme {self.weight_scheme!r}")
        if self.pool_policy not in POOL_POLICIES:
            raise ValueError(f"unknown pool policy {self.pool_policy!r}")


def compute_domain(values: np.ndarray, clip: float = 0.005) -> FeatureDomain:
    """Domain of one continuous feature from non-missing training values."""
    values = np.asarray(values, dtype=float)
    values = values[~np.isnan(values)]
    if values.size == 0:
        raise ValueError("cannot compute a domain from all-missing values")
    lo = float(np.percentile(values, 100.0 * clip, method="linear"))
    hi = float(np.percentile(values, 100.0 * (1.0 - clip), method="linear"))
    return FeatureDomain(lo, hi)


def compute_domains(
    X: np.ndarray, cont_idx: list[int], clip: float = 0.005
) -> dict[int, FeatureDomain]:
    return {j: compute_domain(X[:, j], clip) for j in cont_idx}


def build_axis(
    v0: float, domain: FeatureDomain | None, kind: str, config: GridConfig = GridConfig()
) -> np.ndarray:
    """Ordered axis values for one intervention variable.

    Offsets falling outside the domain are dropped, never clamped; the
    original value stays even when it lies outside the domain itself.
    """
    if kind == "binary":
        return np.array([0.0, 1.0])
    if kind != "continuous":
        raise ValueError(f"cannot build an axis for feature kind {kind!r}")
    if domain is None:
        raise ValueError("continuous axis requires a domain")
    if v0 is None or np.isnan(v0):
        raise ValueError("intervention variable is missing in the record")
    if domain.width == 0.0:
        return np.array([float(v0)])
    step = config.step_fraction * domain.width
    n = config.n_steps
    offsets = v0 + step * np.arange(-n, n + 1)
    tol = 1e-9 * max(1.0, abs(domain.lo), abs(domain.hi))
    keep = (offsets >= domain.lo - tol) & (offsets <= domain.hi + tol)
    keep[n] = True  # zero offset is the record's own value
    return np.unique(offsets[keep])


def axis_origin(axis: np.ndarray, v0: float) -> int:
    """Index of the record's own value on the axis."""
    hits = np.nonzero(axis == v0)[0]
    if hits.size == 0:
        # Binary axes hold {0,1} as floats; match numerically.
        hits = np.nonzero(np.isclose(axis, v0))[0]
    if hits.size == 0:
        raise ValueError("axis does not contain the original value")
    return int(hits[0])


@dataclass(frozen=True)
class MetricSpace:
    """Which encoded columns enter the distance metric, and their scales."""

    cont_idx: np.ndarray    # metric columns
    lo: np.ndarray
    width: np.ndarray       # zero-width columns are excluded from the metric
    disc_idx: np.ndarray    # strata columns

    @classmethod
    def from_domains(
        cls, domains: dict[int, FeatureDomain], disc_idx: list[int]
    ) -> "MetricSpace":
        cont = sorted(domains)
        return cls(
            np.array(cont, dtype=np.intp),
            np.array([domains[j].lo for j in cont]),
            np.array([domains[j].width for j in cont]),
            np.array(sorted(disc_idx), dtype=np.intp),
        )

    @property
    def scale(self) -> np.ndarray:
        """Per-metric-column divisor; zero-width domains drop out of the metric."""
        return np.where(self.width > 0.0, self.width, np.inf)


def normalized_distance(a: np.ndarray, b: np.ndarray, space: MetricSpace) -> float:
    da = (np.asarray(a, dtype=float)[space.cont_idx] - np.asarray(b, dtype=float)[space.cont_idx])
    return float(np.sqrt(np.sum((da / space.scale) ** 2)))


def perturb_2d(
    x0: np.ndarray, col_x: int, col_y: int, axis_x: np.ndarray, axis_y: np.ndarray
) -> np.ndarray:
    """All grid points in row-major order (y outer, x inner); only the two
    intervention columns differ from the original vector."""
    if col_x == col_y:
        raise ValueError("intervention variables must differ")
    nx, ny = len(axis_x), len(axis_y)
    points = np.tile(np.asarray(x0, dtype=float), (nx * ny, 1))
    points[:, col_x] = np.tile(axis_x, ny)
    points[:, col_y] = np.repeat(axis_y, nx)
    return points


def select_k_smallest(dist: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k smallest distances, ties broken by lower index."""
    m = len(dist)
    if k >= m:
        return np.lexsort((np.arange(m), dist))
    part = np.argpartition(dist, k - 1)[:k]
    dk = dist[part].max()
    cand = np.nonzero(dist <= dk)[0]
    return cand[np.lexsort((cand, dist[cand]))][:k]


def knn_candidates(
    point: np.ndarray,
    pool: np.ndarray,
    space: MetricSpace,
    k: int,
    stratify: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """k nearest pool rows for one perturbed point.

    Pool row 0 must be the original record; ties prefer it, then lower
    row index. Rows matching the point on every discrete column form
    the stratum; when the stratum has fewer than k rows the whole pool
    competes with a +1 distance penalty per mismatched discrete column.
    Returns (pool indices, distances as used for ranking).
    """
    if pool.shape[0] == 0:
        raise ValueError("empty candidate pool")
    if k > pool.shape[0]:
        warnings.warn(f"k={k} exceeds pool size {pool.shape[0]}; returning all rows")
        k = pool.shape[0]
    diffs = (pool[:, space.cont_idx] - point[space.cont_idx]) / space.scale
    dist = np.sqrt(np.sum(diffs * diffs, axis=1))
    if stratify and len(space.disc_idx):
        mism = np.sum(pool[:, space.disc_idx] != point[space.disc_idx], axis=1)
        stratum = np.nonzero(mism == 0)[0]
        if stratum.size >= k:
            chosen = stratum[select_k_smallest(dist[stratum], k)]
            return chosen, dist[chosen]
        penalized = dist + mism
        chosen = select_k_smallest(penalized, k)
        return chosen, penalized[chosen]
    chosen = select_k_smallest(dist, k)
    return chosen, dist[chosen]


def projection_weights(distances: np.ndarray, scheme: str = "exponential") -> np.ndarray:
    distances = np.asarray(distances, dtype=float)
    if distances.size == 0:
        raise ValueError("need at least one neighbor")
    if scheme == "exponential":
        w = np.exp(-distances)
    elif scheme == "inverse":
        w = 1.0 / (distances + _INVERSE_EPS)
    elif scheme == "uniform":
        w = np.ones_like(distances)
    else:
        raise ValueError(f"unknown weight scheme {scheme!r}")
    return w / w.sum()


def project(
    point: np.ndarray,
    neighbors: np.ndarray,
    weights: np.ndarray,
    intervention_cols: tuple[int, ...],
    feature_cols: list[list[int]] | None = None,
    neighbor_miss: np.ndarray | None = None,
) -> np.ndarray:
    """Replace non-intervention variables by the weighted neighbor average.

    When `neighbor_miss` marks originally-missing values (one column per
    original feature, aligned with `feature_cols`), neighbors missing a
    feature drop out of that feature's average and the remaining weights
    renormalize; a feature missing in every neighbor keeps the point's
    own value.
    """
    out = np.array(point, dtype=float)
    keep = np.zeros(len(point), dtype=bool)
    keep[list(intervention_cols)] = True
    if neighbor_miss is None or not neighbor_miss.any():
        avg = weights @ neighbors
        out[~keep] = avg[~keep]
        return out
    if feature_cols is None:
        raise ValueError("feature_cols required when neighbor_miss is given")
    for j, cols in enumerate(feature_cols):
        cols = [c for c in cols if not keep[c]]
        if not cols:
            continue
        ok = ~neighbor_miss[:, j]
        if not ok.any():
            continue  # every neighbor missing: keep the point's value
        w = weights[ok]
        out[cols] = (w / w.sum()) @ neighbors[np.ix_(ok, cols)]
    return out


def ice_curve(predict, x0: np.ndarray, col: int, axis: np.ndarray) -> list[tuple[float, float]]:
    """Classical 1-D ICE: probability along one axis, all else fixed."""
    points = np.tile(np.asarray(x0, dtype=float), (len(axis), 1))
    points[:, col] = axis
    probs = predict(points)
    return [(float(v), float(p)) for v, p in zip(axis, probs)]
