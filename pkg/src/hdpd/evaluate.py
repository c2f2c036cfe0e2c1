"""Retrospective validation of personal boundaries.

Predicted-onset records (baseline probability >= tau) split into
actual-onset and prevented-onset groups by what really happened inside
the horizon. Two analyses compare them:

* improved-HDPD proportion: the share of a record's boundary-formed
  diagrams where some future visit lands in a non-onset cell; the two
  groups are compared with a rank-sum test.
* approached distance: per feature pair, set the pair to its future
  values, project, and measure how much closer the projected point is
  to the real future record than the raw perturbed point was; the two
  distances are compared with a paired t-test.

The same approached-distance score, aggregated as mean/std over
records, drives the choice of the neighbor count k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import NO_BOUNDARY_NON_ONSET, NO_BOUNDARY_ONSET
from .cohort import Cohort
from .dataset import TEST, LabeledDataset
from .diagrams import Diagram, DiagramEngine
from .pmice import normalized_distance
from .stats import paired_t, wilcoxon_rank_sum

ACTUAL_ONSET = "actual-onset"
PREVENTED_ONSET = "prevented-onset"

K_GRID = (1, 2, 4, 6, 8, 10, 12, 16, 20, 24, 28, 32, 40, 48, 56, 64)


@dataclass(frozen=True)
class PredictedOnsetRecord:
    key: tuple[str, int]
    row: int
    probability: float
    outcome: str  # actual-onset (TP) or prevented-onset (FP)


def categorize_predictions(
    dataset: LabeledDataset, probs: np.ndarray, rows: np.ndarray, tau: float
) -> list[PredictedOnsetRecord]:
    """Predicted-onset rows among `rows`, sorted by record key."""
    out = []
    for r, p in zip(rows, probs):
        if p < tau:
            continue
        outcome = ACTUAL_ONSET if dataset.y[r] == 1 else PREVENTED_ONSET
        out.append(PredictedOnsetRecord(dataset.keys[r], int(r), float(p), outcome))
    out.sort(key=lambda rec: rec.key)
    return out


def map_future_to_cell(
    diagram: Diagram, fx_value: float, fy_value: float
) -> tuple[int, int] | None:
    """Nearest grid cell for a future (fx, fy) pair, or None when either
    coordinate falls outside its axis range (never clamped)."""
    ax, ay = np.asarray(diagram.axis_x, dtype=float), np.asarray(diagram.axis_y, dtype=float)
    if not (ax.min() <= fx_value <= ax.max() and ay.min() <= fy_value <= ay.max()):
        return None
    ix = int(np.argmin(np.abs(ax - fx_value)))
    iy = int(np.argmin(np.abs(ay - fy_value)))
    return iy, ix


def improved_hdpd_proportion(
    diagrams: list[Diagram], future_values: list[dict]
) -> float | None:
    """Share of boundary-formed diagrams where any future visit maps to a
    non-onset cell; None when no diagram has a boundary and a mappable
    future point."""
    eligible = 0
    improved = 0
    for d in diagrams:
        if d.pattern in (NO_BOUNDARY_ONSET, NO_BOUNDARY_NON_ONSET):
            continue
        cells = []
        for values in future_values:
            fx, fy = values.get(d.var_x), values.get(d.var_y)
            if fx is None or fy is None:
                continue
            cell = map_future_to_cell(d, float(fx), float(fy))
            if cell is not None:
                cells.append(cell)
        if not cells:
            continue
        eligible += 1
        if any(d.label[iy, ix] == 0 for iy, ix in cells):
            improved += 1
    if eligible == 0:
        return None
    return improved / eligible


@dataclass
class ApproachedResult:
    key: tuple[str, int]
    outcome: str
    mean_ice: float      # mean over pairs of d(2d-ICE point, future)
    mean_pmice: float    # mean over pairs of d(p-mICE point, future)

    @property
    def approached(self) -> float:
        return self.mean_ice - self.mean_pmice


def approached_distance(
    engine: DiagramEngine,
    cohort: Cohort,
    dataset: LabeledDataset,
    record: PredictedOnsetRecord,
    horizon_years: int = 3,
    exclude_own_participant: bool = False,
) -> ApproachedResult | None:
    """Mean over pairs of the distance gained by projection, for one record.

    Per pair, the intervention variables take their values from the
    earliest future visit (within the horizon) observing both, and the
    non-intervention variables are projected; both the raw and the
    projected point are measured against that future record. None when
    no pair has an eligible future visit.
    """
    pid, year = record.key
    x0 = dataset.X[record.row]
    miss0 = dataset.miss[record.row]
    futures = [
        rec
        for rec in cohort.by_participant()[pid]
        if year < rec.year <= year + horizon_years
    ]
    if not futures:
        return None
    encoded = [(rec, *dataset.space.encode_row(rec.values)) for rec in futures]
    exclude = pid if exclude_own_participant else None

    ice_dists = []
    pm_dists = []
    for fx, fy in engine.eligible_pairs(miss0):
        col_x, _ = engine.axis_features[fx]
        col_y, _ = engine.axis_features[fy]
        target = None
        for rec, x_future, _ in encoded:
            if rec.get(fx) is not None and rec.get(fy) is not None:
                target = x_future
                break
        if target is None:
            continue
        point = x0.copy()
        point[col_x] = target[col_x]
        point[col_y] = target[col_y]
        projected = engine.project_single(x0, miss0, point, (col_x, col_y), exclude)
        ice_dists.append(normalized_distance(point, target, engine.metric))
        pm_dists.append(normalized_distance(projected, target, engine.metric))
    if not ice_dists:
        return None
    return ApproachedResult(
        record.key, record.outcome, float(np.mean(ice_dists)), float(np.mean(pm_dists))
    )


def k_score(values: list[float]) -> float:
    """mean/std of approached distances; std 0 falls back to the mean."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("no approached-distance values")
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean / std if std > 0.0 else mean


def select_k(k_grid: tuple[int, ...], scores: dict[int, float]) -> int:
    """Argmax over the grid; ties take the smaller k."""
    best = None
    for k in sorted(k_grid):
        s = scores[k]
        if best is None or s > scores[best]:
            best = k
    if best is None:
        raise ValueError("empty k grid")
    return best


def tune_k(
    engine: DiagramEngine,
    cohort: Cohort,
    dataset: LabeledDataset,
    records: list[PredictedOnsetRecord],
    horizon_years: int = 3,
    k_grid: tuple[int, ...] = K_GRID,
) -> tuple[int, dict[int, float]]:
    """Choose k maximizing mean/std of approached distance over records.

    Records come from the training split; each record's own participant
    is removed from the candidate pool so its genuine future rows cannot
    be "found" by the search.
    """
    if not records:
        raise ValueError("tune_k needs at least one predicted-onset record")
    scores: dict[int, float] = {}
    for k in k_grid:
        probed = engine.with_projection(
            type(engine.projection)(
                k=k,
                weight_scheme=engine.projection.weight_scheme,
                stratify_discrete=engine.projection.stratify_discrete,
                pool_policy=engine.projection.pool_policy,
            )
        )
        values = []
        for rec in sorted(records, key=lambda r: r.key):
            res = approached_distance(
                probed, cohort, dataset, rec, horizon_years, exclude_own_participant=True
            )
            if res is not None:
                values.append(res.approached)
        if not values:
            raise ValueError(f"no record produced an approached distance at k={k}")
        scores[k] = k_score(values)
    return select_k(k_grid, scores), scores


@dataclass
class EvaluationReport:
    disease: str
    horizon_years: int
    n_actual: int
    n_prevented: int
    improved_actual: list[float] = field(default_factory=list)
    improved_prevented: list[float] = field(default_factory=list)
    improved_p: float | None = None
    approached_mean: float | None = None
    approached_std: float | None = None
    approached_p: float | None = None
    k: int | None = None

    def to_json(self) -> dict:
        return {
            "disease": self.disease,
            "horizon_years": self.horizon_years,
            "n_actual_onset": self.n_actual,
            "n_prevented_onset": self.n_prevented,
            "improved_hdpd": {
                "actual_onset": self.improved_actual,
                "prevented_onset": self.improved_prevented,
                "wilcoxon_p": self.improved_p,
            },
            "approached_distance": {
                "mean": self.approached_mean,
                "std": self.approached_std,
                "paired_t_p": self.approached_p,
            },
            "k": self.k,
        }


def format_report(report: EvaluationReport) -> str:
    """Human-readable two-table summary of one disease's evaluation."""

    def num(v, digits=3):
        return "n/a" if v is None else f"{v:.{digits}f}"

    def median(vals):
        return "n/a" if not vals else f"{float(np.median(vals)):.3f}"

    lines = [
        f"disease: {report.disease} (horizon {report.horizon_years}y, k={report.k})",
        "",
        "approached distance (2d-ICE minus p-mICE, positive = closer)",
        f"  mean +/- sd : {num(report.approached_mean)} +/- {num(report.approached_std)}",
        f"  paired t p  : {num(report.approached_p, 4)}",
        "",
        "improved-HDPD proportion by outcome group",
        f"  {'group':<18}{'n':>5}{'median':>9}",
        f"  {'actual-onset':<18}{report.n_actual:>5}{median(report.improved_actual):>9}",
        f"  {'prevented-onset':<18}{report.n_prevented:>5}"
        f"{median(report.improved_prevented):>9}",
        f"  rank-sum p  : {num(report.improved_p, 4)}",
    ]
    return "\n".join(lines)


def evaluate_disease(
    engine: DiagramEngine,
    cohort: Cohort,
    dataset: LabeledDataset,
    horizon_years: int = 3,
    max_records: int | None = None,
    split: str = TEST,
) -> EvaluationReport:
    """Full retrospective evaluation on one disease's held-out records."""
    rows = dataset.rows_in(split)
    if rows.size == 0:
        raise ValueError(f"no rows in split {split!r}")
    probs = engine.model.predict_proba(dataset.X[rows])
    records = categorize_predictions(dataset, probs, rows, engine.model.threshold)
    if max_records is not None:
        records = records[:max_records]

    grouped = cohort.by_participant()
    improved = {ACTUAL_ONSET: [], PREVENTED_ONSET: []}
    ice_means = []
    pm_means = []
    for rec in records:
        pid, year = rec.key
        x0 = dataset.X[rec.row]
        miss0 = dataset.miss[rec.row]
        diagrams = engine.batch_diagrams(x0, miss0, f"{pid}@{year}")
        futures = [
            r.values for r in grouped[pid] if year < r.year <= year + horizon_years
        ]
        prop = improved_hdpd_proportion(diagrams, futures)
        if prop is not None:
            improved[rec.outcome].append(prop)
        res = approached_distance(engine, cohort, dataset, rec, horizon_years)
        if res is not None:
            ice_means.append(res.mean_ice)
            pm_means.append(res.mean_pmice)

    report = EvaluationReport(
        dataset.disease,
        horizon_years,
        n_actual=sum(1 for r in records if r.outcome == ACTUAL_ONSET),
        n_prevented=sum(1 for r in records if r.outcome == PREVENTED_ONSET),
        improved_actual=improved[ACTUAL_ONSET],
        improved_prevented=improved[PREVENTED_ONSET],
        k=engine.projection.k,
    )
    if improved[ACTUAL_ONSET] and improved[PREVENTED_ONSET]:
        report.improved_p = wilcoxon_rank_sum(
            improved[PREVENTED_ONSET], improved[ACTUAL_ONSET]
        )
    if ice_means:
        diffs = np.asarray(ice_means) - np.asarray(pm_means)
        report.approached_mean = float(diffs.mean())
        report.approached_std = float(diffs.std(ddof=1)) if len(diffs) > 1 else 0.0
        if len(diffs) >= 2:
            report.approached_p = paired_t(ice_means, pm_means)
    return report
