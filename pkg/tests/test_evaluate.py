"""Retrospective evaluation: future mapping, approached distance, k choice.

The approached-distance checks run on a crafted cohort where the
nearest candidate row coincides with the record's real future, so the
expected distances have closed forms.
"""

from types import SimpleNamespace

import numpy as np
import pytest

from hdpd.analysis import BIVARIATE, NO_BOUNDARY_ONSET, UNIVARIATE_X
from hdpd.cohort import CONTINUOUS, Cohort, FeatureMeta, Record
from hdpd.dataset import EncodedColumn, FeatureSpace
from hdpd.diagrams import DiagramEngine
from hdpd.evaluate import (
    ACTUAL_ONSET,
    K_GRID,
    PREVENTED_ONSET,
    EvaluationReport,
    PredictedOnsetRecord,
    approached_distance,
    categorize_predictions,
    format_report,
    improved_hdpd_proportion,
    k_score,
    map_future_to_cell,
    select_k,
    tune_k,
)
from hdpd.pmice import ProjectionConfig


class _LinearModel:
    def __init__(self, features, w, b=0.0, threshold=0.5):
        self.features = list(features)
        self.w = np.asarray(w, dtype=float)
        self.b = float(b)
        self.threshold = threshold

    def predict_proba(self, X):
        z = np.atleast_2d(np.asarray(X, dtype=float)) @ self.w + self.b
        return 1.0 / (1.0 + np.exp(-z))


W_C = 9.9  # width of feature c's training domain in the crafted cohort


def _mini_env():
    """One record (c unobserved), whose real 1-year future sits in training.

    Feature domains: a spans [0.5, 99.5] (width 99), b and c span
    [0.05, 9.95] (width 9.9). Train row 120 is exactly the record's
    future visit [60, 6, 0.5] and belongs to the same participant.
    """
    space = FeatureSpace(
        [FeatureMeta("a"), FeatureMeta("b"), FeatureMeta("c")],
        [
            EncodedColumn("a", "a", CONTINUOUS),
            EncodedColumn("b", "b", CONTINUOUS),
            EncodedColumn("c", "c", CONTINUOUS),
        ],
        {"a": 0.0, "b": 0.0, "c": 0.0},
    )
    n = 201
    X = np.column_stack(
        [np.linspace(0, 100, n), np.linspace(0, 10, n), np.linspace(0, 10, n)]
    )
    X[120] = [60.0, 6.0, 0.5]
    y = (X[:, 0] > 55.0).astype(int)
    pids = [f"o{i}" for i in range(n)]
    pids[120] = "p1"
    model = _LinearModel(space.column_names, [1.0, 0.0, 0.0], -55.0)
    engine = DiagramEngine(
        model, space, X, y, projection=ProjectionConfig(k=1), train_pids=pids
    )

    records = [
        Record("p1", 2000, {"a": 50.0, "b": 5.0, "c": None}),
        Record("p1", 2001, {"a": 60.0, "b": 6.0, "c": 0.5}),
        Record("p1", 2002, {"a": 70.0, "b": 7.0, "c": 3.0}),
        Record("p2", 2000, {"a": 58.0, "b": 5.0, "c": 1.0}),
        Record("p3", 2000, {"a": 57.0, "b": 5.0, "c": None}),
        Record("p3", 2001, {"a": 61.0, "b": None, "c": 1.0}),
    ]
    cohort = Cohort(space.metas, records)

    rows = [records[0], records[3], records[4]]
    X0, M0 = zip(*(space.encode_row(r.values) for r in rows))
    dataset = SimpleNamespace(
        space=space,
        X=np.array(X0),
        miss=np.array(M0),
        y=np.array([1, 0, 0]),
        keys=[r.key for r in rows],
    )
    return engine, cohort, dataset


# ---- future mapping -------------------------------------------------------------


def _grid(label, axis_x, axis_y, pattern=BIVARIATE, var_x="a", var_y="b"):
    return SimpleNamespace(
        label=np.asarray(label, dtype=np.int8),
        axis_x=np.asarray(axis_x, dtype=float),
        axis_y=np.asarray(axis_y, dtype=float),
        pattern=pattern,
        var_x=var_x,
        var_y=var_y,
    )


def test_map_future_to_nearest_cell():
    d = _grid([[0, 0, 0], [0, 0, 0]], [1.0, 2.0, 3.0], [10.0, 20.0])
    assert map_future_to_cell(d, 2.4, 14.0) == (0, 1)
    assert map_future_to_cell(d, 3.0, 20.0) == (1, 2)   # endpoints stay in range
    assert map_future_to_cell(d, 1.0, 10.0) == (0, 0)
    assert map_future_to_cell(d, 1.5, 10.0) == (0, 0)   # midpoint takes the lower index


def test_out_of_range_futures_are_dropped_not_clamped():
    d = _grid([[0, 0]], [1.0, 2.0], [10.0])
    assert map_future_to_cell(d, 0.99, 10.0) is None
    assert map_future_to_cell(d, 2.01, 10.0) is None
    assert map_future_to_cell(d, 1.5, 10.1) is None


def test_improved_proportion_counts_boundary_diagrams_only():
    no_boundary = _grid([[1, 1]], [1.0, 2.0], [10.0], pattern=NO_BOUNDARY_ONSET)
    escape = _grid(
        [[1, 1, 0], [1, 1, 0]], [1.0, 2.0, 3.0], [10.0, 20.0], pattern=UNIVARIATE_X
    )
    trapped = _grid(
        [[1, 1], [1, 1]], [1.0, 2.0], [10.0, 20.0], pattern=BIVARIATE,
        var_x="a", var_y="c",
    )
    futures = [
        {"a": 3.0, "b": 11.0, "c": 20.0},  # a=3 is outside trapped's x axis
        {"a": 0.2, "b": 10.0},
        {"a": 2.0, "c": 15.0},
    ]
    prop = improved_hdpd_proportion([no_boundary, escape, trapped], futures)
    assert prop == pytest.approx(0.5)  # escape improves, trapped does not


def test_improved_proportion_none_when_nothing_eligible():
    escape = _grid([[1, 0]], [1.0, 2.0], [10.0], pattern=UNIVARIATE_X)
    assert improved_hdpd_proportion([escape], [{"a": 9.0, "b": 10.0}]) is None
    assert improved_hdpd_proportion([escape], [{"b": 10.0}]) is None
    assert improved_hdpd_proportion([escape], []) is None
    all_onset = _grid([[1, 1]], [1.0, 2.0], [10.0], pattern=NO_BOUNDARY_ONSET)
    assert improved_hdpd_proportion([all_onset], [{"a": 1.0, "b": 10.0}]) is None


# ---- approached distance ---------------------------------------------------------


def test_approached_distance_closed_form():
    engine, cohort, dataset = _mini_env()
    rec = PredictedOnsetRecord(("p1", 2000), 0, 0.9, ACTUAL_ONSET)
    res = approached_distance(engine, cohort, dataset, rec, horizon_years=3)
    # one eligible pair (a, b); target = the 2001 visit [60, 6, 0.5];
    # the raw point keeps imputed c=0, the projection lands on the future row
    assert res.mean_ice == pytest.approx(0.5 / W_C, rel=1e-9)
    assert res.mean_pmice == pytest.approx(0.0, abs=1e-12)
    assert res.approached == pytest.approx(0.5 / W_C, rel=1e-9)
    assert res.outcome == ACTUAL_ONSET


def test_approached_distance_excludes_own_participant():
    engine, cohort, dataset = _mini_env()
    rec = PredictedOnsetRecord(("p1", 2000), 0, 0.9, ACTUAL_ONSET)
    res = approached_distance(
        engine, cohort, dataset, rec, horizon_years=3, exclude_own_participant=True
    )
    # p1's own future row leaves the pool; the nearest neighbor becomes
    # the record itself, so the projection gains nothing
    assert res.approached == pytest.approx(0.0, abs=1e-12)


def test_approached_distance_none_without_futures():
    engine, cohort, dataset = _mini_env()
    rec = PredictedOnsetRecord(("p2", 2000), 1, 0.9, PREVENTED_ONSET)
    assert approached_distance(engine, cohort, dataset, rec) is None


def test_approached_distance_none_when_pair_never_observed_again():
    engine, cohort, dataset = _mini_env()
    # p3's only future year misses b, so the (a, b) pair has no target
    rec = PredictedOnsetRecord(("p3", 2000), 2, 0.9, PREVENTED_ONSET)
    assert approached_distance(engine, cohort, dataset, rec) is None


def test_horizon_limits_eligible_futures():
    engine, cohort, dataset = _mini_env()
    rec = PredictedOnsetRecord(("p1", 2000), 0, 0.9, ACTUAL_ONSET)
    res = approached_distance(engine, cohort, dataset, rec, horizon_years=1)
    assert res is not None               # the 2001 visit is still inside
    far = Record("p4", 2000, {"a": 58.0, "b": 5.0, "c": 1.0})
    later = Record("p4", 2004, {"a": 60.0, "b": 6.0, "c": 1.0})
    cohort2 = Cohort(dataset.space.metas, [far, later])
    x, m = dataset.space.encode_row(far.values)
    ds2 = SimpleNamespace(
        space=dataset.space, X=x[None, :], miss=m[None, :],
        y=np.array([0]), keys=[far.key],
    )
    rec4 = PredictedOnsetRecord(("p4", 2000), 0, 0.9, PREVENTED_ONSET)
    assert approached_distance(engine, cohort2, ds2, rec4, horizon_years=3) is None


# ---- k selection -----------------------------------------------------------------


def test_k_score_mean_over_std():
    assert k_score([1.0, 2.0, 3.0]) == pytest.approx(2.0)  # std(ddof=1) = 1
    assert k_score([5.0]) == 5.0
    assert k_score([3.0, 3.0]) == 3.0  # zero spread falls back to the mean
    with pytest.raises(ValueError):
        k_score([])


CKD_SCORES = (
    -0.171, 0.503, 0.632, 0.668, 0.668, 0.652, 0.639, 0.605,
    0.573, 0.543, 0.517, 0.489, 0.438, 0.388, 0.348, 0.312,
)


def test_select_k_on_published_ckd_scores():
    scores = dict(zip(K_GRID, CKD_SCORES))
    assert select_k(K_GRID, scores) == 6        # 0.668 tie at k=6 and k=8
    assert scores[6] == scores[8] == 0.668


def test_select_k_tie_takes_smaller_k():
    assert select_k((1, 2, 4), {1: 1.0, 2: 1.0, 4: 0.5}) == 1
    assert select_k((1, 2, 4), {1: 0.1, 2: 1.0, 4: 1.0}) == 2
    with pytest.raises(ValueError):
        select_k((), {})


def test_tune_k_scores_every_k_with_own_participant_excluded():
    engine, cohort, dataset = _mini_env()
    rec = PredictedOnsetRecord(("p1", 2000), 0, 0.9, ACTUAL_ONSET)
    best, scores = tune_k(engine, cohort, dataset, [rec], k_grid=(1, 2))
    assert set(scores) == {1, 2}
    # with p1's rows excluded, k=1 finds only the record itself: score 0
    assert scores[1] == pytest.approx(0.0, abs=1e-12)
    assert scores[2] < scores[1]
    assert best == 1
    with pytest.raises(ValueError):
        tune_k(engine, cohort, dataset, [], k_grid=(1,))


# ---- prediction grouping ---------------------------------------------------------


def test_categorize_predictions_filters_sorts_and_groups():
    ds = SimpleNamespace(
        y=np.array([1, 0, 1]),
        keys=[("b", 2001), ("a", 2000), ("a", 1999)],
    )
    rows = np.array([0, 1, 2])
    probs = np.array([0.9, 0.6, 0.4])
    recs = categorize_predictions(ds, probs, rows, tau=0.6)
    assert [r.key for r in recs] == [("a", 2000), ("b", 2001)]  # sorted by key
    assert [r.outcome for r in recs] == [PREVENTED_ONSET, ACTUAL_ONSET]
    assert recs[1].probability == 0.9
    # threshold is inclusive
    assert len(categorize_predictions(ds, probs, rows, tau=0.4)) == 3


# ---- report text -----------------------------------------------------------------


def test_format_report_tables():
    report = EvaluationReport(
        "ckd", 3, n_actual=4, n_prevented=3,
        improved_actual=[0.0, 0.25, 0.5, 1.0],
        improved_prevented=[0.5, 1.0, 1.0],
        improved_p=0.0421, approached_mean=0.123, approached_std=0.045,
        approached_p=0.0012, k=6,
    )
    text = format_report(report)
    assert "disease: ckd (horizon 3y, k=6)" in text
    assert "0.123 +/- 0.045" in text
    assert "paired t p  : 0.0012" in text
    assert "rank-sum p  : 0.0421" in text
    lines = text.splitlines()
    actual = next(l for l in lines if "actual-onset" in l and "prevented" not in l)
    assert "4" in actual and "0.375" in actual
    prevented = next(l for l in lines if "prevented-onset" in l)
    assert "3" in prevented and "1.000" in prevented


def test_format_report_handles_missing_stats():
    text = format_report(EvaluationReport("dm", 3, n_actual=0, n_prevented=0))
    assert "n/a" in text
