"""Diagram engine: grid layout, projection equivalence, active learning.

The vectorized grid projection is compared against a per-cell oracle
composed from the public primitives (knn_candidates, projection_weights,
project), covering the plain, stratified, and missing-data paths.
"""

import numpy as np
import pytest

from hdpd.analysis import UNIVARIATE_X, UNIVARIATE_Y
from hdpd.cohort import BINARY, CATEGORICAL, CONTINUOUS, FeatureMeta
from hdpd.dataset import EncodedColumn, FeatureSpace
from hdpd.diagrams import (
    ActiveLearningConfig,
    DiagramEngine,
    _initial_cells,
    diagram_from_json,
    diagram_to_json,
)
from hdpd.pmice import (
    ProjectionConfig,
    knn_candidates,
    perturb_2d,
    project,
    projection_weights,
)


class _LinearModel:
    """Deterministic logistic scorer standing in for a trained ensemble."""

    def __init__(self, features, w, b=0.0, threshold=0.5):
        self.features = list(features)
        self.w = np.asarray(w, dtype=float)
        self.b = float(b)
        self.threshold = threshold

    def predict_proba(self, X):
        z = np.atleast_2d(np.asarray(X, dtype=float)) @ self.w + self.b
        return 1.0 / (1.0 + np.exp(-z))


def _cont_space(names):
    metas = [FeatureMeta(n) for n in names]
    cols = [EncodedColumn(n, n, CONTINUOUS) for n in names]
    return FeatureSpace(metas, cols, {n: 0.0 for n in names})


def _make_engine(
    seed=0, n=200, w=(0.1, 0.0, 0.0), b=-6.0, projection=ProjectionConfig(),
    with_binary=False, miss_rate=0.0, train_pids=None,
):
    rng = np.random.default_rng(seed)
    names = ["a", "b", "s"]
    if with_binary:
        metas = [FeatureMeta("a"), FeatureMeta("b"), FeatureMeta("s", BINARY)]
        cols = [
            EncodedColumn("a", "a", CONTINUOUS),
            EncodedColumn("b", "b", CONTINUOUS),
            EncodedColumn("s", "s", BINARY),
        ]
        space = FeatureSpace(metas, cols, {"a": 0.0, "b": 0.0, "s": 0.0})
    else:
        space = _cont_space(names)
    a = np.linspace(0.0, 100.0, n)
    bcol = a / 10.0 + rng.normal(0.0, 0.5, size=n)
    s = (rng.random(n) < 0.5).astype(float) if with_binary else rng.normal(0.0, 1.0, n)
    X = np.column_stack([a, bcol, s])
    y = (a > 60.0).astype(int)
    miss = None
    if miss_rate > 0.0:
        miss = rng.random((n, 3)) < miss_rate
    model = _LinearModel(space.column_names, w, b)
    return DiagramEngine(
        model, space, X, y, miss, projection=projection,
        disease="d1", train_pids=train_pids,
    )


def pmice_prob_oracle(engine, x0, miss0, fx, fy):
    """Per-cell recomputation from the primitives, no vectorization."""
    axis_x, axis_y, _, _, cx, cy = engine.build_axes(x0, fx, fy)
    points = perturb_2d(x0, cx, cy, axis_x, axis_y)
    ice = engine.model.predict_proba(points)
    labels = (ice >= engine.model.threshold).astype(int)
    rows_all = np.vstack([x0[None, :], engine.X_train])
    miss_all = np.vstack([miss0[None, :], engine.miss_train])
    probs = np.empty(len(points))
    for i, pt in enumerate(points):
        pool_idx = np.concatenate(([0], 1 + np.nonzero(engine.y_train == labels[i])[0]))
        idx, d = knn_candidates(
            pt, rows_all[pool_idx], engine.metric, engine.projection.k,
            engine.projection.stratify_discrete,
        )
        w = projection_weights(d, engine.projection.weight_scheme)
        chosen = pool_idx[idx]
        proj = project(
            pt, rows_all[chosen], w, (cx, cy), engine.feature_cols,
            miss_all[chosen] if miss_all.any() else None,
        )
        probs[i] = engine.model.predict_proba(proj[None, :])[0]
    return probs.reshape(len(axis_y), len(axis_x))


# ---- full grids ---------------------------------------------------------------


def test_grid_layout_rows_are_y_columns_are_x():
    engine = _make_engine()
    x0 = np.array([50.0, 5.0, 0.0])
    miss0 = np.zeros(3, dtype=bool)
    d = engine.diagram_full(x0, miss0, "p1@2020", "a", "b")
    assert d.shape == (len(d.axis_y), len(d.axis_x))
    assert len(d.axis_x) == 21
    assert d.axis_x[d.origin_x] == 50.0
    assert d.axis_y[d.origin_y] == 5.0
    # the model scores only feature a = var_x, so labels vary along x only
    for iy in range(d.shape[0]):
        assert np.array_equal(d.label[iy, :], d.label[0, :])
    assert np.array_equal(d.label[0, :], (d.axis_x > 60.0).astype(np.int8))
    assert d.pattern == UNIVARIATE_X


def test_y_only_model_gives_univariate_y():
    engine = _make_engine(w=(0.0, 1.0, 0.0), b=-5.0)
    d = engine.diagram_full(
        np.array([50.0, 5.0, 0.0]), np.zeros(3, dtype=bool), "p1@2020", "a", "b"
    )
    assert d.pattern == UNIVARIATE_Y


def test_full_pmice_matches_per_cell_oracle():
    engine = _make_engine(w=(0.08, 0.3, 0.5), b=-6.0)
    x0 = np.array([55.0, 4.0, 0.3])
    miss0 = np.zeros(3, dtype=bool)
    d = engine.diagram_full(x0, miss0, "p1@2020", "a", "b")
    want = pmice_prob_oracle(engine, x0, miss0, "a", "b")
    assert np.allclose(d.prob, want, atol=1e-12)


def test_stratified_pmice_matches_per_cell_oracle():
    engine = _make_engine(w=(0.08, 0.3, 0.5), b=-6.0, with_binary=True)
    x0 = np.array([55.0, 4.0, 1.0])
    miss0 = np.zeros(3, dtype=bool)
    d = engine.diagram_full(x0, miss0, "p1@2020", "a", "b")
    want = pmice_prob_oracle(engine, x0, miss0, "a", "b")
    assert np.allclose(d.prob, want, atol=1e-12)


def test_missing_data_pmice_matches_per_cell_oracle():
    engine = _make_engine(w=(0.08, 0.3, 0.5), b=-6.0, miss_rate=0.2)
    x0 = np.array([55.0, 4.0, 0.3])
    miss0 = np.array([False, True, False])
    d = engine.diagram_full(x0, miss0, "p1@2020", "a", "b")
    want = pmice_prob_oracle(engine, x0, miss0, "a", "b")
    assert np.allclose(d.prob, want, atol=1e-12)


def test_ice_mode_skips_projection():
    engine = _make_engine(w=(0.08, 0.3, 0.5), b=-6.0)
    x0 = np.array([55.0, 4.0, 0.3])
    miss0 = np.zeros(3, dtype=bool)
    d = engine.diagram_full(x0, miss0, "p1@2020", "a", "b", mode="2d-ICE")
    axis_x, axis_y, _, _, cx, cy = engine.build_axes(x0, "a", "b")
    pts = perturb_2d(x0, cx, cy, axis_x, axis_y)
    want = engine.model.predict_proba(pts).reshape(len(axis_y), len(axis_x))
    assert np.array_equal(d.prob, want)
    # projection moves the untouched feature s, so p-mICE must differ
    dp = engine.diagram_full(x0, miss0, "p1@2020", "a", "b")
    assert not np.allclose(d.prob, dp.prob)


def test_unknown_mode_rejected():
    engine = _make_engine()
    with pytest.raises(ValueError, match="mode"):
        engine.diagram_full(
            np.array([50.0, 5.0, 0.0]), np.zeros(3, dtype=bool), "p", "a", "b", mode="3d"
        )


def test_k1_origin_cell_returns_the_record_itself():
    engine = _make_engine(w=(0.08, 0.3, 0.5), b=-6.0).with_projection(ProjectionConfig(k=1))
    x0 = np.array([55.0, 4.0, 0.3])
    d = engine.diagram_full(x0, np.zeros(3, dtype=bool), "p1@2020", "a", "b")
    own = float(engine.model.predict_proba(x0[None, :])[0])
    assert d.prob[d.origin_y, d.origin_x] == pytest.approx(own, abs=1e-12)


def test_shared_axes_override():
    engine = _make_engine()
    x0 = np.array([50.0, 5.0, 0.0])
    miss0 = np.zeros(3, dtype=bool)
    base = engine.diagram_full(x0, miss0, "p1@2020", "a", "b")
    sx = slice(base.origin_x - 2, base.origin_x + 3)
    sy = slice(base.origin_y - 2, base.origin_y + 3)
    axes = (base.axis_x[sx], base.axis_y[sy])
    d = engine.diagram_full(x0, miss0, "p1@2020", "a", "b", axes=axes)
    assert np.array_equal(d.axis_x, base.axis_x[sx])
    assert d.shape == (5, 5)
    assert (d.origin_x, d.origin_y) == (2, 2)
    assert np.array_equal(d.prob, base.prob[sy, sx])
    # the record's own values must sit on any shared axes
    with pytest.raises(ValueError):
        engine.diagram_full(
            x0, miss0, "p1@2020", "a", "b", axes=(np.array([1.0, 2.0]), base.axis_y)
        )


# ---- eligibility --------------------------------------------------------------


def test_eligible_features_skip_categorical_and_missing():
    metas = [
        FeatureMeta("a"),
        FeatureMeta("b"),
        FeatureMeta("c", CATEGORICAL, levels=("x", "y")),
        FeatureMeta("s", BINARY),
    ]
    cols = [
        EncodedColumn("a", "a", CONTINUOUS),
        EncodedColumn("b", "b", CONTINUOUS),
        EncodedColumn("c=x", "c", "onehot", "x"),
        EncodedColumn("c=y", "c", "onehot", "y"),
        EncodedColumn("s", "s", BINARY),
    ]
    space = FeatureSpace(metas, cols, {"a": 0.0, "b": 0.0, "c": "x", "s": 0.0})
    rng = np.random.default_rng(0)
    X = np.column_stack(
        [
            rng.uniform(0, 100, 50),
            rng.uniform(0, 10, 50),
            np.ones(50),
            np.zeros(50),
            (rng.random(50) < 0.5).astype(float),
        ]
    )
    y = (X[:, 0] > 50).astype(int)
    engine = DiagramEngine(_LinearModel(space.column_names, [0.1, 0, 0, 0, 0], -5.0), space, X, y)
    miss0 = np.array([False, True, False, False])  # feature b unobserved
    assert engine.eligible_features(miss0) == ["a", "s"]
    assert engine.eligible_pairs(miss0) == [("a", "s")]
    d = engine.diagram_full(
        np.array([40.0, 0.0, 1.0, 0.0, 1.0]), miss0, "p1@2020", "a", "s"
    )
    assert np.array_equal(d.axis_y, [0.0, 1.0])
    assert d.origin_y == 1


# ---- pools --------------------------------------------------------------------


def test_exclude_pid_removes_own_training_rows():
    space = _cont_space(["a", "b", "s"])
    X = np.array(
        [
            [60.0, 5.0, 10.0],   # the record's own future year, pid me
            [50.0, 5.0, 20.0],
            [90.0, 5.0, 30.0],
            [10.0, 5.0, 12.0],
            [12.0, 5.0, 28.0],
        ]
    )
    y = np.array([1, 1, 1, 0, 0])
    model = _LinearModel(space.column_names, [1.0, 0.0, 0.0], -55.0)
    engine = DiagramEngine(
        model, space, X, y,
        projection=ProjectionConfig(k=2),
        train_pids=["me", "o1", "o2", "o3", "o4"],
    )
    x0 = np.array([55.0, 5.0, 15.0])
    miss0 = np.zeros(3, dtype=bool)
    pt = np.array([60.0, 5.0, 15.0])  # onset-labeled point right on me's row
    # neighbors {record, me's row}: s pulled toward me's 10
    kept = engine.project_single(x0, miss0, pt, (0, 1))
    assert 10.0 < kept[2] < 15.0
    # me's rows gone: second neighbor becomes o1 with s=20
    dropped = engine.project_single(x0, miss0, pt, (0, 1), exclude_pid="me")
    assert 15.0 < dropped[2] < 20.0


def test_record_label_pool_policy():
    space = _cont_space(["a", "b", "s"])
    # non-onset rows carry s=100, onset rows s=200; the record scores non-onset
    X = np.array(
        [
            [40.0, 5.0, 100.0],
            [45.0, 5.0, 100.0],
            [70.0, 5.0, 200.0],
            [75.0, 5.0, 200.0],
        ]
    )
    y = np.array([0, 0, 1, 1])
    model = _LinearModel(space.column_names, [1.0, 0.0, 0.0], -55.0)
    engine = DiagramEngine(model, space, X, y, projection=ProjectionConfig(k=2))
    x0 = np.array([42.0, 5.0, 100.0])
    pt = np.array([72.0, 5.0, 100.0])  # ICE-labeled onset
    # point-label pool: the record plus onset rows (s=200) -> s rises
    by_point = engine.project_single(x0, np.zeros(3, dtype=bool), pt, (0, 1))
    assert 100.0 < by_point[2] < 200.0
    # record-label pool: the record scores non-onset, so every neighbor has s=100
    forced = engine.with_projection(
        ProjectionConfig(k=2, pool_policy="record-label")
    ).project_single(x0, np.zeros(3, dtype=bool), pt, (0, 1))
    assert forced[2] == pytest.approx(100.0)
    assert by_point[2] > forced[2]


# ---- active learning ----------------------------------------------------------


def test_active_with_budget_covering_grid_equals_full_search():
    engine = _make_engine(w=(0.08, 0.3, 0.5), b=-6.0)
    x0 = np.array([97.0, 9.7, 0.3])  # near the domain edge: small grid
    miss0 = np.zeros(3, dtype=bool)
    full = engine.diagram_full(x0, miss0, "p1@2020", "a", "b")
    n_cells = full.label.size
    assert n_cells < 200
    active = engine.diagram_active(
        x0, miss0, "p1@2020", "a", "b", ActiveLearningConfig(budget=10_000)
    )
    assert active.queried.all()
    assert np.array_equal(active.label, full.label)
    assert np.allclose(active.prob, full.prob)
    assert active.pattern == full.pattern


def test_active_budget_is_exact():
    engine = _make_engine(w=(0.08, 0.3, 0.5), b=-6.0)
    x0 = np.array([55.0, 4.0, 0.3])
    miss0 = np.zeros(3, dtype=bool)
    d = engine.diagram_active(
        x0, miss0, "p1@2020", "a", "b", ActiveLearningConfig(budget=50)
    )
    assert d.label.size == len(d.axis_x) * len(d.axis_y) > 300
    assert int(d.queried.sum()) == 50
    assert d.queried[d.origin_y, d.origin_x]  # own cell is always queried


def test_active_queried_cells_carry_true_labels():
    engine = _make_engine(w=(0.08, 0.3, 0.5), b=-6.0)
    x0 = np.array([55.0, 4.0, 0.3])
    miss0 = np.zeros(3, dtype=bool)
    full = engine.diagram_full(x0, miss0, "p1@2020", "a", "b")
    d = engine.diagram_active(
        x0, miss0, "p1@2020", "a", "b", ActiveLearningConfig(budget=60)
    )
    q = d.queried
    assert np.array_equal(d.label[q], full.label[q])
    assert np.allclose(d.prob[q], full.prob[q])
    agreement = float(np.mean(d.label == full.label))
    assert agreement >= 0.9


def test_active_deterministic():
    engine = _make_engine(w=(0.08, 0.3, 0.5), b=-6.0)
    x0 = np.array([55.0, 4.0, 0.3])
    miss0 = np.zeros(3, dtype=bool)
    d1 = engine.diagram_active(x0, miss0, "p", "a", "b", ActiveLearningConfig(budget=40))
    d2 = engine.diagram_active(x0, miss0, "p", "a", "b", ActiveLearningConfig(budget=40))
    assert np.array_equal(d1.label, d2.label)
    assert np.array_equal(d1.queried, d2.queried)


def test_active_config_validation():
    with pytest.raises(ValueError):
        ActiveLearningConfig(initial_points=0)
    with pytest.raises(ValueError):
        ActiveLearningConfig(initial_points=60, budget=50)
    with pytest.raises(ValueError):
        ActiveLearningConfig(alpha=1.0)


def test_initial_cells_distinct_and_deterministic():
    cells = _initial_cells(21, 21, (10, 10), 10, 50, seed=0)
    assert len(cells) == 10
    assert len(set(cells)) == 10
    # corners, edge midpoints, center of a 21x21 grid
    assert cells[:4] == [0, 20, 420, 440]
    assert set(cells[4:9]) == {10, 430, 210, 230, 220}
    assert cells == _initial_cells(21, 21, (10, 10), 10, 50, seed=0)
    # own cell collides with the center: backfill keeps cells distinct
    small = _initial_cells(3, 3, (1, 1), 10, 50, seed=0)
    assert len(small) == 9  # 3x3 grid has only 9 cells
    assert sorted(small) == list(range(9))


def test_initial_cells_backfill_is_seeded():
    a = _initial_cells(9, 9, (4, 4), 10, 50, seed=1)
    b = _initial_cells(9, 9, (4, 4), 10, 50, seed=1)
    assert a == b
    assert len(set(a)) == 10


# ---- serialization ------------------------------------------------------------


def test_diagram_json_round_trip():
    engine = _make_engine(w=(0.08, 0.3, 0.5), b=-6.0)
    x0 = np.array([55.0, 4.0, 0.3])
    miss0 = np.zeros(3, dtype=bool)
    for d in (
        engine.diagram_full(x0, miss0, "p1@2020", "a", "b"),
        engine.diagram_active(x0, miss0, "p1@2020", "a", "b", ActiveLearningConfig(budget=30)),
    ):
        back = diagram_from_json(diagram_to_json(d))
        assert back.record_id == d.record_id
        assert back.disease == d.disease
        assert (back.var_x, back.var_y) == (d.var_x, d.var_y)
        assert np.array_equal(back.axis_x, d.axis_x)
        assert np.array_equal(back.axis_y, d.axis_y)
        assert (back.origin_x, back.origin_y) == (d.origin_x, d.origin_y)
        assert np.array_equal(back.prob, d.prob)
        assert np.array_equal(back.label, d.label)
        assert back.mode == d.mode and back.pattern == d.pattern
        if d.queried is None:
            assert back.queried is None
        else:
            assert np.array_equal(back.queried, d.queried)


def test_batch_diagrams_cover_eligible_pairs():
    engine = _make_engine(w=(0.08, 0.3, 0.5), b=-6.0)
    x0 = np.array([55.0, 4.0, 0.3])
    miss0 = np.zeros(3, dtype=bool)
    ds = engine.batch_diagrams(x0, miss0, "p1@2020")
    assert [(d.var_x, d.var_y) for d in ds] == [("a", "b"), ("a", "s"), ("b", "s")]
    only = engine.batch_diagrams(x0, miss0, "p1@2020", pairs=[("b", "a")])
    assert [(d.var_x, d.var_y) for d in only] == [("b", "a")]
