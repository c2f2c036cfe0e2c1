"""Diagram construction: full-grid scoring and active-learning search.

A diagram perturbs one record over a two-variable grid, projects every
perturbed point onto the training-data manifold (unless running in raw
2d-ICE mode), scores the points with the onset model, and thresholds
the probabilities into an onset/non-onset label grid. Grids are stored
label[iy, ix]: rows follow the y axis, columns the x axis.

Active-learning construction queries a deterministic seed set, then
repeatedly spreads the known labels over the grid graph and queries the
most uncertain cell until the budget is spent; unqueried cells take the
spreading posterior's argmax.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .analysis import classify_boundary
from .dataset import BINARY, CONTINUOUS, FeatureSpace
from .model_io import FittedModel
from .pmice import (
    GridConfig,
    MetricSpace,
    ProjectionConfig,
    axis_origin,
    build_axis,
    compute_domains,
    perturb_2d,
    project,
    projection_weights,
    select_k_smallest,
)
from .spreading import grid_affinity, normalize_affinity, posterior

MODE_ICE = "2d-ICE"
MODE_PMICE = "p-mICE"


@dataclass(frozen=True)
class ActiveLearningConfig:
    initial_points: int = 10
    budget: int = 50
    alpha: float = 0.2
    gamma: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.initial_points <= self.budget:
            raise ValueError("need 1 <= initial_points <= budget")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")


@dataclass
class Diagram:
    record_id: str
    disease: str
    var_x: str
    var_y: str
    axis_x: np.ndarray
    axis_y: np.ndarray
    origin_x: int                 # index of the record's own value on each axis
    origin_y: int
    prob: np.ndarray              # (ny, nx)
    label: np.ndarray             # (ny, nx) int8
    mode: str
    pattern: str
    queried: np.ndarray | None = None   # (ny, nx) bool, active learning only

    @property
    def shape(self) -> tuple[int, int]:
        return self.label.shape


def diagram_to_json(d: Diagram) -> dict:
    out = {
        "record_id": d.record_id,
        "disease": d.disease,
        "var_x": d.var_x,
        "var_y": d.var_y,
        "axis_x": [float(v) for v in d.axis_x],
        "axis_y": [float(v) for v in d.axis_y],
        "origin_x": d.origin_x,
        "origin_y": d.origin_y,
        "prob": [[float(p) for p in row] for row in d.prob],
        "label": [[int(v) for v in row] for row in d.label],
        "mode": d.mode,
        "pattern": d.pattern,
    }
    if d.queried is not None:
        out["queried"] = [[bool(v) for v in row] for row in d.queried]
    return out


def diagram_from_json(payload: dict) -> Diagram:
    queried = payload.get("queried")
    return Diagram(
        payload["record_id"],
        payload["disease"],
        payload["var_x"],
        payload["var_y"],
        np.array(payload["axis_x"], dtype=float),
        np.array(payload["axis_y"], dtype=float),
        int(payload["origin_x"]),
        int(payload["origin_y"]),
        np.array(payload["prob"], dtype=float),
        np.array(payload["label"], dtype=np.int8),
        payload["mode"],
        payload["pattern"],
        None if queried is None else np.array(queried, dtype=bool),
    )


def _knn_rows(D: np.ndarray, k: int) -> np.ndarray:
    """Per-row k smallest columns of D; boundary ties resolve by lower index.

    Neighbor order within a row is unspecified (projection is a weighted
    sum, so only the selected set and its distances matter).
    """
    m, n = D.shape
    if k >= n:
        return np.tile(np.arange(n), (m, 1))
    part = np.argpartition(D, k - 1, axis=1)[:, :k]
    dk = np.take_along_axis(D, part, 1).max(axis=1)
    ambiguous = np.nonzero((D <= dk[:, None]).sum(axis=1) > k)[0]
    for i in ambiguous:
        part[i] = select_k_smallest(D[i], k)
    return part


class DiagramEngine:
    """Shared state for building many diagrams against one fitted model."""

    def __init__(
        self,
        model: FittedModel,
        space: FeatureSpace,
        X_train: np.ndarray,
        y_train: np.ndarray,
        miss_train: np.ndarray | None = None,
        grid: GridConfig = GridConfig(),
        projection: ProjectionConfig = ProjectionConfig(),
        disease: str = "",
        train_pids: list[str] | None = None,
    ):
        if list(model.features) != space.column_names:
            raise ValueError("model features do not match the feature space columns")
        self.model = model
        self.space = space
        self.X_train = np.asarray(X_train, dtype=float)
        self.y_train = np.asarray(y_train).astype(np.int8)
        self.miss_train = (
            np.zeros((len(X_train), len(space.metas)), dtype=bool)
            if miss_train is None
            else np.asarray(miss_train, dtype=bool)
        )
        self.train_pids = None if train_pids is None else np.array(train_pids)
        self.grid = grid
        self.projection = projection
        self.disease = disease

        cont = [i for i, c in enumerate(space.columns) if c.kind == CONTINUOUS]
        disc = [i for i, c in enumerate(space.columns) if c.kind != CONTINUOUS]
        self.domains = compute_domains(self.X_train, cont, grid.percentile_clip)
        self.metric = MetricSpace.from_domains(self.domains, disc)
        self.feature_cols = [space.columns_of(m.name) for m in space.metas]

        # Intervention axes need a single encoded column per feature.
        self.axis_features: dict[str, tuple[int, str]] = {}
        for meta in space.metas:
            if meta.kind in (CONTINUOUS, BINARY):
                self.axis_features[meta.name] = (space.column_index(meta.name), meta.kind)

        self._pool_rows = {
            0: np.concatenate(([0], 1 + np.nonzero(self.y_train == 0)[0])),
            1: np.concatenate(([0], 1 + np.nonzero(self.y_train == 1)[0])),
        }

    def with_projection(self, projection: ProjectionConfig) -> "DiagramEngine":
        """Same precomputed state under a different projection config."""
        clone = object.__new__(DiagramEngine)
        clone.__dict__.update(self.__dict__)
        clone.projection = projection
        return clone

    def _pools(self, exclude_pid: str | None) -> dict[int, np.ndarray]:
        """Pool rows per dataset label; optionally drop one participant's rows
        (hyperparameter tuning must not find the record's own future)."""
        if exclude_pid is None or self.train_pids is None:
            return self._pool_rows
        keep = self.train_pids != exclude_pid
        return {
            b: np.concatenate(([0], 1 + np.nonzero((self.y_train == b) & keep)[0]))
            for b in (0, 1)
        }

    # ---- eligibility and axes -------------------------------------------

    def eligible_features(self, miss0: np.ndarray) -> list[str]:
        """Intervention candidates: axis-capable and observed in the record."""
        names = []
        for j, meta in enumerate(self.space.metas):
            if meta.name in self.axis_features and not miss0[j]:
                names.append(meta.name)
        return names

    def eligible_pairs(self, miss0: np.ndarray) -> list[tuple[str, str]]:
        return list(combinations(self.eligible_features(miss0), 2))

    def build_axes(
        self, x0: np.ndarray, fx: str, fy: str
    ) -> tuple[np.ndarray, np.ndarray, int, int, int, int]:
        if fx == fy:
            raise ValueError("intervention variables must differ")
        col_x, kind_x = self.axis_features[fx]
        col_y, kind_y = self.axis_features[fy]
        axis_x = build_axis(x0[col_x], self.domains.get(col_x), kind_x, self.grid)
        axis_y = build_axis(x0[col_y], self.domains.get(col_y), kind_y, self.grid)
        return axis_x, axis_y, axis_origin(axis_x, x0[col_x]), axis_origin(axis_y, x0[col_y]), col_x, col_y

    # ---- projection ------------------------------------------------------

    def _pool_label_for(self, ice_labels: np.ndarray, x0: np.ndarray) -> np.ndarray:
        if self.projection.pool_policy == "record-label":
            own = int(self.model.predict_proba(x0[None, :])[0] >= self.model.threshold)
            return np.full_like(ice_labels, own)
        return ice_labels

    def project_grid(
        self,
        x0: np.ndarray,
        miss0: np.ndarray,
        points: np.ndarray,
        cols: tuple[int, int],
        pool_labels: np.ndarray,
        exclude_pid: str | None = None,
    ) -> np.ndarray:
        """Project every grid point; points differ from x0 only at `cols`."""
        pools = self._pools(exclude_pid)
        rows_all = np.vstack([x0[None, :], self.X_train])
        miss_all = np.vstack([miss0[None, :], self.miss_train])
        k = self.projection.k
        col_x, col_y = cols
        metric_cols = self.metric.cont_idx
        scale = self.metric.scale

        # Distance decomposition: points differ from x0 only on the two
        # intervention columns, so the remaining metric terms are shared.
        base_cols = [i for i, c in enumerate(metric_cols) if c not in cols]
        diffs = (rows_all[:, metric_cols] - x0[metric_cols]) / scale
        d2_base = np.sum(diffs[:, base_cols] ** 2, axis=1)

        def axis_term(col: int, values: np.ndarray) -> np.ndarray:
            pos = np.nonzero(metric_cols == col)[0]
            if pos.size == 0:
                return np.zeros((len(values), rows_all.shape[0]))
            s = scale[pos[0]]
            return ((values[:, None] - rows_all[None, :, col]) / s) ** 2

        ax_x = axis_term(col_x, points[:, col_x])
        ax_y = axis_term(col_y, points[:, col_y])
        # ax_x/ax_y are evaluated per point (not per axis value) so the
        # same code serves grids and arbitrary point batches.
        d2_points = d2_base[None, :] + ax_x + ax_y

        disc = self.metric.disc_idx
        use_strata = self.projection.stratify_discrete and disc.size > 0
        any_missing = bool(miss_all.any())
        out = points.copy()
        nonaxis = np.ones(points.shape[1], dtype=bool)
        nonaxis[list(cols)] = False

        if not use_strata and not any_missing:
            # Vectorized per pool label.
            for b in (0, 1):
                cells = np.nonzero(pool_labels == b)[0]
                if cells.size == 0:
                    continue
                pool = pools[b]
                kk = min(k, len(pool))
                D = np.sqrt(d2_points[np.ix_(cells, pool)])
                sel = _knn_rows(D, kk)
                dists = np.take_along_axis(D, sel, 1)
                w = self._weights_matrix(dists)
                vals = rows_all[pool[sel]]
                proj = np.einsum("ck,ckd->cd", w, vals)
                out[np.ix_(cells, nonaxis)] = proj[:, nonaxis]
            return out

        # General path: strata and per-feature missing handling per cell.
        for i in range(points.shape[0]):
            pool = pools[int(pool_labels[i])]
            dist = np.sqrt(d2_points[i, pool])
            if use_strata:
                mism = np.sum(
                    rows_all[np.ix_(pool, disc)] != points[i, disc], axis=1
                )
                stratum = np.nonzero(mism == 0)[0]
                kk = min(k, len(pool))
                if stratum.size >= kk:
                    local = stratum[select_k_smallest(dist[stratum], kk)]
                    d_sel = dist[local]
                else:
                    pen = dist + mism
                    local = select_k_smallest(pen, kk)
                    d_sel = pen[local]
            else:
                kk = min(k, len(pool))
                local = select_k_smallest(dist, kk)
                d_sel = dist[local]
            chosen = pool[local]
            w = projection_weights(d_sel, self.projection.weight_scheme)
            out[i] = project(
                points[i],
                rows_all[chosen],
                w,
                cols,
                self.feature_cols,
                miss_all[chosen] if any_missing else None,
            )
        return out

    def _weights_matrix(self, dists: np.ndarray) -> np.ndarray:
        scheme = self.projection.weight_scheme
        if scheme == "exponential":
            w = np.exp(-dists)
        elif scheme == "inverse":
            w = 1.0 / (dists + 1e-9)
        else:
            w = np.ones_like(dists)
        return w / w.sum(axis=1, keepdims=True)

    def project_single(
        self,
        x0: np.ndarray,
        miss0: np.ndarray,
        point: np.ndarray,
        cols: tuple[int, int],
        exclude_pid: str | None = None,
    ) -> np.ndarray:
        """Project one perturbed point (pool label from its own prediction)."""
        prob = float(self.model.predict_proba(point[None, :])[0])
        label = np.array([int(prob >= self.model.threshold)])
        pool_label = self._pool_label_for(label, x0)
        return self.project_grid(x0, miss0, point[None, :], cols, pool_label, exclude_pid)[0]

    # ---- diagrams --------------------------------------------------------

    def _cell_points(
        self,
        x0: np.ndarray,
        fx: str,
        fy: str,
        axes: tuple[np.ndarray, np.ndarray] | None = None,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, int, int, int, int]:
        if axes is None:
            axis_x, axis_y, ox, oy, col_x, col_y = self.build_axes(x0, fx, fy)
        else:
            # shared axes from another diagram, e.g. multi-disease overlays
            axis_x, axis_y = np.asarray(axes[0], float), np.asarray(axes[1], float)
            col_x, _ = self.axis_features[fx]
            col_y, _ = self.axis_features[fy]
            ox = axis_origin(axis_x, x0[col_x])
            oy = axis_origin(axis_y, x0[col_y])
        points = perturb_2d(x0, col_x, col_y, axis_x, axis_y)
        return points, axis_x, axis_y, ox, oy, col_x, col_y

    def diagram_full(
        self,
        x0: np.ndarray,
        miss0: np.ndarray,
        record_id: str,
        fx: str,
        fy: str,
        mode: str = MODE_PMICE,
        axes: tuple[np.ndarray, np.ndarray] | None = None,
    ) -> Diagram:
        points, axis_x, axis_y, ox, oy, col_x, col_y = self._cell_points(x0, fx, fy, axes)
        ny, nx = len(axis_y), len(axis_x)
        tau = self.model.threshold
        ice_probs = self.model.predict_proba(points)
        if mode == MODE_ICE:
            probs = ice_probs
        elif mode == MODE_PMICE:
            ice_labels = (ice_probs >= tau).astype(np.int8)
            pool_labels = self._pool_label_for(ice_labels, x0)
            projected = self.project_grid(x0, miss0, points, (col_x, col_y), pool_labels)
            probs = self.model.predict_proba(projected)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        prob = probs.reshape(ny, nx)
        label = (prob >= tau).astype(np.int8)
        return Diagram(
            record_id,
            self.disease,
            fx,
            fy,
            axis_x,
            axis_y,
            ox,
            oy,
            prob,
            label,
            mode,
            classify_boundary(label),
        )

    def diagram_active(
        self,
        x0: np.ndarray,
        miss0: np.ndarray,
        record_id: str,
        fx: str,
        fy: str,
        config: ActiveLearningConfig = ActiveLearningConfig(),
        mode: str = MODE_PMICE,
    ) -> Diagram:
        points, axis_x, axis_y, ox, oy, col_x, col_y = self._cell_points(x0, fx, fy)
        ny, nx = len(axis_y), len(axis_x)
        n_cells = ny * nx
        tau = self.model.threshold
        budget = min(config.budget, n_cells)

        ice_probs = self.model.predict_proba(points)
        ice_labels = (ice_probs >= tau).astype(np.int8)
        pool_labels = self._pool_label_for(ice_labels, x0)

        true_prob = np.full(n_cells, np.nan)

        def query(cell: int) -> int:
            if mode == MODE_ICE:
                true_prob[cell] = ice_probs[cell]
            else:
                proj = self.project_grid(
                    x0, miss0, points[cell : cell + 1], (col_x, col_y), pool_labels[cell : cell + 1]
                )
                true_prob[cell] = float(self.model.predict_proba(proj)[0])
            return int(true_prob[cell] >= tau)

        queried = np.zeros(n_cells, dtype=bool)
        labels = np.zeros(n_cells, dtype=np.int8)
        for cell in _initial_cells(ny, nx, (oy, ox), config.initial_points, budget, config.seed):
            queried[cell] = True
            labels[cell] = query(cell)

        S = normalize_affinity(grid_affinity(ny, nx, config.gamma))
        # Spreading fixed point (1-alpha)(I - alpha S)^-1 Y via one LU factor.
        lu = lu_factor(np.eye(n_cells) - config.alpha * S)

        def spread() -> np.ndarray:
            Y = np.zeros((n_cells, 2))
            idx = np.nonzero(queried)[0]
            Y[idx, labels[idx]] = 1.0
            return posterior(lu_solve(lu, (1.0 - config.alpha) * Y))

        P = spread()
        while int(queried.sum()) < budget:
            uncertainty = 1.0 - P.max(axis=1)
            uncertainty[queried] = -np.inf
            cell = int(np.argmax(uncertainty))
            queried[cell] = True
            labels[cell] = query(cell)
            P = spread()

        final = np.where(queried, labels, np.argmax(P, axis=1)).astype(np.int8)
        prob = np.where(queried, true_prob, P[:, 1]).reshape(ny, nx)
        label_grid = final.reshape(ny, nx)
        return Diagram(
            record_id,
            self.disease,
            fx,
            fy,
            axis_x,
            axis_y,
            ox,
            oy,
            prob,
            label_grid,
            mode,
            classify_boundary(label_grid),
            queried.reshape(ny, nx),
        )

    def batch_diagrams(
        self,
        x0: np.ndarray,
        miss0: np.ndarray,
        record_id: str,
        mode: str = MODE_PMICE,
        pairs: list[tuple[str, str]] | None = None,
    ) -> list[Diagram]:
        if pairs is None:
            pairs = self.eligible_pairs(miss0)
        return [self.diagram_full(x0, miss0, record_id, fx, fy, mode) for fx, fy in pairs]


def _initial_cells(
    ny: int, nx: int, own: tuple[int, int], initial: int, budget: int, seed: int
) -> list[int]:
    """Deterministic seed cells: corners, edge midpoints, center, own cell;
    short sets are back-filled with seeded-random distinct cells."""
    my, mx = (ny - 1) // 2, (nx - 1) // 2
    oy, ox = own
    preferred = [
        (0, 0),
        (0, nx - 1),
        (ny - 1, 0),
        (ny - 1, nx - 1),
        (0, mx),
        (ny - 1, mx),
        (my, 0),
        (my, nx - 1),
        (my, mx),
        (oy, ox),
    ]
    want = min(initial, budget, ny * nx)
    cells: list[int] = []
    seen = set()
    for iy, ix in preferred:
        cell = iy * nx + ix
        if cell not in seen:
            seen.add(cell)
            cells.append(cell)
        if len(cells) == want:
            return cells
    rng = np.random.default_rng(seed)
    for cell in rng.permutation(ny * nx):
        if int(cell) not in seen:
            seen.add(int(cell))
            cells.append(int(cell))
        if len(cells) == want:
            break
    return cells
