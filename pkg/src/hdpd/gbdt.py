"""Reference gradient-boosted tree classifier with logistic loss.

Exact greedy second-order splits (no histogram binning), L2 leaf
regularization, and a learned per-split default direction for missing
values (NaN in the feature matrix). Deterministic: ties between equal
split gains resolve to the lowest feature index, then lowest threshold.

Shrinkage is folded into the stored leaf values, so prediction is just
logistic(base_score + sum of leaf values).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_GAIN_EPS = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    rounds: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    l2_lambda: float = 1.0
    min_child_weight: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1 or self.max_depth < 1:
            raise ValueError("rounds and max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.l2_lambda < 0.0 or self.min_child_weight < 0.0:
            raise ValueError("l2_lambda and min_child_weight must be >= 0")


@dataclass
class Tree:
    """Flat node arrays; feature[i] == -1 marks a leaf."""

    feature: np.ndarray        # int32
    threshold: np.ndarray     # float64, route x < threshold to the left
    missing_left: np.ndarray  # bool
    left: np.ndarray          # int32
    right: np.ndarray         # int32
    value: np.ndarray         # float64 leaf contributions
    gain: np.ndarray          # float64 split gains (0 at leaves)

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int32)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            f = feat[rows]
            x = X[rows, f]
            go_left = np.where(np.isnan(x), self.missing_left[node[rows]], x < self.threshold[node[rows]])
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])
        return self.value[node]


@dataclass
class Ensemble:
    features: list[str]
    base_score: float
    trees: list[Tree] = field(default_factory=list)

    def margin(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != len(self.features):
            raise ValueError(
                f"expected {len(self.features)} features, got {X.shape[1]}"
            )
        out = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            out += tree.predict(X)
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        m = self.margin(X)
        return 1.0 / (1.0 + np.exp(-m))

    def predict_one(self, x: np.ndarray) -> float:
        return float(self.predict_proba(np.asarray(x, dtype=float)[None, :])[0])

    def feature_importance(self) -> dict[str, float]:
        """Total split gain per feature; never-split features get 0."""
        total = np.zeros(len(self.features))
        for tree in self.trees:
            internal = tree.feature >= 0
            np.add.at(total, tree.feature[internal], tree.gain[internal])
        return {name: float(total[i]) for i, name in enumerate(self.features)}


class _TreeBuilder:
    def __init__(self, X, g, h, sort_idx, config):
        self.X = X
        self.g = g
        self.h = h
        self.sort_idx = sort_idx
        self.cfg = config
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.missing_left: list[bool] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.gain: list[float] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.missing_left.append(False)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        self.gain.append(0.0)
        return len(self.feature) - 1

    def build(self) -> Tree:
        n = self.X.shape[0]
        root = self._new_node()
        mask = np.ones(n, dtype=bool)
        self._grow(root, mask, int(mask.sum()), depth=0)
        return Tree(
            np.array(self.feature, dtype=np.int32),
            np.array(self.threshold),
            np.array(self.missing_left, dtype=bool),
            np.array(self.left, dtype=np.int32),
            np.array(self.right, dtype=np.int32),
            np.array(self.value),
            np.array(self.gain),
        )

    def _leaf(self, node: int, mask: np.ndarray) -> None:
        lam = self.cfg.l2_lambda
        G = float(self.g[mask].sum())
        H = float(self.h[mask].sum())
        self.value[node] = -self.cfg.learning_rate * G / (H + lam)

    def _grow(self, node: int, mask: np.ndarray, count: int, depth: int) -> None:
        if depth >= self.cfg.max_depth or count < 2:
            self._leaf(node, mask)
            return
        best = self._best_split(mask)
        if best is None:
            self._leaf(node, mask)
            return
        f, thr, miss_left, gain = best
        col = self.X[:, f]
        go_left = np.where(np.isnan(col), miss_left, col < thr) & mask
        go_right = mask & ~go_left
        nl, nr = int(go_left.sum()), int(go_right.sum())
        if nl == 0 or nr == 0:
            self._leaf(node, mask)
            return
        self.feature[node] = f
        self.threshold[node] = thr
        self.missing_left[node] = miss_left
        self.gain[node] = gain
        lchild = self._new_node()
        rchild = self._new_node()
        self.left[node] = lchild
        self.right[node] = rchild
        self._grow(lchild, go_left, nl, depth + 1)
        self._grow(rchild, go_right, nr, depth + 1)

    def _best_split(self, mask: np.ndarray):
        lam = self.cfg.l2_lambda
        mcw = self.cfg.min_child_weight
        G = float(self.g[mask].sum())
        H = float(self.h[mask].sum())
        parent = G * G / (H + lam)
        best = None
        best_gain = _GAIN_EPS
        for f in range(self.X.shape[1]):
            order = self.sort_idx[f]
            rows = order[mask[order]]
            # Rows come sorted by value with NaN last; split off the missing tail.
            col = self.X[rows, f]
            n_nm = int(np.count_nonzero(~np.isnan(col)))
            if n_nm < 2:
                continue
            vals = col[:n_nm]
            gs = self.g[rows[:n_nm]]
            hs = self.h[rows[:n_nm]]
            Gm = float(self.g[rows[n_nm:]].sum())
            Hm = float(self.h[rows[n_nm:]].sum())
            Gl = np.cumsum(gs)[:-1]
            Hl = np.cumsum(hs)[:-1]
            valid = vals[:-1] != vals[1:]
            if not valid.any():
                continue
            Gnm = float(gs.sum())
            Hnm = float(hs.sum())
            # Missing goes right.
            GR = (Gnm - Gl) + Gm
            HR = (Hnm - Hl) + Hm
            gain_r = Gl * Gl / (Hl + lam) + GR * GR / (HR + lam) - parent
            ok_r = valid & (Hl >= mcw) & (HR >= mcw)
            gain_r = np.where(ok_r, gain_r, -np.inf)
            # Missing goes left.
            GL = Gl + Gm
            HL = Hl + Hm
            GR2 = Gnm - Gl
            HR2 = Hnm - Hl
            gain_l = GL * GL / (HL + lam) + GR2 * GR2 / (HR2 + lam) - parent
            ok_l = valid & (HL >= mcw) & (HR2 >= mcw)
            gain_l = np.where(ok_l, gain_l, -np.inf)
            for miss_left, gains in ((False, gain_r), (True, gain_l)):
                i = int(np.argmax(gains))
                gain = 0.5 * float(gains[i])
                if gain > best_gain:
                    best_gain = gain
                    thr = 0.5 * (float(vals[i]) + float(vals[i + 1]))
                    best = (f, thr, miss_left, gain)
        return best


def train_gbdt(
    X: np.ndarray, y: np.ndarray, config: TrainConfig, feature_names: list[str] | None = None
) -> Ensemble:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one label per row")
    if X.shape[0] < 2:
        raise ValueError("need at least two rows")
    mean = float(y.mean())
    if mean <= 0.0 or mean >= 1.0:
        raise ValueError("training labels contain a single class")
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(X.shape[1])]
    if len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length must match X columns")

    base = math.log(mean / (1.0 - mean))
    ensemble = Ensemble(list(feature_names), base)

    # Per-feature row order by value, NaN last; reused across all rounds.
    sort_idx = [np.argsort(X[:, f], kind="stable") for f in range(X.shape[1])]

    margin = np.full(X.shape[0], base)
    for _ in range(config.rounds):
        p = 1.0 / (1.0 + np.exp(-margin))
        g = p - y
        h = p * (1.0 - p)
        tree = _TreeBuilder(X, g, h, sort_idx, config).build()
        ensemble.trees.append(tree)
        margin += tree.predict(X)
    return ensemble
