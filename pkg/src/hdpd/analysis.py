"""Boundary-pattern analytics over finished diagrams.

Grids are indexed label[iy, ix]. A diagram is Univariate-X when its
labels depend on the x variable only (every column is constant along
y), Univariate-Y in the mirrored case, Bivariate when both variables
matter, and NoBoundary when one label covers the whole grid.
"""

from __future__ import annotations

import numpy as np

NO_BOUNDARY_ONSET = "NoBoundary-AllOnset"
NO_BOUNDARY_NON_ONSET = "NoBoundary-AllNonOnset"
UNIVARIATE_X = "Univariate-X"
UNIVARIATE_Y = "Univariate-Y"
BIVARIATE = "Bivariate"

PATTERNS = (NO_BOUNDARY_ONSET, NO_BOUNDARY_NON_ONSET, UNIVARIATE_X, UNIVARIATE_Y, BIVARIATE)


def classify_boundary(label: np.ndarray) -> str:
    label = np.asarray(label)
    if label.ndim != 2 or label.size == 0:
        raise ValueError("label grid must be a non-empty 2-D array")
    first = label.flat[0]
    if np.all(label == first):
        return NO_BOUNDARY_ONSET if first == 1 else NO_BOUNDARY_NON_ONSET
    if np.all(label == label[0, :]):
        return UNIVARIATE_X
    if np.all(label == label[:, :1]):
        return UNIVARIATE_Y
    return BIVARIATE


def _contributes(pattern: str, axis: str) -> bool:
    """Does the variable on the given axis help form the boundary?"""
    if pattern == BIVARIATE:
        return True
    if pattern == UNIVARIATE_X:
        return axis == "x"
    if pattern == UNIVARIATE_Y:
        return axis == "y"
    return False


def feature_contribution(diagrams, features: list[str]) -> dict[str, float]:
    """Per feature: share of its diagrams whose boundary it helps form.

    Features appearing in no diagram (typically missing in the record)
    score 0.
    """
    included = {f: 0 for f in features}
    contributing = {f: 0 for f in features}
    for d in diagrams:
        for f, axis in ((d.var_x, "x"), (d.var_y, "y")):
            if f not in included:
                continue
            included[f] += 1
            if _contributes(d.pattern, axis):
                contributing[f] += 1
    return {
        f: (contributing[f] / included[f]) if included[f] else 0.0 for f in features
    }


def bivariate_proportion(diagrams) -> float | None:
    """#Bivariate / (#Bivariate + #Univariate); None when no boundary formed."""
    nb = sum(1 for d in diagrams if d.pattern == BIVARIATE)
    nu = sum(1 for d in diagrams if d.pattern in (UNIVARIATE_X, UNIVARIATE_Y))
    if nb + nu == 0:
        return None
    return nb / (nb + nu)


def limit_values(
    diagram, primary: str, risk_direction: str
) -> tuple[list[float], tuple[float, float]]:
    """Per secondary-axis level, the onset limit of the primary variable.

    For a low-is-risk variable the limit is the largest primary value
    still labeled onset (staying above it avoids onset); a level with no
    onset cells takes the smallest axis value. High-is-risk mirrors
    this. Returns (per-level limits, (min, max) range over levels).
    """
    if risk_direction not in ("high", "low"):
        raise ValueError(f"risk_direction must be 'high' or 'low', got {risk_direction!r}")
    if primary == diagram.var_x:
        axis = np.asarray(diagram.axis_x, dtype=float)
        slices = [diagram.label[iy, :] for iy in range(diagram.label.shape[0])]
    elif primary == diagram.var_y:
        axis = np.asarray(diagram.axis_y, dtype=float)
        slices = [diagram.label[:, ix] for ix in range(diagram.label.shape[1])]
    else:
        raise ValueError(f"{primary!r} is not an intervention variable of this diagram")
    limits = []
    for labels in slices:
        onset = axis[np.asarray(labels) == 1]
        if risk_direction == "low":
            limits.append(float(onset.max()) if onset.size else float(axis.min()))
        else:
            limits.append(float(onset.min()) if onset.size else float(axis.max()))
    return limits, (min(limits), max(limits))


def superimpose(diagrams) -> list[list[list[str]]]:
    """Per-cell sets of diseases predicting onset, over aligned diagrams.

    All diagrams must share the record, intervention variables, and axis
    values. Cells carrying no disease are the joint prevention target.
    """
    if not diagrams:
        raise ValueError("need at least one diagram")
    head = diagrams[0]
    for d in diagrams[1:]:
        if d.record_id != head.record_id or d.var_x != head.var_x or d.var_y != head.var_y:
            raise ValueError("diagrams must share record and intervention variables")
        if not (
            np.array_equal(d.axis_x, head.axis_x) and np.array_equal(d.axis_y, head.axis_y)
        ):
            raise ValueError("diagrams must share axis values")
    ny, nx = head.label.shape
    cells: list[list[list[str]]] = [[[] for _ in range(nx)] for _ in range(ny)]
    for d in diagrams:
        for iy in range(ny):
            for ix in range(nx):
                if d.label[iy, ix] == 1:
                    cells[iy][ix].append(d.disease)
    return cells


def ward_cluster(rows: np.ndarray) -> tuple[list[tuple[int, int, float, int]], list[int]]:
    """Agglomerative Ward clustering.

    Returns (merges, leaf_order). Each merge is (a, b, height, size)
    where a and b are cluster ids: 0..n-1 are leaves, merge i creates
    id n+i. Equal-height candidates merge lowest ids first. Leaf order
    is the left-to-right dendrogram traversal, lower id branch first.
    """
    X = np.asarray(rows, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least two rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("rows must be finite")
    n = X.shape[0]
    # Lance-Williams on squared Ward distances over matrix slots; slot a
    # absorbs the merge, slot b retires. Heights are reported as the
    # square root (the usual dendrogram convention).
    D2 = np.empty((n, n))
    for i in range(n):
        D2[i] = np.sum((X - X[i]) ** 2, axis=1)
    np.fill_diagonal(D2, np.inf)
    alive = np.ones(n, dtype=bool)
    sizes = np.ones(n)
    ids = np.arange(n)  # cluster id currently held by each slot

    merges: list[tuple[int, int, float, int]] = []
    children: dict[int, tuple[int, int]] = {}
    for step in range(n - 1):
        d = float(D2[alive][:, alive].min())
        slots = np.nonzero(alive)[0]
        pairs = []
        sub = D2[np.ix_(slots, slots)]
        for i, j in zip(*np.nonzero(sub == d)):
            if i < j:
                sa, sb = slots[i], slots[j]
                a, b = sorted((int(ids[sa]), int(ids[sb])))
                pairs.append((a, b, sa, sb))
        a, b, sa, sb = min(pairs)
        new = n + step
        size = sizes[sa] + sizes[sb]
        merges.append((a, b, float(np.sqrt(d)), int(size)))
        children[new] = (a, b)

        rest = alive.copy()
        rest[[sa, sb]] = False
        na, nb, nc = sizes[sa], sizes[sb], sizes[rest]
        updated = ((na + nc) * D2[sa, rest] + (nb + nc) * D2[sb, rest] - nc * d) / (
            na + nb + nc
        )
        D2[sa, rest] = updated
        D2[rest, sa] = updated
        alive[sb] = False
        D2[sb, :] = np.inf
        D2[:, sb] = np.inf
        sizes[sa] = size
        ids[sa] = new

    def leaves(node: int) -> list[int]:
        if node < n:
            return [node]
        a, b = children[node]
        return leaves(a) + leaves(b)

    return merges, leaves(int(ids[np.nonzero(alive)[0][0]]))
