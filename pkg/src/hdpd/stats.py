"""Two-sample significance tests used by the evaluation harness.

Both tests are two-sided. The rank-sum test switches from exact
enumeration to a normal approximation once the combined sample size
exceeds ``EXACT_LIMIT``; the paired t-test uses the t distribution via
scipy's regularized CDF.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np
from scipy.special import ndtr, stdtr

# Largest combined sample size for which the rank-sum null distribution
# is enumerated exactly. C(12, 6) = 924 assignments.
EXACT_LIMIT = 12


def _average_ranks_doubled(values: np.ndarray) -> np.ndarray:
    """Midranks of `values`, multiplied by 2 so ties stay integral."""
    order = np.argsort(values, kind="stable")
    ranks2 = np.empty(len(values), dtype=np.int64)
    i = 0
    sorted_vals = values[order]
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        # average of ranks i+1 .. j+1, doubled: (i+1 + j+1)
        ranks2[order[i : j + 1]] = (i + 1) + (j + 1)
        i = j + 1
    return ranks2


def wilcoxon_rank_sum(a, b) -> float:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney) p-value.

    Exact enumeration over all assignments of the pooled values when
    len(a) + len(b) <= EXACT_LIMIT, otherwise a normal approximation
    with tie correction and continuity correction. Doubled midranks
    keep the exact path in integer arithmetic, so ties cost nothing
    in precision.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both groups must be non-empty")
    na, nb = a.size, b.size
    n = na + nb
    pooled = np.concatenate([a, b])
    ranks2 = _average_ranks_doubled(pooled)
    w2 = int(ranks2[:na].sum())  # 2 * rank-sum of group a
    mu2 = na * (n + 1)  # 2 * null mean

    if n <= EXACT_LIMIT:
        observed = abs(w2 - mu2)
        hits = 0
        total = 0
        for idx in combinations(range(n), na):
            total += 1
            w2p = int(ranks2[list(idx)].sum())
            if abs(w2p - mu2) >= observed:
                hits += 1
        return hits / total

    # Normal approximation with tie correction.
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(((counts**3 - counts)).sum())
    var = na * nb / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return 1.0  # every pooled value identical
    w = w2 / 2.0
    mu = mu2 / 2.0
    # continuity correction shrinks |W - mu| by 0.5
    z = (abs(w - mu) - 0.5) / math.sqrt(var)
    z = max(z, 0.0)
    return float(min(1.0, 2.0 * ndtr(-z)))


def paired_t(a, b) -> float:
    """Two-sided paired t-test p-value on differences a - b.

    Degenerate cases: zero-variance differences give p = 1.0 when the
    mean difference is also zero, else p = 0.0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    n = a.size
    if n < 2:
        raise ValueError("need at least 2 pairs")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        return 1.0 if mean == 0.0 else 0.0
    t = mean / (sd / math.sqrt(n))
    # stdtr is the CDF of Student's t; two-sided p from the lower tail at -|t|
    return float(2.0 * stdtr(n - 1, -abs(t)))
