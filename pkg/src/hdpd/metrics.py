"""Ranking and thresholded classification metrics."""

from __future__ import annotations

import numpy as np


def auc(scores, labels) -> float:
    """Area under the ROC curve, rank-based with half credit for ties.

    Equals P(score+ > score-) + 0.5 * P(score+ = score-) over all
    positive/negative pairs.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == 1
    neg = ~pos
    n_pos = int(pos.sum())
    n_neg = int(neg.sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc needs both classes present")
    ranks = _midranks(scores)
    rank_sum_pos = float(ranks[pos].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def confusion(scores, labels, threshold: float) -> tuple[int, int, int, int]:
    """(TP, FN, FP, TN) with positive prediction iff score >= threshold."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pred = scores >= threshold
    actual = labels == 1
    tp = int(np.sum(pred & actual))
    fn = int(np.sum(~pred & actual))
    fp = int(np.sum(pred & ~actual))
    tn = int(np.sum(~pred & ~actual))
    return tp, fn, fp, tn


def f1_score(scores, labels, threshold: float) -> float:
    """F1 of the thresholded predictions; 0.0 when no positives on either side."""
    tp, fn, fp, _ = confusion(scores, labels, threshold)
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def log_loss(probs, labels, eps: float = 1e-15) -> float:
    """Mean binary cross-entropy of predicted probabilities."""
    p = np.clip(np.asarray(probs, dtype=float), eps, 1 - eps)
    y = np.asarray(labels, dtype=float)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))
