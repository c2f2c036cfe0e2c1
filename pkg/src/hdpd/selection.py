"""Cross-validated threshold selection and recursive feature elimination.

Folds always split by participant so no person contributes rows to both
sides of a fold. The decision threshold is the median across folds of
the validation probability maximizing f1 (ties broken toward the
smallest threshold). RFE drops the lowest-importance feature one at a
time, averaging importance over the folds, until the target count.
"""

from __future__ import annotations

import warnings

import numpy as np

from .dataset import lower_median
from .gbdt import TrainConfig, train_gbdt
from .metrics import auc, f1_score


def participant_folds(
    pids: list[str], n_folds: int = 5, seed: int = 0
) -> list[tuple[np.ndarray, np.ndarray]]:
    """(train_rows, val_rows) index pairs; each participant's rows stay together."""
    unique = sorted(set(pids))
    if len(unique) < n_folds:
        raise ValueError(f"need at least {n_folds} participants, got {len(unique)}")
    rng = np.random.default_rng(seed)
    order = [unique[i] for i in rng.permutation(len(unique))]
    chunks = np.array_split(np.arange(len(order)), n_folds)
    pid_arr = np.array(pids)
    folds = []
    for chunk in chunks:
        val_pids = {order[i] for i in chunk}
        val_mask = np.isin(pid_arr, sorted(val_pids))
        folds.append((np.nonzero(~val_mask)[0], np.nonzero(val_mask)[0]))
    return folds


def best_f1_threshold(probs: np.ndarray, labels: np.ndarray) -> float:
    """Smallest validation probability maximizing f1 (candidates = unique probs)."""
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels)
    if labels.sum() == 0:
        raise ValueError("no positive labels")
    best_tau = None
    best_f1 = -1.0
    for tau in np.unique(probs):
        f1 = f1_score(probs, labels, float(tau))
        if f1 > best_f1:
            best_f1 = f1
            best_tau = float(tau)
    return best_tau


def select_threshold_cv(
    X: np.ndarray,
    y: np.ndarray,
    pids: list[str],
    config: TrainConfig,
    n_folds: int = 5,
    seed: int = 0,
) -> float:
    taus = []
    for k, (tr, va) in enumerate(participant_folds(pids, n_folds, seed)):
        if y[va].sum() == 0:
            warnings.warn(f"fold {k}: no positive validation labels, skipped")
            continue
        if y[tr].min() == y[tr].max():
            warnings.warn(f"fold {k}: single-class training labels, skipped")
            continue
        model = train_gbdt(X[tr], y[tr], config)
        taus.append(best_f1_threshold(model.predict_proba(X[va]), y[va]))
    if not taus:
        raise ValueError("threshold selection failed: every fold was skipped")
    return lower_median(taus)


def cv_auc(
    X: np.ndarray,
    y: np.ndarray,
    pids: list[str],
    config: TrainConfig,
    n_folds: int = 5,
    seed: int = 0,
) -> float:
    """Mean validation AUC over participant folds."""
    scores = []
    for k, (tr, va) in enumerate(participant_folds(pids, n_folds, seed)):
        if y[va].min() == y[va].max() or y[tr].min() == y[tr].max():
            warnings.warn(f"fold {k}: single-class labels, skipped")
            continue
        model = train_gbdt(X[tr], y[tr], config)
        scores.append(auc(model.predict_proba(X[va]), y[va]))
    if not scores:
        raise ValueError("every fold was skipped")
    return float(np.mean(scores))


def rfe(
    X: np.ndarray,
    y: np.ndarray,
    pids: list[str],
    feature_names: list[str],
    config: TrainConfig,
    target: int = 25,
    n_folds: int = 5,
    seed: int = 0,
) -> tuple[list[str], list[tuple[int, float]]]:
    """Iteratively drop the lowest-importance feature down to `target`.

    Returns (selected feature names, trace of (feature count, CV AUC)),
    with one trace entry per count from the initial down to the target.
    """
    if target < 1 or target > len(feature_names):
        raise ValueError("target must be between 1 and the feature count")
    folds = participant_folds(pids, n_folds, seed)
    keep = list(range(len(feature_names)))
    trace: list[tuple[int, float]] = []
    while True:
        aucs = []
        importance = np.zeros(len(keep))
        failed = False
        for k, (tr, va) in enumerate(folds):
            if y[tr].min() == y[tr].max():
                failed = True
                break
            model = train_gbdt(X[tr][:, keep], y[tr], config, [feature_names[i] for i in keep])
            gains = model.feature_importance()
            importance += np.array([gains[feature_names[i]] for i in keep])
            if y[va].min() != y[va].max():
                aucs.append(auc(model.predict_proba(X[va][:, keep]), y[va]))
        if failed or not aucs:
            warnings.warn("training degenerated mid-elimination; returning partial trace")
            return [feature_names[i] for i in keep], trace
        trace.append((len(keep), float(np.mean(aucs))))
        if len(keep) <= target:
            break
        keep.pop(int(np.argmin(importance / len(folds))))
    return [feature_names[i] for i in keep], trace
