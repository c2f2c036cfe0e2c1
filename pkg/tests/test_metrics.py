"""Ranking and threshold metrics, checked against pair-counting oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdpd.metrics import auc, confusion, f1_score, log_loss


def auc_oracle(scores, labels):
    """Probability a random positive outscores a random negative, ties 1/2."""
    scores = np.asarray(scores, float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def test_perfect_separation():
    assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0


def test_all_tied_scores():
    assert auc([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1]) == pytest.approx(0.5)


def test_auc_matches_pair_counting():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = int(rng.integers(4, 60))
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = rng.choice([0.1, 0.3, 0.5, 0.7], size=n)
        assert auc(scores, labels) == pytest.approx(auc_oracle(scores, labels))


def test_auc_needs_both_classes():
    with pytest.raises(ValueError):
        auc([0.1, 0.9], [1, 1])


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(0, 1, allow_nan=False), st.integers(0, 1)),
        min_size=2,
        max_size=40,
    )
)
def test_auc_property(pairs):
    scores = [p for p, _ in pairs]
    labels = [l for _, l in pairs]
    if len(set(labels)) < 2:
        labels[0] = 1 - labels[0]
    got = auc(scores, labels)
    assert 0.0 <= got <= 1.0
    assert got == pytest.approx(auc_oracle(scores, labels))
    # complement symmetry: flipping labels mirrors around 1/2
    flipped = auc(scores, [1 - l for l in labels])
    assert got + flipped == pytest.approx(1.0)


def test_confusion_boundary_is_positive():
    # score equal to the threshold counts as predicted-positive
    tp, fn, fp, tn = confusion([0.5, 0.5, 0.4], [1, 0, 0], threshold=0.5)
    assert (tp, fn, fp, tn) == (1, 0, 1, 1)


def test_f1_known_value():
    scores = [0.9, 0.8, 0.3, 0.7, 0.1]
    labels = [1, 0, 1, 1, 0]
    # at 0.5: tp=2, fp=1, fn=1 -> precision 2/3, recall 2/3
    assert f1_score(scores, labels, 0.5) == pytest.approx(2 / 3)


def test_f1_no_predicted_positives_is_zero():
    assert f1_score([0.1, 0.2], [1, 0], 0.9) == 0.0


def test_log_loss_decreases_with_better_probabilities():
    labels = np.array([1, 0, 1, 0])
    rough = log_loss([0.6, 0.4, 0.6, 0.4], labels)
    sharp = log_loss([0.9, 0.1, 0.9, 0.1], labels)
    assert sharp < rough


def test_log_loss_clipping_keeps_finite():
    assert np.isfinite(log_loss([0.0, 1.0], [1, 0]))
