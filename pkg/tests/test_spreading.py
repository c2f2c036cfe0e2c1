"""Label spreading checked against the closed-form fixed point.

The iteration F <- alpha*S*F + (1-alpha)*Y converges to
(1-alpha) * (I - alpha*S)^-1 Y, which we solve directly with a dense
linear solve as the oracle.
"""

import numpy as np
import pytest

from hdpd.spreading import grid_affinity, label_spreading, normalize_affinity, posterior


def spreading_oracle(S, Y, alpha):
    n = S.shape[0]
    return (1.0 - alpha) * np.linalg.solve(np.eye(n) - alpha * S, Y)


def random_graph(rng, n):
    W = rng.uniform(0.0, 1.0, size=(n, n))
    W = (W + W.T) / 2.0
    np.fill_diagonal(W, 0.0)
    return W


def test_grid_affinity_shape_and_symmetry():
    W = grid_affinity(3, 4)
    assert W.shape == (12, 12)
    assert np.allclose(W, W.T)
    assert np.all(np.diag(W) == 0.0)
    assert np.all(W >= 0.0)


def test_grid_affinity_known_entry():
    # adjacent cells on a 3x3 grid sit 0.5 apart in unit coordinates
    W = grid_affinity(3, 3, gamma=20.0)
    assert W[0, 1] == pytest.approx(np.exp(-20.0 * 0.25))
    # the far corner: distance^2 = 1 + 1
    assert W[0, 8] == pytest.approx(np.exp(-40.0))


def test_grid_affinity_row_major_coordinates():
    # on a 2x3 grid, node 1 is (row 0, col 1) and node 3 is (row 1, col 0)
    W = grid_affinity(2, 3, gamma=1.0)
    assert W[0, 1] == pytest.approx(np.exp(-0.25))
    assert W[0, 3] == pytest.approx(np.exp(-1.0))


def test_grid_affinity_singleton_axis():
    W = grid_affinity(1, 4)
    assert W.shape == (4, 4)
    assert np.isfinite(W).all()
    with pytest.raises(ValueError):
        grid_affinity(0, 3)


def test_normalize_affinity_matches_formula():
    rng = np.random.default_rng(5)
    W = random_graph(rng, 8)
    S = normalize_affinity(W)
    deg = W.sum(axis=1)
    want = W / np.sqrt(np.outer(deg, deg))
    assert np.allclose(S, want)
    # spectral radius below 1 so the fixed point exists
    assert np.max(np.abs(np.linalg.eigvalsh((S + S.T) / 2))) <= 1.0 + 1e-9


def test_normalize_affinity_isolated_node():
    W = np.array([[0.0, 0.0], [0.0, 0.0]])
    S = normalize_affinity(W)
    assert np.all(S == 0.0)


def test_spreading_matches_direct_solve_on_random_graphs():
    rng = np.random.default_rng(88)
    for _ in range(50):
        n = int(rng.integers(4, 30))
        S = normalize_affinity(random_graph(rng, n))
        Y = np.zeros((n, 2))
        labeled = rng.choice(n, size=max(1, n // 4), replace=False)
        Y[labeled, rng.integers(0, 2, size=len(labeled))] = 1.0
        F = label_spreading(S, Y, alpha=0.2)
        assert np.max(np.abs(F - spreading_oracle(S, Y, 0.2))) <= 1e-8


def test_spreading_on_grid_graph():
    S = normalize_affinity(grid_affinity(5, 5))
    Y = np.zeros((25, 2))
    Y[0, 0] = 1.0   # one corner labeled class 0
    Y[24, 1] = 1.0  # opposite corner class 1
    F = label_spreading(S, Y, alpha=0.2)
    assert np.allclose(F, spreading_oracle(S, Y, 0.2), atol=1e-10)
    P = posterior(F)
    assert P[1, 0] > P[1, 1]    # next to the class-0 corner
    assert P[23, 1] > P[23, 0]  # next to the class-1 corner


def test_spreading_alpha_zero_returns_labels():
    S = normalize_affinity(grid_affinity(3, 3))
    Y = np.zeros((9, 2))
    Y[4, 1] = 1.0
    F = label_spreading(S, Y, alpha=0.0)
    assert np.array_equal(F, Y)


def test_spreading_rejects_bad_inputs():
    S = normalize_affinity(grid_affinity(2, 2))
    with pytest.raises(ValueError, match="alpha"):
        label_spreading(S, np.ones((4, 2)), alpha=1.0)
    with pytest.raises(ValueError, match="labeled"):
        label_spreading(S, np.zeros((4, 2)))


def test_posterior_rows_sum_to_one():
    rng = np.random.default_rng(3)
    F = rng.uniform(0.1, 2.0, size=(10, 2))
    P = posterior(F)
    assert np.allclose(P.sum(axis=1), 1.0)
    assert np.allclose(posterior(np.zeros((3, 4))), 0.25)


def test_labeled_nodes_keep_their_class():
    """Clamped labels dominate their own node after convergence."""
    S = normalize_affinity(grid_affinity(4, 4))
    Y = np.zeros((16, 2))
    Y[2, 0] = 1.0
    Y[13, 1] = 1.0
    P = posterior(label_spreading(S, Y, alpha=0.2))
    assert P[2, 0] > 0.5
    assert P[13, 1] > 0.5
