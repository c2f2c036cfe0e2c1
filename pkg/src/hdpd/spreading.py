"""Graph label spreading over diagram grids.

The grid graph connects every pair of cells with a Gaussian affinity
on grid coordinates normalized to the unit square. Spreading iterates
F <- alpha * S F + (1 - alpha) * Y with S the symmetrically normalized
affinity, whose fixed point is (1 - alpha) * (I - alpha * S)^-1 Y.
"""

from __future__ import annotations

import numpy as np


def grid_affinity(ny: int, nx: int, gamma: float = 20.0) -> np.ndarray:
    """Dense affinity between all grid cells, row-major order, zero diagonal.

    Coordinates are index/(n-1) per axis so the kernel scale is
    resolution-independent; a singleton axis contributes coordinate 0.
    """
    if ny < 1 or nx < 1:
        raise ValueError("grid must be at least 1x1")
    ys = np.arange(ny) / (ny - 1) if ny > 1 else np.zeros(ny)
    xs = np.arange(nx) / (nx - 1) if nx > 1 else np.zeros(nx)
    cy = np.repeat(ys, nx)
    cx = np.tile(xs, ny)
    d2 = (cy[:, None] - cy[None, :]) ** 2 + (cx[:, None] - cx[None, :]) ** 2
    W = np.exp(-gamma * d2)
    np.fill_diagonal(W, 0.0)
    return W


def normalize_affinity(W: np.ndarray) -> np.ndarray:
    """S = D^-1/2 W D^-1/2; isolated nodes keep zero rows."""
    W = np.asarray(W, dtype=float)
    deg = W.sum(axis=1)
    inv_sqrt = np.where(deg > 0.0, 1.0 / np.sqrt(np.where(deg > 0.0, deg, 1.0)), 0.0)
    return W * inv_sqrt[:, None] * inv_sqrt[None, :]


def label_spreading(
    S: np.ndarray,
    Y: np.ndarray,
    alpha: float = 0.2,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> np.ndarray:
    """Converged spreading scores F (unnormalized class affinities).

    Y holds one row per node, one column per class, nonzero rows at
    labeled nodes. Requires at least one labeled node.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must be in [0, 1)")
    Y = np.asarray(Y, dtype=float)
    if not np.any(Y):
        raise ValueError("label spreading needs at least one labeled node")
    F = Y.copy()
    base = (1.0 - alpha) * Y
    for _ in range(max_iter):
        F_next = alpha * (S @ F) + base
        change = float(np.max(np.abs(F_next - F)))
        F = F_next
        if change < tol:
            break
    return F


def posterior(F: np.ndarray) -> np.ndarray:
    """Rows normalized to distributions; all-zero rows become uniform."""
    F = np.asarray(F, dtype=float)
    total = F.sum(axis=1, keepdims=True)
    uniform = np.full_like(F, 1.0 / F.shape[1])
    with np.errstate(invalid="ignore", divide="ignore"):
        P = np.where(total > 0.0, F / np.where(total > 0.0, total, 1.0), uniform)
    return P
