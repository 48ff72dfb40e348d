"""Weighted scatter matrices and the discriminant projection.

Scatter matrices are built in matrix form from a (C, N) weight matrix ``P``:

    S_w = X (diag(p_hat) - Q^T Q) X^T
    S_b = X (Q^T Q - p_hat^T p_hat / n) X^T
    S_t = X (diag(p_hat) - p_hat^T p_hat / n) X^T

with ``Q`` the rows of ``P`` divided by ``sqrt(n_c)``, ``n_c`` the row sums,
``p_hat`` the column sums and ``n`` the total mass. For row-normalized
``P`` (saliency weights) ``Q == P``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConfigError, DegenerateProjectionError, DegenerateWeightsError, DimensionError

PAIRS = ("b_over_t", "b_over_w")


@dataclass(frozen=True)
class ScatterSet:
    """Within, between and total scatter.

    When ``basis`` is set, the matrices live in the ``r``-dimensional
    coordinates ``basis^T x`` rather than in the original feature space.
    """

    S_w: np.ndarray
    S_b: np.ndarray
    S_t: np.ndarray
    n: float
    n_classes: int
    basis: np.ndarray | None = None
    full_dim: int | None = None

    @property
    def dim(self) -> int:
        return self.S_t.shape[0]


@dataclass(frozen=True)
class Projection:
    W: np.ndarray
    eigenvalues: np.ndarray
    energy_threshold: float
    ridge: float
    pair: str = "b_over_t"
    spectrum: np.ndarray | None = None

    @property
    def d(self) -> int:
        return self.W.shape[1]


def normalized_weights(P) -> tuple[np.ndarray, np.ndarray]:
    """``Q`` (rows of ``P`` scaled by ``1/sqrt(n_c)``, empty rows dropped) and ``p_hat``."""
    P = np.asarray(P, float)
    if np.any(P < 0):
        raise DegenerateWeightsError("weight matrix has negative entries")
    nc = P.sum(axis=1)
    keep = nc > 0
    Q = P[keep] / np.sqrt(nc[keep])[:, None]
    return Q, P.sum(axis=0)


def scatter_matrices(X, P, basis=None) -> ScatterSet:
    """Matrix-form weighted scatters.

    Parameters
    ----------
    X : array (D, N)
    P : array (C, N), non-negative
    basis : array (D, r), optional
        Orthonormal basis of the column space of ``X``; scatters are then
        computed on ``basis^T X``.
    """
    X = np.asarray(X, float)
    P = np.asarray(P, float)
    if X.shape[1] != P.shape[1]:
        raise DimensionError(f"X has {X.shape[1]} instances, P has {P.shape[1]}")
    Q, phat = normalized_weights(P)
    n = float(phat.sum())
    if not n > 0:
        raise DegenerateWeightsError("total weight mass is zero")
    Z = X if basis is None else basis.T @ X
    # centre on the weighted mean first; the result is identical but better conditioned
    mu = Z @ phat / n
    Zc = Z - mu[:, None]
    S_t = (Zc * phat) @ Zc.T
    M = Zc @ Q.T  # (dim, C): sqrt(n_c) * (mu_c - mu)
    S_b = M @ M.T
    S_w = S_t - S_b
    sym = lambda A: 0.5 * (A + A.T)
    return ScatterSet(sym(S_w), sym(S_b), sym(S_t), n, int(Q.shape[0]), basis, X.shape[0])


def scatter_matrices_literal(X, P) -> ScatterSet:
    """The same scatters by the literal matrix expressions, without centering."""
    X = np.asarray(X, float)
    Q, phat = normalized_weights(np.asarray(P, float))
    n = phat.sum()
    if not n > 0:
        raise DegenerateWeightsError("total weight mass is zero")
    QtQ = Q.T @ Q
    pp = np.outer(phat, phat) / n
    S_w = X @ (np.diag(phat) - QtQ) @ X.T
    S_b = X @ (QtQ - pp) @ X.T
    S_t = X @ (np.diag(phat) - pp) @ X.T
    return ScatterSet(S_w, S_b, S_t, float(n), int(Q.shape[0]), None, X.shape[0])


def column_basis(X, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of span(columns of X), via the N x N Gram matrix."""
    X = np.asarray(X, float)
    G = X.T @ X
    evals, evecs = linalg.eigh(G)
    keep = evals > rtol * max(evals[-1], 0.0)
    if not keep.any():
        raise DegenerateProjectionError("data matrix is identically zero")
    U = X @ (evecs[:, keep] / np.sqrt(evals[keep]))
    # one re-orthonormalization pass to mop up rounding in the Gram route
    U, _ = np.linalg.qr(U)
    return U


def default_ridge(scatter: ScatterSet, pair: str = "b_over_t") -> float:
    M = scatter.S_t if pair == "b_over_t" else scatter.S_w
    D = scatter.full_dim or scatter.dim
    return 1e-8 * float(np.trace(M)) / D


def fit_projection(scatter: ScatterSet, pair: str = "b_over_t", energy: float = 0.999,
                   ridge: float | None = None) -> Projection:
    """Solve ``S_b v = lambda (M + ridge I) v`` and keep the leading directions.

    ``M`` is ``S_t`` (``pair="b_over_t"``) or ``S_w``. The retained dimension
    is the smallest ``d`` whose cumulative positive-eigenvalue mass reaches
    ``energy`` of the total, capped at ``C - 1`` and at least 1.
    """
    if pair not in PAIRS:
        raise ConfigError(f"pair must be one of {PAIRS}, got {pair!r}")
    if not 0 < energy <= 1:
        raise ConfigError(f"energy must lie in (0, 1], got {energy}")
    if ridge is None:
        ridge = default_ridge(scatter, pair)
    if ridge < 0:
        raise ConfigError(f"ridge must be >= 0, got {ridge}")
    M = (scatter.S_t if pair == "b_over_t" else scatter.S_w) + ridge * np.eye(scatter.dim)
    lam_m, Qm = linalg.eigh(M)
    keep = lam_m > 1e-12 * max(np.trace(M), 0.0)
    if not keep.any():
        raise DegenerateProjectionError("denominator scatter is zero")
    whiten = Qm[:, keep] / np.sqrt(lam_m[keep])
    A = whiten.T @ scatter.S_b @ whiten
    lam, U = linalg.eigh(0.5 * (A + A.T))
    order = np.argsort(lam)[::-1]
    lam, U = lam[order], U[:, order]
    V = whiten @ U

    positive = lam > 1e-12 * max(1.0, abs(lam[0]))
    if not positive.any():
        raise DegenerateProjectionError("between-class scatter has no positive generalized eigenvalue")
    pos = lam[positive]
    cum = np.cumsum(pos)
    d = int(np.searchsorted(cum, energy * cum[-1] * (1 - 1e-12)) + 1)
    cap = max(1, scatter.n_classes - 1)
    d = max(1, min(d, cap, pos.size))
    W = V[:, :d]
    # fix column signs: largest-magnitude entry positive, for reproducible output
    flip = np.sign(W[np.abs(W).argmax(axis=0), np.arange(d)])
    W = W * np.where(flip == 0, 1.0, flip)
    if scatter.basis is not None:
        W = scatter.basis @ W
    return Projection(W, lam[:d].copy(), energy, float(ridge), pair, lam.copy())


def fit_discriminant(X, P, pair: str = "b_over_t", energy: float = 0.999,
                     ridge: float | None = None) -> tuple[Projection, ScatterSet]:
    """Scatter + projection, switching to the column-space basis when D > N."""
    X = np.asarray(X, float)
    basis = column_basis(X) if X.shape[0] > X.shape[1] else None
    sc = scatter_matrices(X, P, basis)
    return fit_projection(sc, pair, energy, ridge), sc


def transform(proj: Projection, X) -> np.ndarray:
    X = np.asarray(X, float)
    if X.shape[0] != proj.W.shape[0]:
        raise DimensionError(f"projection expects {proj.W.shape[0]} features, got {X.shape[0]}")
    return proj.W.T @ X


def fisher_ratio(W, S_b, S_t) -> float:
    return float(np.trace(W.T @ S_b @ W) / np.trace(W.T @ S_t @ W))
