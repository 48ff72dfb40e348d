"""Per-class prior information (diagonal of ``V_c``) and raw baseline weights.

Six prior forms are available, keyed by a single letter:

=====  ===============================================================
``m``  misclassification: distance to own class mean vs nearest rival
``c``  label correlation (cosine between class label rows)
``b``  binary: a constant value for every member
``e``  entropy: ``1 - 1/||y_i||_1``
``f``  supervised fuzzy C-means memberships
``d``  HSIC dependence maximisation (one-hot allocation)
=====  ===============================================================

Larger prior values suppress an instance's saliency within its class.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import MultiLabelDataset
from .errors import ConfigError, EmptyClassError, NumericError

PRIOR_FORMS = ("m", "c", "b", "e", "f", "d")
BASELINE_FORMS = ("binary", "correlation", "entropy", "fuzzy", "dependence")

# floor for squared distances that would otherwise be inverted or divided by
DIST_FLOOR = 1e-12


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PriorDiagonal:
    """Diagonal of ``V_c`` for the members of one class, in dataset order."""

    class_index: int
    values: np.ndarray
    member_indices: np.ndarray
    warnings: tuple = ()

    def __post_init__(self):
        if self.values.shape != self.member_indices.shape:
            raise ValueError("values and member_indices must have equal length")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("prior values must be finite and non-negative")


@dataclass(frozen=True)
class MembershipMatrix:
    """Instance-to-class memberships ``w`` of shape (N, C)."""

    w: np.ndarray
    n_iter: int
    converged: bool
    history: tuple = field(default=(), repr=False)

    @property
    def warnings(self) -> tuple:
        if self.converged:
            return ()
        return (f"membership solver stopped after {self.n_iter} iterations without converging",)


def _require_members(ds: MultiLabelDataset, c: int) -> np.ndarray:
    if not 0 <= c < ds.n_classes:
        raise ConfigError(f"class index {c} out of range for C={ds.n_classes}")
    idx = ds.members(c)
    if idx.size == 0:
        raise EmptyClassError(f"class {c} ({ds.class_names[c]!r}) has no members")
    return idx


def _diag(c, idx, values, warns=()) -> PriorDiagonal:
    return PriorDiagonal(c, np.asarray(values, dtype=float), idx, tuple(warns))


# ---------------------------------------------------------------------------
# correlation


def correlation_matrix(Y) -> np.ndarray:
    """Cosine similarity between class label rows; 0 where a class is empty."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] < 1:
        raise ConfigError("label matrix must be 2-D with at least one class")
    norms = np.linalg.norm(Y, axis=1)
    G = Y @ Y.T
    denom = np.outer(norms, norms)
    R = np.divide(G, denom, out=np.zeros_like(G), where=denom > 0)
    # a class's cosine with itself is exactly 1; sqrt rounding would say otherwise
    R[np.diag_indices_from(R)] = np.where(norms > 0, 1.0, 0.0)
    return np.clip(R, 0.0, 1.0)


def correlation_weights(Y, R) -> np.ndarray:
    """``v_i = R y_i / ||y_i||_1`` for every instance, shape (N, C).

    Instances without labels get an all-zero row.
    """
    Y = np.asarray(Y, dtype=float)
    m = Y.sum(axis=0)
    V = (np.asarray(R) @ Y).T
    return np.divide(V, m[:, None], out=np.zeros_like(V), where=m[:, None] > 0)


def prior_correlation(ds: MultiLabelDataset, c: int, R=None) -> PriorDiagonal:
    idx = _require_members(ds, c)
    if R is None:
        R = correlation_matrix(ds.Y)
    v = correlation_weights(ds.Y[:, idx], R)[:, c]
    vals = 1.0 - v
    if np.any(vals < -1e-12):
        raise NumericError(f"correlation weight exceeds 1 for class {c}: {v.max()!r}")
    return _diag(c, idx, np.maximum(vals, 0.0))


# ---------------------------------------------------------------------------
# binary / entropy


def prior_binary(ds: MultiLabelDataset, c: int, constant: float = 1.0) -> PriorDiagonal:
    if constant < 0:
        raise ConfigError(f"binary prior constant must be >= 0, got {constant}")
    idx = _require_members(ds, c)
    return _diag(c, idx, np.full(idx.size, float(constant)))


def prior_entropy(ds: MultiLabelDataset, c: int) -> PriorDiagonal:
    idx = _require_members(ds, c)
    m = ds.Y[:, idx].sum(axis=0)
    return _diag(c, idx, 1.0 - 1.0 / m)


# ---------------------------------------------------------------------------
# misclassification


def class_means(X, Y) -> tuple[np.ndarray, np.ndarray]:
    """Unweighted class means, shape (D, C), and a mask of non-empty classes."""
    Y = np.asarray(Y, dtype=float)
    counts = Y.sum(axis=1)
    sums = np.asarray(X) @ Y.T
    means = np.divide(sums, counts[None, :], out=np.zeros_like(sums), where=counts[None, :] > 0)
    return means, counts > 0


def misclassification_values(d_own, d_rival) -> np.ndarray:
    """0 where the own-class distance is strictly smallest, else the ratio.

    A zero rival distance is floored at ``DIST_FLOOR``; a tie gives 1.
    """
    d_own = np.asarray(d_own, float)
    d_rival = np.asarray(d_rival, float)
    ratio = np.where(d_own == d_rival, 1.0, d_own / np.maximum(d_rival, DIST_FLOOR))
    return np.where(d_own < d_rival, 0.0, ratio)


def prior_misclassification(ds: MultiLabelDataset, c: int, means=None) -> PriorDiagonal:
    if ds.n_classes < 2:
        raise ConfigError("misclassification prior needs at least two classes")
    idx = _require_members(ds, c)
    if means is None:
        means = class_means(ds.X, ds.Y)
    mu, nonempty = means
    Xc = ds.X[:, idx]
    sq = _sqdist_to(Xc, mu)  # (N_c, C)
    d_own = sq[:, c]
    rivals = [k for k in range(ds.n_classes) if k != c and nonempty[k]]
    if not rivals:
        return _diag(c, idx, np.zeros(idx.size), ("no non-empty rival class; prior set to 0",))
    d_rival = sq[:, rivals].min(axis=1)
    return _diag(c, idx, misclassification_values(d_own, d_rival))


# ---------------------------------------------------------------------------
# supervised fuzzy C-means


def fuzzy_membership_update(sqdist, Y) -> np.ndarray:
    """Membership update given squared distances to the fuzzy centroids.

    Parameters
    ----------
    sqdist : array (N, C)
        ``||x_i - m_c||^2``.
    Y : array (C, N)

    Returns
    -------
    w : array (N, C), rows sum to 1 over the positive labels (0 for unlabeled rows).
    """
    Yt = np.asarray(Y, dtype=float).T
    inv = Yt / np.maximum(np.asarray(sqdist, float), DIST_FLOOR)
    tot = inv.sum(axis=1, keepdims=True)
    return np.divide(inv, tot, out=np.zeros_like(inv), where=tot > 0)


def fuzzy_centroids(X, w) -> np.ndarray:
    w2 = np.asarray(w) ** 2
    mass = w2.sum(axis=0)
    sums = np.asarray(X) @ w2
    return np.divide(sums, mass[None, :], out=np.zeros_like(sums), where=mass[None, :] > 0)


def _sqdist_to(X, M) -> np.ndarray:
    # (N, C) squared distances between columns of X and columns of M
    xx = (X ** 2).sum(axis=0)[:, None]
    mm = (M ** 2).sum(axis=0)[None, :]
    return np.maximum(xx + mm - 2.0 * X.T @ M, 0.0)


def fuzzy_memberships(X, Y, max_iters: int = 100, tol: float = 1e-6) -> MembershipMatrix:
    """Alternate centroid and membership updates until ``max |dw| < tol``.

    Initial memberships are ``y_i / ||y_i||_1``.
    """
    if max_iters < 1 or tol <= 0:
        raise ConfigError("fuzzy solver needs max_iters >= 1 and tol > 0")
    X = np.asarray(X, float)
    Yf = np.asarray(Y, float)
    m = Yf.sum(axis=0)
    w = np.divide(Yf.T, m[:, None], out=np.zeros((Yf.shape[1], Yf.shape[0])), where=m[:, None] > 0)
    deltas = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        centroids = fuzzy_centroids(X, w)
        w_new = fuzzy_membership_update(_sqdist_to(X, centroids), Yf)
        delta = float(np.abs(w_new - w).max()) if w.size else 0.0
        deltas.append(delta)
        w = w_new
        if delta < tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"fuzzy C-means did not converge in {max_iters} iterations", ConvergenceWarning)
    return MembershipMatrix(w, it, converged, tuple(deltas))


def prior_fuzzy(ds: MultiLabelDataset, c: int, max_iters: int = 100, tol: float = 1e-6,
                membership: MembershipMatrix | None = None) -> PriorDiagonal:
    idx = _require_members(ds, c)
    if membership is None:
        membership = fuzzy_memberships(ds.X, ds.Y, max_iters, tol)
    vals = np.clip(1.0 - membership.w[idx, c], 0.0, None)
    return _diag(c, idx, vals, membership.warnings)


# ---------------------------------------------------------------------------
# HSIC dependence


def hsic_objective(X, Y, w) -> float:
    """``sum_ij theta_ij w_i diag(y_i * y_j) w_j^T`` with a centered linear kernel.

    ``theta = H X^T X H``, ``H = I - 11^T / N`` over all N instances.
    """
    X = np.asarray(X, float)
    Xc = X - X.mean(axis=1, keepdims=True)
    A = np.asarray(w, float) * np.asarray(Y, float).T  # (N, C)
    S = Xc @ A  # (D, C)
    return float((S ** 2).sum())


def dependence_memberships(X, Y, max_sweeps: int = 50) -> MembershipMatrix:
    """One-hot memberships maximising the HSIC objective by coordinate ascent.

    Starting from ``y_i / ||y_i||_1``, instances are visited in index order;
    each is moved to the positive label that maximises the objective with
    every other row held fixed (ties -> lowest class index). Sweeps repeat
    until no row changes.

    The objective is ``sum_c ||S_c||^2`` where ``S_c = sum_i w_ic xc_i`` and
    ``xc_i`` are centered instances, so the per-row gain of assigning ``i``
    to ``k`` is ``2 xc_i . S_k^{(-i)} + ||xc_i||^2``.
    """
    if max_sweeps < 1:
        raise ConfigError("hsic.max_sweeps must be >= 1")
    X = np.asarray(X, float)
    Yb = np.asarray(Y) > 0
    C, N = Yb.shape
    Xc = X - X.mean(axis=1, keepdims=True)
    m = Yb.sum(axis=0)
    w = np.divide(Yb.T.astype(float), m[:, None], out=np.zeros((N, C)), where=m[:, None] > 0)
    S = Xc @ w  # (D, C)
    sq = (Xc ** 2).sum(axis=0)
    labels = [np.flatnonzero(Yb[:, i]) for i in range(N)]
    converged = False
    sweep = 0
    changes = []
    for sweep in range(1, max_sweeps + 1):
        changed = 0
        for i in range(N):
            pos = labels[i]
            if pos.size == 0:
                continue
            xi = Xc[:, i]
            S[:, pos] -= np.outer(xi, w[i, pos])
            gain = 2.0 * (xi @ S[:, pos]) + sq[i]
            k = pos[int(np.argmax(gain))]  # first maximum = lowest class index
            if w[i, k] != 1.0:
                changed += 1
            w[i] = 0.0
            w[i, k] = 1.0
            S[:, k] += xi
        changes.append(changed)
        if changed == 0:
            converged = True
            break
    if not converged:
        warnings.warn(f"HSIC coordinate ascent did not settle in {max_sweeps} sweeps", ConvergenceWarning)
    return MembershipMatrix(w, sweep, converged, tuple(changes))


def prior_dependence(ds: MultiLabelDataset, c: int, max_iters: int = 50,
                     membership: MembershipMatrix | None = None) -> PriorDiagonal:
    idx = _require_members(ds, c)
    if membership is None:
        membership = dependence_memberships(ds.X, ds.Y, max_iters)
    return _diag(c, idx, 1.0 - membership.w[idx, c], membership.warnings)


# ---------------------------------------------------------------------------
# dispatch


def compute_priors(ds: MultiLabelDataset, form: str, *, binary_prior: float = 1.0,
                   fuzzy_max_iters: int = 100, fuzzy_tol: float = 1e-6,
                   hsic_max_sweeps: int = 50) -> list:
    """Prior diagonals for every class; ``None`` for empty classes.

    Global quantities (correlation matrix, class means, membership solves)
    are computed once and shared across classes.
    """
    if form not in PRIOR_FORMS:
        raise ConfigError(f"unknown prior form {form!r}; expected one of {PRIOR_FORMS}")
    shared = {}
    if form == "c":
        shared["R"] = correlation_matrix(ds.Y)
    elif form == "m":
        if ds.n_classes < 2:
            raise ConfigError("misclassification prior needs at least two classes")
        shared["means"] = class_means(ds.X, ds.Y)
    elif form == "f":
        shared["membership"] = fuzzy_memberships(ds.X, ds.Y, fuzzy_max_iters, fuzzy_tol)
    elif form == "d":
        shared["membership"] = dependence_memberships(ds.X, ds.Y, hsic_max_sweeps)
    elif form == "b" and binary_prior < 0:
        raise ConfigError(f"binary prior constant must be >= 0, got {binary_prior}")

    out = []
    for c in range(ds.n_classes):
        if not ds.Y[c].any():
            out.append(None)
            continue
        if form == "m":
            out.append(prior_misclassification(ds, c, shared["means"]))
        elif form == "c":
            out.append(prior_correlation(ds, c, shared["R"]))
        elif form == "b":
            out.append(prior_binary(ds, c, binary_prior))
        elif form == "e":
            out.append(prior_entropy(ds, c))
        elif form == "f":
            out.append(prior_fuzzy(ds, c, membership=shared["membership"]))
        else:
            out.append(prior_dependence(ds, c, membership=shared["membership"]))
    return out


def baseline_weight_matrix(ds: MultiLabelDataset, form: str, *, fuzzy_max_iters: int = 100,
                           fuzzy_tol: float = 1e-6, hsic_max_sweeps: int = 50) -> np.ndarray:
    """Raw (unnormalized) weight matrix P, shape (C, N), for the wMLDA baselines.

    Every form is masked to the positive labels of each instance.
    """
    Y = ds.Y.astype(float)
    if form == "binary":
        return Y.copy()
    if form == "entropy":
        m = Y.sum(axis=0)
        return np.divide(Y, m[None, :], out=np.zeros_like(Y), where=m[None, :] > 0)
    if form == "correlation":
        return correlation_weights(Y, correlation_matrix(Y)).T * Y
    if form == "fuzzy":
        return fuzzy_memberships(ds.X, ds.Y, fuzzy_max_iters, fuzzy_tol).w.T * Y
    if form == "dependence":
        return dependence_memberships(ds.X, ds.Y, hsic_max_sweeps).w.T * Y
    raise ConfigError(f"unknown baseline weight form {form!r}; expected one of {BASELINE_FORMS}")
