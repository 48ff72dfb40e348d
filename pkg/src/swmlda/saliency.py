"""Per-class probabilistic saliency weights.

For each class ``c`` a fully connected heat-kernel graph is built over the
class members, and the weights solve

    (D_c - W_c + V_c + eps I) p = 1,    p <- p / sum(p)

where ``D_c`` is the degree matrix and ``V_c`` the prior diagonal. The
system matrix is a non-singular M-matrix, so ``p`` is entrywise
non-negative and a Cholesky solve is appropriate.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.spatial.distance import pdist, squareform

from . import priors as _priors
from .data import MultiLabelDataset
from .errors import ConfigError, NumericError, SwmldaError


@dataclass(frozen=True)
class ClassGraph:
    class_index: int
    W: np.ndarray
    V: np.ndarray
    sigma: float = 1.0
    epsilon: float = 1e-6
    degree: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        W = np.asarray(self.W, float)
        V = np.asarray(self.V, float)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or V.shape != (W.shape[0],):
            raise ConfigError("affinity must be square and prior diagonal must match it")
        if np.any(V < 0):
            raise ConfigError("prior diagonal must be non-negative")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "degree", W.sum(axis=1))

    @property
    def size(self) -> int:
        return self.W.shape[0]

    def system_matrix(self) -> np.ndarray:
        """``H = D - W + V + eps I``."""
        H = -self.W.copy()
        H[np.diag_indices_from(H)] += self.degree + self.V + self.epsilon
        return H


@dataclass(frozen=True)
class WeightMatrix:
    """Per-class instance weights ``P`` (C, N); non-empty rows sum to 1."""

    P: np.ndarray
    empty_classes: tuple = ()
    residuals: tuple = ()
    warnings: tuple = ()

    @property
    def row_sums(self) -> np.ndarray:
        return self.P.sum(axis=1)

    @property
    def instance_sums(self) -> np.ndarray:
        """``p_hat``: total weight per instance over all classes."""
        return self.P.sum(axis=0)


def median_pairwise_distance(Xc) -> float:
    Xc = np.asarray(Xc, float)
    if Xc.shape[1] < 2:
        return 1.0
    d = np.median(pdist(Xc.T))
    return float(d) if d > 0 else 1.0


def build_affinity(Xc, sigma: float, squared: bool = False) -> np.ndarray:
    """Heat-kernel affinity ``exp(-||x_i - x_j|| / (2 sigma^2))`` between columns of ``Xc``.

    With ``squared=True`` the conventional squared distance is used instead.
    """
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    Xc = np.asarray(Xc, float)
    n = Xc.shape[1]
    if n == 1:
        return np.ones((1, 1))
    d = squareform(pdist(Xc.T, "sqeuclidean" if squared else "euclidean"))
    return np.exp(-d / (2.0 * sigma ** 2))


def pse_solve(graph: ClassGraph, *, return_residual: bool = False):
    """Normalized saliency weights for one class graph.

    Returns the weight vector (summing to 1), and optionally the relative
    residual ``||H p - 1||_inf / ||H||_inf`` of the unnormalized solve.
    """
    n = graph.size
    if n == 1:
        p = np.ones(1)
        return (p, 0.0) if return_residual else p
    H = graph.system_matrix()
    try:
        factor = linalg.cho_factor(H, lower=True, check_finite=False)
        raw = linalg.cho_solve(factor, np.ones(n), check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericError(
            f"saliency system for class {graph.class_index} is numerically singular "
            f"(epsilon={graph.epsilon:g}); increase epsilon"
        ) from exc
    if not np.all(np.isfinite(raw)):
        raise NumericError(f"non-finite saliency solution for class {graph.class_index}; increase epsilon")
    lo = raw.min()
    if lo < -1e-10:
        raise NumericError(f"saliency solution for class {graph.class_index} has negative entry {lo:.3e}")
    raw = np.where(raw < 0, 0.0, raw)
    resid = float(np.abs(H @ raw - 1.0).max() / np.abs(H).sum(axis=1).max())
    total = raw.sum()
    if not total > 0:
        raise NumericError(f"saliency solution for class {graph.class_index} is identically zero")
    p = raw / total
    return (p, resid) if return_residual else p


def assemble_weight_matrix(per_class, n_classes: int, n_instances: int) -> WeightMatrix:
    """Scatter per-class weight vectors into a (C, N) matrix.

    ``per_class`` is an iterable of ``(class_index, member_indices, weights)``.
    Classes that never appear, or appear with no members, give zero rows.
    """
    P = np.zeros((n_classes, n_instances))
    seen = set()
    for c, idx, w in per_class:
        idx = np.asarray(idx, dtype=int)
        if c in seen:
            raise SwmldaError(f"class {c} assembled twice")
        if np.unique(idx).size != idx.size:
            raise SwmldaError(f"overlapping member indices in class {c}")
        if idx.size:
            P[c, idx] = w
            seen.add(c)
    empty = tuple(c for c in range(n_classes) if c not in seen)
    return WeightMatrix(P, empty)


def _class_weights(ds, c, prior, sigma, epsilon, squared, sigma_median):
    idx = prior.member_indices
    Xc = ds.X[:, idx]
    s = median_pairwise_distance(Xc) if sigma_median else sigma
    g = ClassGraph(c, build_affinity(Xc, s, squared), prior.values, s, epsilon)
    p, resid = pse_solve(g, return_residual=True)
    return c, idx, p, resid


def saliency_weights(ds: MultiLabelDataset, prior_form: str, sigma: float = 1.0,
                     epsilon: float = 1e-6, *, squared: bool = False, sigma_median: bool = False,
                     binary_prior: float = 1.0, fuzzy_max_iters: int = 100, fuzzy_tol: float = 1e-6,
                     hsic_max_sweeps: int = 50, workers: int = 1) -> WeightMatrix:
    """Saliency-based weight matrix for a training split.

    Parameters
    ----------
    ds : MultiLabelDataset
        Training data (already preprocessed).
    prior_form : {"m", "c", "b", "e", "f", "d"}
    sigma : float
        Heat-kernel bandwidth; ignored when ``sigma_median`` is set, in which
        case each class uses its median pairwise distance.
    epsilon : float
        Diagonal regularizer added to every class system.
    workers : int
        Thread count for the per-class solves. Results are merged in class
        order, so the output does not depend on it.
    """
    if not sigma_median and not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    if epsilon < 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", _priors.ConvergenceWarning)
        diags = _priors.compute_priors(
            ds, prior_form, binary_prior=binary_prior, fuzzy_max_iters=fuzzy_max_iters,
            fuzzy_tol=fuzzy_tol, hsic_max_sweeps=hsic_max_sweeps)
    msgs = [str(w.message) for w in caught]
    for d in diags:
        if d is not None:
            msgs.extend(m for m in d.warnings if m not in msgs)

    jobs = [(c, d) for c, d in enumerate(diags) if d is not None]
    args = (sigma, epsilon, squared, sigma_median)
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda j: _class_weights(ds, j[0], j[1], *args), jobs))
    else:
        results = [_class_weights(ds, c, d, *args) for c, d in jobs]

    wm = assemble_weight_matrix([(c, idx, p) for c, idx, p, _ in results], ds.n_classes, ds.n_instances)
    residuals = [0.0] * ds.n_classes
    for c, _, _, r in results:
        residuals[c] = r
    for c in wm.empty_classes:
        msgs.append(f"class {c} ({ds.class_names[c]!r}) has no training members; weight row is zero")
    return WeightMatrix(wm.P, wm.empty_classes, tuple(residuals), tuple(msgs))
