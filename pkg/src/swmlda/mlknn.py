"""ML-KNN: multi-label k-nearest neighbours with a per-class Bayes rule.

Neighbour search is exact and brute force; distance ties go to the lower
training index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError

_CHUNK = 1024


@dataclass(frozen=True)
class MlknnModel:
    Z_train: np.ndarray
    Y_train: np.ndarray
    k: int
    smoothing: float
    prior: np.ndarray
    prior_neg: np.ndarray
    cond: np.ndarray
    cond_neg: np.ndarray


@dataclass(frozen=True)
class PredictionSet:
    probs: np.ndarray
    labels: np.ndarray
    threshold: float = 0.5


def _sqdist(A, B) -> np.ndarray:
    # rows of A vs rows of B
    d = (A ** 2).sum(1)[:, None] + (B ** 2).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d, 0.0)


def nearest_neighbors(Z_ref, Z_query, k: int, exclude_self: bool = False) -> np.ndarray:
    """Indices (M, k) of the ``k`` nearest reference columns for each query column.

    With ``exclude_self`` the query set is the reference set and each point
    is barred from its own neighbour list.
    """
    R = np.ascontiguousarray(np.asarray(Z_ref, float).T)
    Qm = np.ascontiguousarray(np.asarray(Z_query, float).T)
    out = np.empty((Qm.shape[0], k), dtype=np.intp)
    for start in range(0, Qm.shape[0], _CHUNK):
        stop = min(start + _CHUNK, Qm.shape[0])
        d = _sqdist(Qm[start:stop], R)
        if exclude_self:
            d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        # stable sort keeps index order among equal distances
        out[start:stop] = np.argsort(d, axis=1, kind="stable")[:, :k]
    return out


def mlknn_fit(Z_train, Y_train, k: int = 15, s: float = 1.0) -> MlknnModel:
    Z = np.asarray(Z_train, float)
    Y = np.asarray(Y_train).astype(np.int8)
    if Z.shape[1] != Y.shape[1]:
        raise DimensionError("Z_train and Y_train disagree on the number of instances")
    C, N = Y.shape
    if not 1 <= k < N:
        raise ConfigError(f"k must satisfy 1 <= k < N (k={k}, N={N})")
    if not s > 0:
        raise ConfigError(f"smoothing must be positive, got {s}")
    prior = (s + Y.sum(axis=1)) / (2 * s + N)
    nn = nearest_neighbors(Z, Z, k, exclude_self=True)
    counts = Y[:, nn].sum(axis=2)  # (C, N): positive neighbours per class
    cond = np.empty((C, k + 1))
    cond_neg = np.empty((C, k + 1))
    for c in range(C):
        pos = Y[c] == 1
        hp = np.bincount(counts[c, pos], minlength=k + 1)
        hn = np.bincount(counts[c, ~pos], minlength=k + 1)
        cond[c] = (s + hp) / (s * (k + 1) + hp.sum())
        cond_neg[c] = (s + hn) / (s * (k + 1) + hn.sum())
    return MlknnModel(Z, Y, k, float(s), prior, 1.0 - prior, cond, cond_neg)


def mlknn_predict(model: MlknnModel, Z_test, threshold: float = 0.5) -> PredictionSet:
    Zt = np.asarray(Z_test, float)
    if Zt.shape[0] != model.Z_train.shape[0]:
        raise DimensionError(
            f"model expects {model.Z_train.shape[0]}-dimensional inputs, got {Zt.shape[0]}"
        )
    nn = nearest_neighbors(model.Z_train, Zt, model.k)
    counts = model.Y_train[:, nn].sum(axis=2)  # (C, M)
    rows = np.arange(model.cond.shape[0])[:, None]
    a = model.prior[:, None] * model.cond[rows, counts]
    b = model.prior_neg[:, None] * model.cond_neg[rows, counts]
    probs = a / (a + b)
    return PredictionSet(probs, (probs >= threshold).astype(np.int8), threshold)
