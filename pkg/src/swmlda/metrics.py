"""The five evaluation metrics: one error, normalized coverage, ranking loss,
hamming loss and macro-F1.

All functions take ``(C, M)`` arrays (classes x test instances). Ranking ties
are broken by lowest class index. Instances with no positive label are
skipped by the ranking metrics; instances with every label positive are
also skipped by ranking loss.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionError, UndefinedMetricError

METRIC_NAMES = ("one_error", "coverage", "ranking_loss", "hamming_loss", "macro_f1")


@dataclass(frozen=True)
class MetricsReport:
    one_error: float
    coverage: float
    ranking_loss: float
    hamming_loss: float
    macro_f1: float
    skipped_instances: dict = field(default_factory=dict)

    def values(self) -> dict:
        return {k: getattr(self, k) for k in METRIC_NAMES}

    def to_dict(self) -> dict:
        return asdict(self)


def _check(Y, S):
    Y = np.asarray(Y)
    S = np.asarray(S)
    if Y.shape != S.shape or Y.ndim != 2:
        raise DimensionError(f"shape mismatch: {Y.shape} vs {S.shape}")
    return Y.astype(bool), S


def _rank_positions(probs) -> np.ndarray:
    """1-based position of each class in the descending ranking, per column."""
    C, M = probs.shape
    order = np.argsort(-probs, axis=0, kind="stable")
    pos = np.empty_like(order)
    pos[order, np.arange(M)[None, :]] = np.arange(1, C + 1)[:, None]
    return pos


def one_error(Y, probs) -> float:
    Y, P = _check(Y, probs)
    ok = Y.any(axis=0)
    if not ok.any():
        raise UndefinedMetricError("one error: no instance has a positive label")
    top = np.argmax(P, axis=0)  # first maximum, i.e. lowest class index on ties
    hit = Y[top, np.arange(Y.shape[1])]
    return float(np.mean(~hit[ok]))


def coverage(Y, probs) -> float:
    Y, P = _check(Y, probs)
    C = Y.shape[0]
    if C < 2:
        raise UndefinedMetricError("coverage is undefined for a single class")
    ok = Y.any(axis=0)
    if not ok.any():
        raise UndefinedMetricError("coverage: no instance has a positive label")
    pos = _rank_positions(P)
    deepest = np.where(Y, pos, 0).max(axis=0)
    return float(np.mean(deepest[ok] - 1) / (C - 1))


def ranking_loss(Y, probs) -> float:
    Y, P = _check(Y, probs)
    m = Y.sum(axis=0)
    n = Y.shape[0] - m
    ok = (m > 0) & (n > 0)
    if not ok.any():
        raise UndefinedMetricError("ranking loss: no instance has both relevant and irrelevant labels")
    losses = []
    for i in np.flatnonzero(ok):
        rel = P[Y[:, i], i]
        irr = P[~Y[:, i], i]
        bad = np.count_nonzero(rel[:, None] <= irr[None, :])
        losses.append(bad / (m[i] * n[i]))
    return float(np.mean(losses))


def hamming_loss(Y, labels) -> float:
    Y, L = _check(Y, labels)
    return float(np.mean(Y ^ L.astype(bool)))


def per_class_f1(Y, labels) -> np.ndarray:
    Y, L = _check(Y, labels)
    L = L.astype(bool)
    tp = np.count_nonzero(Y & L, axis=1).astype(float)
    fp = np.count_nonzero(~Y & L, axis=1)
    fn = np.count_nonzero(Y & ~L, axis=1)
    prec = np.divide(tp, tp + fp, out=np.zeros_like(tp), where=(tp + fp) > 0)
    rec = np.divide(tp, tp + fn, out=np.zeros_like(tp), where=(tp + fn) > 0)
    denom = prec + rec
    return np.divide(2 * prec * rec, denom, out=np.zeros_like(tp), where=denom > 0)


def macro_f1(Y, labels) -> float:
    """``(2/C) sum_c P_c R_c / (P_c + R_c)``; classes with P_c + R_c = 0 add 0."""
    return float(np.mean(per_class_f1(Y, labels)))


def evaluate(Y, predictions) -> MetricsReport:
    Yb = np.asarray(Y).astype(bool)
    m = Yb.sum(axis=0)
    no_pos = int(np.count_nonzero(m == 0))
    all_pos = int(np.count_nonzero(m == Yb.shape[0]))
    skipped = {
        "one_error": no_pos,
        "coverage": no_pos,
        "ranking_loss": no_pos + all_pos,
        "hamming_loss": 0,
        "macro_f1": 0,
    }
    return MetricsReport(
        one_error(Y, predictions.probs),
        coverage(Y, predictions.probs),
        ranking_loss(Y, predictions.probs),
        hamming_loss(Y, predictions.labels),
        macro_f1(Y, predictions.labels),
        skipped,
    )
