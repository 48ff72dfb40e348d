"""End-to-end experiment orchestration.

load -> standardize -> weights -> projection -> ML-KNN -> metrics, plus
model persistence, weight dumps and multi-cell suites.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import METHODS, ExperimentConfig, expand_suite, method_kind
from .data import (MultiLabelDataset, StandardizationStats, apply_standardizer,
                   fit_standardizer, safe_name)
from .datasets import load_split
from .errors import DataError, SwmldaError
from .metrics import METRIC_NAMES, MetricsReport, evaluate
from .mlknn import MlknnModel, mlknn_fit, mlknn_predict
from .priors import ConvergenceWarning, baseline_weight_matrix
from .projection import Projection, fit_discriminant, transform
from .saliency import WeightMatrix, saliency_weights

log = logging.getLogger(__name__)

MODEL_FORMAT = "swmlda-model"
MODEL_VERSION = 1


class StageError(SwmldaError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)


@contextmanager
def _stage(name: str, timings: dict):
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except SwmldaError as exc:
        raise StageError(name, exc) from exc
    except OSError as exc:
        raise StageError(name, DataError(str(exc))) from exc
    finally:
        timings[name] = round((time.perf_counter() - t0) * 1000.0, 3)


@dataclass
class TrainedModel:
    config: ExperimentConfig
    standardizer: StandardizationStats | None
    projection: Projection
    classifier: MlknnModel
    class_names: tuple
    feature_names: tuple
    weights: WeightMatrix | None = None
    warnings: list = field(default_factory=list)


@dataclass
class RunRecord:
    config: dict
    dataset: str
    method: str
    metrics: MetricsReport | None
    timings_ms: dict
    d: int | None
    warnings: list
    version: str = __version__
    status: str = "ok"
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "status": self.status,
            "error": self.error,
            "dataset": self.dataset,
            "method": self.method,
            "metrics": self.metrics.to_dict() if self.metrics else None,
            "d": self.d,
            "timings_ms": self.timings_ms,
            "warnings": self.warnings,
            "config": self.config,
        }


# ---------------------------------------------------------------------------
# core steps


def compute_weights(cfg: ExperimentConfig, train: MultiLabelDataset) -> WeightMatrix:
    kind, form = method_kind(cfg.method)
    if kind == "saliency":
        return saliency_weights(
            train, form, cfg.sigma, cfg.epsilon, squared=cfg.affinity_squared,
            sigma_median=cfg.sigma_median, binary_prior=cfg.binary_prior,
            fuzzy_max_iters=cfg.fuzzy_max_iters, fuzzy_tol=cfg.fuzzy_tol,
            hsic_max_sweeps=cfg.hsic_max_sweeps, workers=cfg.workers)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        P = baseline_weight_matrix(train, form, fuzzy_max_iters=cfg.fuzzy_max_iters,
                                   fuzzy_tol=cfg.fuzzy_tol, hsic_max_sweeps=cfg.hsic_max_sweeps)
    empty = tuple(int(c) for c in np.flatnonzero(P.sum(axis=1) == 0))
    msgs = [str(w.message) for w in caught]
    msgs += [f"class {c} ({train.class_names[c]!r}) has zero weight mass" for c in empty]
    return WeightMatrix(P, empty, (), tuple(msgs))


def fit_model(cfg: ExperimentConfig, train: MultiLabelDataset, timings: dict | None = None) -> TrainedModel:
    timings = {} if timings is None else timings
    stats = None
    with _stage("standardize", timings):
        if cfg.standardize:
            stats = fit_standardizer(train)
            train = apply_standardizer(train, stats)
    with _stage("weights", timings):
        wm = compute_weights(cfg, train)
    with _stage("projection", timings):
        proj, _ = fit_discriminant(train.X, wm.P, cfg.pair, cfg.energy, cfg.ridge)
    with _stage("classifier", timings):
        clf = mlknn_fit(transform(proj, train.X), train.Y, cfg.k, cfg.smoothing)
    return TrainedModel(cfg, stats, proj, clf, train.class_names, train.feature_names, wm,
                        list(wm.warnings))


def predict(model: TrainedModel, test: MultiLabelDataset):
    if test.n_features != len(model.feature_names):
        raise DataError(f"test set has {test.n_features} features, model expects {len(model.feature_names)}")
    if test.n_classes != len(model.class_names):
        raise DataError(f"test set has {test.n_classes} classes, model expects {len(model.class_names)}")
    if model.standardizer is not None:
        test = apply_standardizer(test, model.standardizer)
    return mlknn_predict(model.classifier, transform(model.projection, test.X), model.config.threshold)


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    return repr(float(v))


def metrics_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", "method", *METRIC_NAMES])
    for r in records:
        if r.metrics is None:
            w.writerow([r.dataset, r.method, *["FAILED"] * len(METRIC_NAMES)])
        else:
            w.writerow([r.dataset, r.method, *(_fmt(v) for v in r.metrics.values().values())])
    return buf.getvalue()


def _write_outputs(record: RunRecord, model: TrainedModel | None, out: Path, figures: bool) -> list:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        p = out / "metrics.csv"
        p.write_text(metrics_csv([record]))
        written.append(p)
        p = out / "run.json"
        p.write_text(json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n")
        written.append(p)
        if figures and model is not None:
            from . import plots

            written.append(plots.plot_spectrum(model.projection, out / "spectrum.png",
                                               f"{record.dataset} / {record.method}"))
            if model.weights is not None:
                written.append(plots.plot_weight_profiles(
                    model.weights.P, model.classifier.Y_train, model.class_names,
                    out / "weights.png", f"{record.dataset} / {record.method} weights"))
    except BaseException:
        for p in written:
            Path(p).unlink(missing_ok=True)
        raise
    return written


# ---------------------------------------------------------------------------
# public operations


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunRecord:
    """Execute the full pipeline for one (dataset, method) cell."""
    cfg.validate()
    timings: dict = {}
    with _stage("load", timings):
        train, test = load_split(cfg.dataset)
    model = fit_model(cfg, train, timings)
    with _stage("predict", timings):
        preds = predict(model, test)
    with _stage("metrics", timings):
        report = evaluate(test.Y, preds)
    record = RunRecord(cfg.to_dict(), cfg.dataset.display_name, cfg.method, report, timings,
                       model.projection.d, model.warnings)
    if write and cfg.output_path:
        _write_outputs(record, model, Path(cfg.output_path), cfg.figures)
    return record


def _run_cell(raw) -> RunRecord:
    name = "?"
    method = raw.get("method", "?") if isinstance(raw, dict) else "?"
    try:
        cfg = ExperimentConfig.from_dict(raw)
        name = cfg.dataset.display_name
        return run_experiment(cfg, write=False)
    except SwmldaError as exc:
        if isinstance(raw, dict):
            ds = raw.get("dataset") or {}
            name = ds.get("name") or Path(ds.get("train_path") or "?").stem
        return RunRecord(raw if isinstance(raw, dict) else {}, name, method, None, {}, None, [],
                         status="failed", error=str(exc))


def _table(records, metric) -> dict:
    table: dict = {}
    for r in records:
        row = table.setdefault(r.dataset, {})
        row[r.method] = None if r.metrics is None else getattr(r.metrics, metric)
    return table


def _table_csv(table, methods) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", *methods])
    for ds, row in table.items():
        w.writerow([ds, *("" if m not in row else ("FAILED" if row[m] is None else _fmt(row[m]))
                          for m in methods)])
    return buf.getvalue()


def _table_markdown(table, methods, metric) -> str:
    lines = [f"### {metric}", "", "| Dataset | " + " | ".join(methods) + " |",
             "|---" * (len(methods) + 1) + "|"]
    for ds, row in table.items():
        cells = []
        for m in methods:
            v = row.get(m, "")
            cells.append("" if v == "" else ("FAILED" if v is None else f"{v:.4f}"))
        lines.append(f"| {ds} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def run_suite(doc, output_dir=None, workers: int = 1, figures: bool = True) -> list:
    """Run every (dataset, method) cell; failures are recorded, not raised."""
    cells = expand_suite(doc)
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell, cells))
    else:
        records = [_run_cell(c) for c in cells]
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        present = {r.method for r in records}
        methods = [m for m in METHODS if m in present] + sorted(present - set(METHODS))
        (out / "metrics.csv").write_text(metrics_csv(records))
        md = []
        for metric in METRIC_NAMES:
            table = _table(records, metric)
            (out / f"table_{metric}.csv").write_text(_table_csv(table, methods))
            md.append(_table_markdown(table, methods, metric))
            if figures:
                from . import plots

                plots.plot_metric_grid(table, metric, out / f"table_{metric}.png",
                                       lower_is_better=metric != "macro_f1")
        (out / "tables.md").write_text("\n".join(md))
        (out / "runs.json").write_text(
            json.dumps([r.to_dict() for r in records], indent=2, sort_keys=True) + "\n")
    return records


def dump_weights(cfg: ExperimentConfig, out_path) -> Path:
    """Write the training weight matrix (C rows x N columns) plus sidecars.

    Sidecars: ``<stem>_residuals.csv`` (per-class solve residuals) and
    ``<stem>_warnings.txt`` (one warning per line, possibly empty).
    """
    cfg.validate()
    timings: dict = {}
    with _stage("load", timings):
        train, _ = load_split(cfg.dataset)
    with _stage("standardize", timings):
        if cfg.standardize:
            train = apply_standardizer(train, fit_standardizer(train))
    with _stage("weights", timings):
        wm = compute_weights(cfg, train)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in wm.P:
            w.writerow([_fmt(v) for v in row])
    stem = out_path.with_suffix("")
    with open(f"{stem}_residuals.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["class", "members", "row_sum", "residual"])
        for c in range(wm.P.shape[0]):
            res = wm.residuals[c] if wm.residuals else ""
            w.writerow([train.class_names[c], int(train.Y[c].sum()), _fmt(wm.P[c].sum()),
                        "" if res == "" else _fmt(res)])
    Path(f"{stem}_warnings.txt").write_text("".join(m + "\n" for m in wm.warnings))
    return out_path


# ---------------------------------------------------------------------------
# persistence


def _arr(a) -> list:
    return np.asarray(a).tolist()


def save_model(model: TrainedModel, path) -> Path:
    clf = model.classifier
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "artifact_version": __version__,
        "config": model.config.to_dict(),
        "class_names": list(model.class_names),
        "feature_names": list(model.feature_names),
        "standardizer": None if model.standardizer is None else {
            "mean": _arr(model.standardizer.mean), "scale": _arr(model.standardizer.scale)},
        "projection": {
            "W": _arr(model.projection.W), "eigenvalues": _arr(model.projection.eigenvalues),
            "energy_threshold": model.projection.energy_threshold, "ridge": model.projection.ridge,
            "pair": model.projection.pair,
            "spectrum": None if model.projection.spectrum is None else _arr(model.projection.spectrum)},
        "mlknn": {
            "Z_train": _arr(clf.Z_train), "Y_train": _arr(clf.Y_train), "k": clf.k,
            "smoothing": clf.smoothing, "prior": _arr(clf.prior), "prior_neg": _arr(clf.prior_neg),
            "cond": _arr(clf.cond), "cond_neg": _arr(clf.cond_neg)},
        "warnings": list(model.warnings),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # json emits shortest round-trip float reprs, so reload is bit-exact
    path.write_text(json.dumps(doc, allow_nan=False) + "\n")
    return path


def load_model(path) -> TrainedModel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model {path}: {exc}") from None
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise DataError(f"{path} is not a version-{MODEL_VERSION} {MODEL_FORMAT} file")
    f = lambda v: np.asarray(v, dtype=float)  # noqa: E731
    st = doc["standardizer"]
    pj = doc["projection"]
    m = doc["mlknn"]
    W = f(pj["W"]).reshape(len(doc["feature_names"]), -1)
    proj = Projection(W, f(pj["eigenvalues"]), pj["energy_threshold"], pj["ridge"], pj["pair"],
                      None if pj["spectrum"] is None else f(pj["spectrum"]))
    Z = f(m["Z_train"]).reshape(W.shape[1], -1)
    clf = MlknnModel(Z, np.asarray(m["Y_train"], dtype=np.int8).reshape(len(doc["class_names"]), -1),
                     int(m["k"]), float(m["smoothing"]), f(m["prior"]), f(m["prior_neg"]),
                     f(m["cond"]), f(m["cond_neg"]))
    return TrainedModel(
        ExperimentConfig.from_dict(doc["config"]),
        None if st is None else StandardizationStats(f(st["mean"]), f(st["scale"])),
        proj, clf, tuple(doc["class_names"]), tuple(doc["feature_names"]), None,
        list(doc.get("warnings", [])))
