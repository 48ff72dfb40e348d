"""Command line interface.

Subcommands: ``train``, ``eval``, ``run``, ``suite``, ``weights dump`` and
``fetch-datasets``. Exit codes: 0 success, 2 config error, 3 data error,
4 numeric error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import METHODS, ExperimentConfig
from .errors import ConfigError, SwmldaError
from .projection import PAIRS

log = logging.getLogger("swmlda")

# flag dest -> ExperimentConfig attribute (dataset_* go to the dataset block)
_FLAG_FIELDS = {
    "dataset": "dataset_name",
    "train": "dataset_train_path",
    "test": "dataset_test_path",
    "format": "dataset_format",
    "label_xml": "dataset_label_xml",
    "data_root": "dataset_root",
    "method": "method",
    "sigma": "sigma",
    "epsilon": "epsilon",
    "binary_prior": "binary_prior",
    "energy": "energy",
    "ridge": "ridge",
    "pair": "pair",
    "k": "k",
    "smoothing": "smoothing",
    "threshold": "threshold",
    "fuzzy_max_iters": "fuzzy_max_iters",
    "fuzzy_tol": "fuzzy_tol",
    "hsic_max_sweeps": "hsic_max_sweeps",
    "seed": "seed",
    "workers": "workers",
    "output": "output_path",
}


def _add_config_flags(p: argparse.ArgumentParser, output_help="output directory"):
    p.add_argument("--config", type=Path, help="JSON experiment config; flags override it")
    g = p.add_argument_group("dataset")
    g.add_argument("--dataset", help="registry name (e.g. scene, yeast)")
    g.add_argument("--train", help="training split path")
    g.add_argument("--test", help="test split path")
    g.add_argument("--format", choices=("csv", "arff"))
    g.add_argument("--label-names", help="comma-separated label attribute names (ARFF)")
    g.add_argument("--label-xml", help="MULAN label XML file (ARFF)")
    g.add_argument("--data-root", help="directory holding registry datasets")
    g = p.add_argument_group("method")
    g.add_argument("--method", choices=METHODS)
    g.add_argument("--sigma", type=float)
    g.add_argument("--sigma-median", action="store_true", default=None,
                   help="per-class sigma = median pairwise distance")
    g.add_argument("--epsilon", type=float)
    g.add_argument("--binary-prior", type=float)
    g.add_argument("--affinity-squared", action="store_true", default=None)
    g.add_argument("--fuzzy-max-iters", type=int)
    g.add_argument("--fuzzy-tol", type=float)
    g.add_argument("--hsic-max-sweeps", type=int)
    g.add_argument("--energy", type=float)
    g.add_argument("--ridge", type=float)
    g.add_argument("--pair", choices=PAIRS)
    g.add_argument("--k", type=int)
    g.add_argument("--smoothing", type=float)
    g.add_argument("--threshold", type=float)
    g.add_argument("--no-standardize", dest="standardize", action="store_false", default=None)
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--no-figures", dest="figures", action="store_false", default=None)
    p.add_argument("--output", "-o", help=output_help)


def build_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        base = cfg.to_dict()
    else:
        base = {}
    overrides = {}
    for flag, attr in _FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            overrides[attr] = v
    if getattr(args, "label_names", None):
        overrides["dataset_label_names"] = [s.strip() for s in args.label_names.split(",") if s.strip()]
    for flag in ("sigma_median", "affinity_squared", "standardize", "figures"):
        v = getattr(args, flag, None)
        if v is not None:
            overrides[flag] = v
    if "dataset_train_path" in overrides and "dataset_name" not in overrides:
        base.setdefault("dataset", {})["name"] = None
    if "dataset_format" not in overrides and "dataset_train_path" in overrides:
        if str(overrides["dataset_train_path"]).lower().endswith(".csv"):
            overrides["dataset_format"] = "csv"
    # assemble through from_dict so the same validation applies to flags and files
    ds = dict(base.get("dataset", {}))
    for k in list(overrides):
        if k.startswith("dataset_"):
            ds[k[len("dataset_"):]] = overrides.pop(k)
    doc = dict(base)
    doc["dataset"] = ds
    for k, v in overrides.items():
        if k == "fuzzy_max_iters":
            doc.setdefault("fuzzy", {})["max_iters"] = v
        elif k == "fuzzy_tol":
            doc.setdefault("fuzzy", {})["tol"] = v
        elif k == "hsic_max_sweeps":
            doc.setdefault("hsic", {})["max_sweeps"] = v
        elif k == "affinity_squared":
            doc.setdefault("affinity", {})["squared"] = v
        elif k == "sigma_median":
            doc["sigma"] = "median" if v else doc.get("sigma", 1.0)
        else:
            doc[k] = v
    return ExperimentConfig.from_dict(doc)


def _print_metrics(rec):
    for name, v in rec.metrics.values().items():
        print(f"{name:>13s}  {v:.4f}")
    print(f"{'d':>13s}  {rec.d}")


# ---------------------------------------------------------------------------
# command handlers


def cmd_run(args) -> int:
    from .pipeline import run_experiment

    cfg = build_config(args)
    rec = run_experiment(cfg)
    print(f"{rec.dataset} / {rec.method}")
    _print_metrics(rec)
    for w in rec.warnings:
        log.warning(w)
    if cfg.output_path:
        print(f"outputs written to {cfg.output_path}")
    return 0


def cmd_train(args) -> int:
    from .datasets import load_split
    from .pipeline import fit_model, save_model

    cfg = build_config(args)
    train, _ = load_split(cfg.dataset)
    model = fit_model(cfg, train)
    path = save_model(model, args.save)
    print(f"model saved to {path} (d={model.projection.d})")
    return 0


def cmd_eval(args) -> int:
    from .data import load_arff, load_csv, read_label_xml
    from .datasets import load_split
    from .metrics import evaluate
    from .pipeline import RunRecord, _write_outputs, load_model, predict

    model = load_model(args.load)
    cfg = model.config
    if args.test:
        fmt = args.format or ("csv" if args.test.lower().endswith(".csv") else "arff")
        if fmt == "csv":
            test = load_csv(args.test, "test")
        else:
            names = ([s for s in args.label_names.split(",") if s] if args.label_names
                     else read_label_xml(args.label_xml) if args.label_xml else list(model.class_names))
            test = load_arff(args.test, names, "test")
    else:
        _, test = load_split(cfg.dataset)
    preds = predict(model, test)
    report = evaluate(test.Y, preds)
    rec = RunRecord(cfg.to_dict(), cfg.dataset.display_name, cfg.method, report, {},
                    model.projection.d, list(model.warnings))
    _print_metrics(rec)
    if args.output:
        _write_outputs(rec, None, Path(args.output), False)
        if args.predictions:
            write_predictions(preds, model.class_names, Path(args.output) / "predictions.csv")
    return 0


def write_predictions(preds, class_names, path):
    """One row per test instance: C probability columns then C label columns."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"p:{c}" for c in class_names] + [f"l:{c}" for c in class_names])
        for i in range(preds.probs.shape[1]):
            w.writerow([repr(float(v)) for v in preds.probs[:, i]]
                       + [str(int(v)) for v in preds.labels[:, i]])
    return path


def cmd_suite(args) -> int:
    from .pipeline import run_suite

    try:
        doc = json.loads(Path(args.suite).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read suite {args.suite}: {exc}") from None
    records = run_suite(doc, args.output, workers=args.workers, figures=not args.no_figures)
    failed = 0
    for r in records:
        if r.metrics is None:
            failed += 1
            print(f"{r.dataset:>14s} {r.method:>10s}  FAILED  {r.error}")
        else:
            vals = "  ".join(f"{v:.4f}" for v in r.metrics.values().values())
            print(f"{r.dataset:>14s} {r.method:>10s}  {vals}")
    print(f"{len(records) - failed}/{len(records)} cells completed")
    return 0


def cmd_weights(args) -> int:
    from .pipeline import dump_weights

    cfg = build_config(args)
    out = args.output or "weights.csv"
    path = dump_weights(cfg, out)
    print(f"weights written to {path}")
    return 0


def cmd_fetch(args) -> int:
    from .datasets import fetch

    status = fetch(args.names or None, args.data_root, args.base_url, args.source_dir)
    bad = [n for n, s in status.items() if s.startswith("failed")]
    return 3 if bad else 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swmlda", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment config end to end")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("train", help="fit a model and save it")
    _add_config_flags(p)
    p.add_argument("--save", required=True, help="model file (JSON)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model")
    p.add_argument("--load", required=True, help="model file written by `train --save`")
    p.add_argument("--test", help="test split; defaults to the one in the saved config")
    p.add_argument("--format", choices=("csv", "arff"))
    p.add_argument("--label-names")
    p.add_argument("--label-xml")
    p.add_argument("--output", "-o")
    p.add_argument("--predictions", action="store_true", help="also write predictions.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("suite", help="run a list or grid of configs")
    p.add_argument("suite", help="JSON suite file")
    p.add_argument("--output", "-o", default="suite_out")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("weights", help="weight matrix utilities")
    wsub = p.add_subparsers(dest="weights_command", required=True)
    d = wsub.add_parser("dump", help="write the training weight matrix as CSV")
    _add_config_flags(d, output_help="CSV path (default weights.csv)")
    d.set_defaults(func=cmd_weights)

    p = sub.add_parser("fetch-datasets", help="download the benchmark datasets")
    p.add_argument("names", nargs="*", help="datasets to fetch (default: all)")
    p.add_argument("--data-root", help="destination (default $SWMLDA_DATA or ./datasets)")
    p.add_argument("--base-url")
    p.add_argument("--source-dir", help="copy archives from this directory instead of downloading")
    p.set_defaults(func=cmd_fetch)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SwmldaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
