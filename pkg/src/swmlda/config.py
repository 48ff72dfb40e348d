"""Experiment configuration: JSON document <-> dataclass, strict about keys."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError
from .projection import PAIRS

SWMLDA_METHODS = tuple(f"swmlda_{f}" for f in "mcbefd")
WMLDA_METHODS = tuple(f"wmlda_{f}" for f in "cbefd")
# column order of the published result tables
METHODS = WMLDA_METHODS + SWMLDA_METHODS

BASELINE_FORM = {
    "wmlda_b": "binary",
    "wmlda_c": "correlation",
    "wmlda_e": "entropy",
    "wmlda_f": "fuzzy",
    "wmlda_d": "dependence",
}


def method_kind(method: str) -> tuple[str, str]:
    """``("saliency", prior letter)`` or ``("baseline", weight form)``."""
    if method in SWMLDA_METHODS:
        return "saliency", method[-1]
    if method in BASELINE_FORM:
        return "baseline", BASELINE_FORM[method]
    raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")


@dataclass
class DatasetConfig:
    name: str | None = None
    train_path: str | None = None
    test_path: str | None = None
    format: str = "arff"
    label_names: list | None = None
    label_xml: str | None = None
    root: str | None = None

    def validate(self):
        if self.format not in ("csv", "arff"):
            raise ConfigError(f"dataset.format must be 'csv' or 'arff', got {self.format!r}")
        if not self.name and not (self.train_path and self.test_path):
            raise ConfigError("dataset needs either a registry name or train_path and test_path")
        if self.train_path and self.format == "arff" and not (self.label_names or self.label_xml or self.name):
            raise ConfigError("ARFF datasets need label_names or label_xml")

    @property
    def display_name(self) -> str:
        if self.name:
            return self.name
        return Path(self.train_path).stem.replace("-train", "").replace("_train", "")


@dataclass
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    method: str = "swmlda_b"
    sigma: float = 1.0
    sigma_median: bool = False
    epsilon: float = 1e-6
    binary_prior: float = 1.0
    energy: float = 0.999
    ridge: float | None = None
    pair: str = "b_over_t"
    k: int = 15
    smoothing: float = 1.0
    threshold: float = 0.5
    standardize: bool = True
    affinity_squared: bool = False
    fuzzy_max_iters: int = 100
    fuzzy_tol: float = 1e-6
    hsic_max_sweeps: int = 50
    seed: int = 0
    workers: int = 1
    figures: bool = True
    output_path: str | None = None

    def validate(self) -> "ExperimentConfig":
        self.dataset.validate()
        method_kind(self.method)
        if self.pair not in PAIRS:
            raise ConfigError(f"pair must be one of {PAIRS}")
        checks = [
            (self.sigma > 0, "sigma must be > 0"),
            (self.epsilon >= 0, "epsilon must be >= 0"),
            (self.binary_prior >= 0, "binary_prior must be >= 0"),
            (0 < self.energy <= 1, "energy must lie in (0, 1]"),
            (self.ridge is None or self.ridge >= 0, "ridge must be >= 0"),
            (isinstance(self.k, int) and self.k >= 1, "k must be a positive integer"),
            (self.smoothing > 0, "smoothing must be > 0"),
            (0 <= self.threshold <= 1, "threshold must lie in [0, 1]"),
            (self.fuzzy_max_iters >= 1, "fuzzy.max_iters must be >= 1"),
            (self.fuzzy_tol > 0, "fuzzy.tol must be > 0"),
            (self.hsic_max_sweeps >= 1, "hsic.max_sweeps must be >= 1"),
            (self.workers >= 1, "workers must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        out = {
            "dataset": {k: v for k, v in d.pop("dataset").items()},
            "fuzzy": {"max_iters": d.pop("fuzzy_max_iters"), "tol": d.pop("fuzzy_tol")},
            "hsic": {"max_sweeps": d.pop("hsic_max_sweeps")},
            "affinity": {"squared": d.pop("affinity_squared")},
        }
        sigma_median = d.pop("sigma_median")
        out.update(d)
        if sigma_median:
            out["sigma"] = "median"
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("experiment config must be a JSON object")
        d = dict(d)
        flat: dict = {}
        groups = {
            "fuzzy": {"max_iters": "fuzzy_max_iters", "tol": "fuzzy_tol"},
            "hsic": {"max_sweeps": "hsic_max_sweeps"},
            "affinity": {"squared": "affinity_squared"},
        }
        for g, mapping in groups.items():
            sub = d.pop(g, None)
            if sub is None:
                continue
            if not isinstance(sub, dict):
                raise ConfigError(f"{g!r} must be an object")
            for k, v in sub.items():
                if k not in mapping:
                    raise ConfigError(f"unknown key {g}.{k}")
                flat[mapping[k]] = v
        ds = d.pop("dataset", {})
        if not isinstance(ds, dict):
            raise ConfigError("'dataset' must be an object")
        ds_keys = {f.name for f in fields(DatasetConfig)}
        bad = set(ds) - ds_keys
        if bad:
            raise ConfigError(f"unknown dataset keys: {sorted(bad)}")
        top = {f.name for f in fields(cls)} - {"dataset", "fuzzy_max_iters", "fuzzy_tol",
                                                  "hsic_max_sweeps", "affinity_squared"}
        bad = set(d) - top
        if bad:
            raise ConfigError(f"unknown config keys: {sorted(bad)}")
        flat.update(d)
        if flat.get("sigma") == "median":
            flat["sigma"] = 1.0
            flat["sigma_median"] = True
        try:
            cfg = cls(dataset=DatasetConfig(**ds), **flat)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        for name, typ in (("sigma", float), ("epsilon", float), ("binary_prior", float),
                          ("energy", float), ("smoothing", float), ("threshold", float),
                          ("fuzzy_tol", float)):
            v = getattr(cfg, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{name} must be a number, got {v!r}")
            setattr(cfg, name, typ(v))
        if cfg.ridge is not None:
            if isinstance(cfg.ridge, bool) or not isinstance(cfg.ridge, (int, float)):
                raise ConfigError(f"ridge must be a number or null, got {cfg.ridge!r}")
            cfg.ridge = float(cfg.ridge)
        for name in ("k", "fuzzy_max_iters", "hsic_max_sweeps", "seed", "workers"):
            v = getattr(cfg, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        for name in ("standardize", "affinity_squared", "sigma_median", "figures"):
            if not isinstance(getattr(cfg, name), bool):
                raise ConfigError(f"{name} must be true or false")
        return cfg.validate()

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None

    def with_overrides(self, **kw) -> "ExperimentConfig":
        ds_kw = {k[len("dataset_"):]: v for k, v in kw.items() if k.startswith("dataset_")}
        top = {k: v for k, v in kw.items() if not k.startswith("dataset_")}
        new = replace(self, dataset=replace(self.dataset, **ds_kw), **top)
        return new.validate()


def expand_suite(doc) -> list[dict]:
    """Raw per-cell config dicts from a suite document.

    Suite documents are either a list of configs or a grid
    ``{"base": {...}, "datasets": [...], "methods": [...]}``. Cells are
    parsed later, one at a time, so one broken cell does not sink the suite.
    """
    if isinstance(doc, list):
        return list(doc)
    if not isinstance(doc, dict):
        raise ConfigError("suite must be a list of configs or a grid object")
    bad = set(doc) - {"base", "datasets", "methods"}
    if bad:
        raise ConfigError(f"unknown suite keys: {sorted(bad)}")
    base = doc.get("base", {})
    datasets = doc.get("datasets") or [base.get("dataset", {})]
    methods = doc.get("methods") or [base.get("method", "swmlda_b")]
    out = []
    for ds in datasets:
        for m in methods:
            d = json.loads(json.dumps(base))
            d["dataset"] = ds
            d["method"] = m
            out.append(d)
    return out
