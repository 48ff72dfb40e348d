"""Multi-label dataset model, CSV/ARFF ingestion and z-score standardization.

Conventions: features are stored column-wise, ``X`` has shape ``(D, N)`` and
the label matrix ``Y`` has shape ``(C, N)`` with entries in {0, 1}.
"""

from __future__ import annotations

import csv
import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DimensionError, FormatError, ParseError

FEATURE_PREFIX = "f:"
LABEL_PREFIX = "l:"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MultiLabelDataset:
    """Instance matrix plus binary label matrix.

    Attributes
    ----------
    X : ndarray of shape (D, N)
        Features, one column per instance.
    Y : ndarray of shape (C, N)
        Binary labels (int8), one column per instance.
    feature_names, class_names : tuple of str
    role : {"train", "test"}
    """

    X: np.ndarray
    Y: np.ndarray
    feature_names: tuple = ()
    class_names: tuple = ()
    role: str = "train"

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y)
        if X.ndim != 2 or Y.ndim != 2:
            raise DimensionError("X and Y must be 2-D (features x instances, classes x instances)")
        if X.shape[1] != Y.shape[1]:
            raise DimensionError(
                f"X has {X.shape[1]} instances but Y has {Y.shape[1]}"
            )
        if not np.all(np.isfinite(X)):
            raise ParseError("non-finite feature value in X")
        if Y.size and not np.all((Y == 0) | (Y == 1)):
            raise ParseError("label matrix must be binary")
        if self.role not in ("train", "test"):
            raise ConfigError(f"unknown dataset role {self.role!r}")
        fnames = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[0]))
        cnames = tuple(self.class_names) or tuple(f"y{j}" for j in range(Y.shape[0]))
        if len(fnames) != X.shape[0] or len(cnames) != Y.shape[0]:
            raise DimensionError("name lists do not match matrix shapes")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "Y", _frozen(Y.astype(np.int8)))
        object.__setattr__(self, "feature_names", fnames)
        object.__setattr__(self, "class_names", cnames)

    @property
    def n_features(self) -> int:
        return self.X.shape[0]

    @property
    def n_classes(self) -> int:
        return self.Y.shape[0]

    @property
    def n_instances(self) -> int:
        return self.X.shape[1]

    @property
    def shape(self) -> tuple:
        """``(N, C, D)``."""
        return self.n_instances, self.n_classes, self.n_features

    def with_role(self, role: str) -> "MultiLabelDataset":
        return MultiLabelDataset(self.X, self.Y, self.feature_names, self.class_names, role)

    def members(self, c: int) -> np.ndarray:
        """Column indices of instances carrying label ``c``, ascending."""
        return np.flatnonzero(self.Y[c])

    def label_counts(self) -> np.ndarray:
        """``||y_i||_1`` for every instance."""
        return self.Y.sum(axis=0).astype(int)


# ---------------------------------------------------------------------------
# CSV


def load_csv(path, role: str = "train") -> MultiLabelDataset:
    """Read a dataset whose header tags columns as ``f:<name>`` or ``l:<name>``."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file, header row missing") from None
        kinds = []
        for name in header:
            name = name.strip()
            if name.startswith(FEATURE_PREFIX):
                kinds.append("f")
            elif name.startswith(LABEL_PREFIX):
                kinds.append("l")
            else:
                raise FormatError(
                    f"{path}: column {name!r} lacks an 'f:' or 'l:' prefix"
                )
        header = [h.strip() for h in header]
        fcols = [j for j, k in enumerate(kinds) if k == "f"]
        lcols = [j for j, k in enumerate(kinds) if k == "l"]
        feats, labels = [], []
        for r, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} cells, found {len(row)}", row=r
                )
            frow = []
            for j in fcols:
                try:
                    v = float(row[j])
                except ValueError:
                    raise ParseError(f"cannot parse {row[j]!r} as a real", r, header[j]) from None
                if not math.isfinite(v):
                    raise ParseError(f"non-finite feature {row[j]!r}", r, header[j])
                frow.append(v)
            lrow = []
            for j in lcols:
                cell = row[j].strip()
                if cell not in ("0", "1"):
                    raise ParseError(f"label cell {cell!r} is not 0 or 1", r, header[j])
                lrow.append(int(cell))
            feats.append(frow)
            labels.append(lrow)
    n = len(feats)
    X = np.array(feats, dtype=float).reshape(n, len(fcols)).T
    Y = np.array(labels, dtype=np.int8).reshape(n, len(lcols)).T
    return MultiLabelDataset(
        X,
        Y,
        tuple(header[j][len(FEATURE_PREFIX):] for j in fcols),
        tuple(header[j][len(LABEL_PREFIX):] for j in lcols),
        role,
    )


def write_csv(ds: MultiLabelDataset, path) -> None:
    """Write ``ds`` in the format read by :func:`load_csv`.

    Floats are written with ``repr`` so a reload is bit-exact.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([FEATURE_PREFIX + n for n in ds.feature_names]
                   + [LABEL_PREFIX + n for n in ds.class_names])
        for i in range(ds.n_instances):
            w.writerow([repr(float(v)) for v in ds.X[:, i]]
                       + [str(int(v)) for v in ds.Y[:, i]])


# ---------------------------------------------------------------------------
# MULAN ARFF

_NUMERIC_TYPES = {"numeric", "real", "integer"}


def _split_attribute(line: str, lineno: int) -> tuple[str, str]:
    rest = line[len("@attribute"):].strip()
    if rest[:1] in ("'", '"'):
        q = rest[0]
        end = rest.find(q, 1)
        while end > 0 and rest[end - 1] == "\\":
            end = rest.find(q, end + 1)
        if end < 0:
            raise FormatError(f"line {lineno}: unterminated quoted attribute name")
        name, typ = rest[1:end].replace("\\" + q, q), rest[end + 1:].strip()
    else:
        parts = rest.split(None, 1)
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: malformed @attribute declaration")
        name, typ = parts
    return name, typ


def _attribute_kind(name: str, typ: str, lineno: int) -> str:
    low = typ.lower()
    if low in _NUMERIC_TYPES:
        return "numeric"
    if typ.startswith("{") and typ.endswith("}"):
        values = [v.strip().strip("'\"") for v in typ[1:-1].split(",")]
        if sorted(values) == ["0", "1"]:
            return "binary"
        return "nominal"
    raise FormatError(f"line {lineno}: unsupported type {typ!r} for attribute {name!r}")


def read_label_xml(path) -> list[str]:
    """Label names from a MULAN label file (``<label name="..."/>`` entries only)."""
    root = ET.parse(path).getroot()
    return [el.attrib["name"] for el in root.iter()
            if el.tag.rsplit("}", 1)[-1] == "label" and "name" in el.attrib]


def _parse_cell(tok: str, lineno: int, attr: str) -> float:
    tok = tok.strip().strip("'\"")
    if tok == "?":
        raise ParseError(f"line {lineno}: missing value", column=attr)
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"line {lineno}: cannot parse {tok!r}", column=attr) from None
    if not math.isfinite(v):
        raise ParseError(f"line {lineno}: non-finite value {tok!r}", column=attr)
    return v


def load_arff(arff_path, label_names: Sequence[str], role: str = "train") -> MultiLabelDataset:
    """Read a MULAN-style ARFF file.

    Attributes listed in ``label_names`` become rows of ``Y`` (in header
    order); the rest become rows of ``X``. Both dense and sparse
    (``{idx value, ...}``) bodies are accepted.
    """
    attrs: list[tuple[str, str]] = []
    rows: list[np.ndarray] = []
    in_data = False
    with open(arff_path, encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            if not in_data:
                low = line.lower()
                if low.startswith("@relation"):
                    continue
                if low.startswith("@attribute"):
                    name, typ = _split_attribute(line, lineno)
                    attrs.append((name, _attribute_kind(name, typ, lineno)))
                elif low.startswith("@data"):
                    in_data = True
                    n_attr = len(attrs)
                else:
                    raise FormatError(f"line {lineno}: unexpected header line {line[:40]!r}")
                continue
            vec = np.zeros(n_attr)
            if line.startswith("{"):
                if not line.endswith("}"):
                    raise ParseError(f"line {lineno}: unterminated sparse row")
                body = line[1:-1].strip()
                for entry in filter(None, (e.strip() for e in body.split(","))):
                    parts = entry.split(None, 1)
                    if len(parts) != 2:
                        raise ParseError(f"line {lineno}: malformed sparse entry {entry!r}")
                    try:
                        idx = int(parts[0])
                    except ValueError:
                        raise ParseError(f"line {lineno}: bad sparse index {parts[0]!r}") from None
                    if not 0 <= idx < n_attr:
                        raise ParseError(f"line {lineno}: sparse index {idx} out of range")
                    vec[idx] = _parse_cell(parts[1], lineno, attrs[idx][0])
            else:
                cells = line.split(",")
                if len(cells) != n_attr:
                    raise ParseError(
                        f"line {lineno}: expected {n_attr} values, found {len(cells)}"
                    )
                for j, tok in enumerate(cells):
                    vec[j] = _parse_cell(tok, lineno, attrs[j][0])
            rows.append(vec)
    if not in_data:
        raise FormatError(f"{arff_path}: no @data section")

    index = {name: j for j, (name, _) in enumerate(attrs)}
    wanted = set(label_names)
    unknown = [n for n in label_names if n not in index]
    if unknown:
        raise ConfigError(f"label names not declared in {arff_path}: {unknown[:5]}")
    lab_idx = [j for j, (name, _) in enumerate(attrs) if name in wanted]
    feat_idx = [j for j, (name, _) in enumerate(attrs) if name not in wanted]
    for j in lab_idx:
        if attrs[j][1] != "binary":
            raise FormatError(f"label attribute {attrs[j][0]!r} does not have domain {{0,1}}")
    for j in feat_idx:
        if attrs[j][1] == "nominal":
            raise FormatError(f"feature attribute {attrs[j][0]!r} is nominal; only numeric or {{0,1}} supported")

    data = np.array(rows).reshape(len(rows), n_attr)
    Y = data[:, lab_idx].T
    if not np.all((Y == 0) | (Y == 1)):
        bad = np.argwhere((Y != 0) & (Y != 1))[0]
        raise ParseError(f"non-binary label value {Y[tuple(bad)]!r}",
                         row=int(bad[1]), column=attrs[lab_idx[bad[0]]][0])
    return MultiLabelDataset(
        data[:, feat_idx].T,
        Y.astype(np.int8),
        tuple(attrs[j][0] for j in feat_idx),
        tuple(attrs[j][0] for j in lab_idx),
        role,
    )


# ---------------------------------------------------------------------------
# Standardization


@dataclass(frozen=True)
class StandardizationStats:
    mean: np.ndarray
    scale: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen(np.asarray(self.mean, float)))
        object.__setattr__(self, "scale", _frozen(np.asarray(self.scale, float)))
        if np.any(self.scale <= 0):
            raise ConfigError("standardization scale entries must be positive")


def fit_standardizer(train: MultiLabelDataset) -> StandardizationStats:
    if train.n_instances < 1:
        raise DimensionError("cannot standardize an empty dataset")
    mean = train.X.mean(axis=1)
    std = train.X.std(axis=1)
    # constant columns detected by range, not by std (std of a constant can round to 1e-17)
    constant = np.ptp(train.X, axis=1) == 0
    scale = np.where(constant | (std == 0), 1.0, std)
    return StandardizationStats(mean, scale)


def apply_standardizer(ds: MultiLabelDataset, stats: StandardizationStats) -> MultiLabelDataset:
    if stats.mean.shape[0] != ds.n_features:
        raise DimensionError(
            f"standardizer fit on {stats.mean.shape[0]} features, dataset has {ds.n_features}"
        )
    X = (ds.X - stats.mean[:, None]) / stats.scale[:, None]
    return MultiLabelDataset(X, ds.Y, ds.feature_names, ds.class_names, ds.role)


_NAME_RE = re.compile(r"[^A-Za-z0-9_.-]+")


def safe_name(name: str) -> str:
    return _NAME_RE.sub("_", name).strip("_") or "dataset"
