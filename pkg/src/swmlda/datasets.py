"""Registry of the benchmark datasets, on-disk lookup and the download helper.

Expected layout under the data root (``$SWMLDA_DATA`` or ``./datasets``)::

    <root>/<name>/<stem>-train.arff
    <root>/<name>/<stem>-test.arff
    <root>/<name>/<stem>.xml
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import subprocess
import tempfile
import urllib.request
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .data import MultiLabelDataset, load_arff, load_csv, read_label_xml
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    stem: str
    archive: str | None
    sha256: str | None
    n_train: int
    n_test: int
    n_classes: int
    n_features: int
    large: bool


def _manifest() -> dict:
    return json.loads(resources.files("swmlda").joinpath("datasets.json").read_text())


def registry() -> dict[str, DatasetInfo]:
    out = {}
    for name, e in _manifest()["datasets"].items():
        out[name] = DatasetInfo(name, e["stem"], e["archive"], e["sha256"], *e["table"], e["large"])
    return out


def lookup(name: str) -> DatasetInfo:
    reg = registry()
    key = name.lower()
    if key not in reg:
        raise ConfigError(f"unknown dataset {name!r}; known: {sorted(reg)}")
    return reg[key]


def data_root(root=None) -> Path:
    return Path(root or os.environ.get("SWMLDA_DATA") or "datasets")


def _find(folder: Path, filename: str) -> Path | None:
    if not folder.is_dir():
        return None
    want = filename.lower()
    for p in folder.rglob("*"):
        if p.name.lower() == want:
            return p
    return None


def dataset_files(name: str, root=None) -> tuple[Path, Path, Path]:
    """Paths of (train ARFF, test ARFF, label XML); raises DataError if absent."""
    info = lookup(name)
    folder = data_root(root) / info.name
    paths = [_find(folder, f"{info.stem}-{part}.arff") for part in ("train", "test")]
    paths.append(_find(folder, f"{info.stem}.xml"))
    if any(p is None for p in paths):
        raise DataError(
            f"dataset {info.name!r} not found under {folder}; run `swmlda fetch-datasets` "
            f"or place {info.stem}-train.arff, {info.stem}-test.arff and {info.stem}.xml there"
        )
    return tuple(paths)


def is_available(name: str, root=None) -> bool:
    try:
        dataset_files(name, root)
    except DataError:
        return False
    return True


def load_split(cfg, root=None) -> tuple[MultiLabelDataset, MultiLabelDataset]:
    """Load (train, test) for a :class:`~swmlda.config.DatasetConfig`."""
    if cfg.train_path:
        train_path, test_path = Path(cfg.train_path), Path(cfg.test_path)
        xml = Path(cfg.label_xml) if cfg.label_xml else None
        fmt = cfg.format
    else:
        train_path, test_path, xml = dataset_files(cfg.name, cfg.root or root)
        fmt = "arff"
    for p in (train_path, test_path):
        if not p.is_file():
            raise DataError(f"dataset file not found: {p}")
    if fmt == "csv":
        return load_csv(train_path, "train"), load_csv(test_path, "test")
    names = list(cfg.label_names) if cfg.label_names else None
    if names is None:
        if xml is None:
            raise ConfigError("ARFF dataset needs label_names or label_xml")
        names = read_label_xml(xml)
    return load_arff(train_path, names, "train"), load_arff(test_path, names, "test")


# ---------------------------------------------------------------------------
# download helper


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _extract(archive: Path, dest: Path) -> None:
    if archive.suffix.lower() == ".rar":
        for tool, args in (("bsdtar", ["-xf", str(archive), "-C", str(dest)]),
                           ("unrar", ["x", "-o+", str(archive), str(dest) + os.sep]),
                           ("7z", ["x", "-y", f"-o{dest}", str(archive)])):
            if shutil.which(tool):
                subprocess.run([tool, *args], check=True, capture_output=True)
                return
        raise DataError(f"cannot extract {archive.name}: install bsdtar, unrar or 7z")
    shutil.unpack_archive(str(archive), str(dest))


def fetch(names=None, root=None, base_url: str | None = None, source_dir=None, log=print) -> dict:
    """Download (or copy from ``source_dir``) and unpack registry datasets.

    Returns ``{name: status}``. Datasets without a public archive are
    reported as ``manual`` and must be placed in the data root by hand.
    """
    manifest = _manifest()
    base_url = (base_url or manifest["base_url"]).rstrip("/")
    root = data_root(root)
    status = {}
    for info in (lookup(n) for n in (names or registry())):
        if is_available(info.name, root):
            status[info.name] = "present"
            continue
        if not info.archive:
            status[info.name] = "manual"
            log(f"{info.name}: no public archive registered; place the files under {root / info.name}")
            continue
        folder = root / info.name
        folder.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryDirectory() as tmp:
            target = Path(tmp) / info.archive
            try:
                if source_dir:
                    shutil.copy(Path(source_dir) / info.archive, target)
                else:
                    url = f"{base_url}/{info.archive}/download"
                    log(f"{info.name}: downloading {url}")
                    with urllib.request.urlopen(url, timeout=60) as resp, open(target, "wb") as out:
                        shutil.copyfileobj(resp, out)
            except OSError as exc:
                status[info.name] = f"failed: {exc}"
                log(f"{info.name}: {status[info.name]}")
                continue
            digest = _sha256(target)
            if info.sha256 and digest != info.sha256:
                status[info.name] = "failed: checksum mismatch"
                log(f"{info.name}: checksum mismatch ({digest})")
                continue
            if not info.sha256:
                log(f"{info.name}: no pinned checksum; sha256={digest}")
            _extract(target, folder)
        status[info.name] = "fetched" if is_available(info.name, root) else "failed: files missing after extraction"
        log(f"{info.name}: {status[info.name]}")
    return status
