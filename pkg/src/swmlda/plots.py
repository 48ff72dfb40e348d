"""Report figures written next to the CSV/JSON outputs."""

from __future__ import annotations

import contextlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "figure.dpi": 110,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "svg.hashsalt": "swmlda",
}


@contextlib.contextmanager
def report_style():
    with plt.rc_context(RC):
        yield


def _save(fig, path):
    fig.tight_layout()
    # fixed metadata keeps repeated runs byte-stable
    fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)
    return path


def plot_spectrum(projection, path, title=None):
    """Generalized eigenvalues with cumulative energy and the chosen dimension."""
    lam = projection.spectrum if projection.spectrum is not None else projection.eigenvalues
    lam = np.clip(np.asarray(lam, float), 0, None)
    lam = lam[lam > 0] if np.any(lam > 0) else lam[:1]
    shown = lam[: min(lam.size, 60)]
    with report_style():
        fig, ax = plt.subplots(figsize=(5.0, 3.0))
        x = np.arange(1, shown.size + 1)
        ax.bar(x, shown, color="0.55", width=0.8, label="eigenvalue")
        ax.axvline(projection.d + 0.5, color="C3", lw=1, ls="--", label=f"d = {projection.d}")
        ax.set_xlabel("component")
        ax.set_ylabel("generalized eigenvalue")
        ax2 = ax.twinx()
        ax2.plot(x, np.cumsum(shown) / lam.sum(), color="C0", marker=".", lw=1)
        ax2.axhline(projection.energy_threshold, color="C0", lw=0.6, ls=":")
        ax2.set_ylim(0, 1.02)
        ax2.set_ylabel("cumulative energy")
        ax.legend(loc="center right")
        ax.set_title(title or f"discriminant spectrum ({projection.pair})")
        return _save(fig, path)


def plot_weight_profiles(P, Y, class_names, path, title=None):
    """Sorted per-class weights, scaled so a uniform class reads 1."""
    P = np.asarray(P, float)
    Y = np.asarray(Y)
    with report_style():
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        for c in range(P.shape[0]):
            idx = np.flatnonzero(Y[c])
            if idx.size == 0:
                continue
            w = np.sort(P[c, idx])[::-1] * idx.size
            ax.plot(np.linspace(0, 1, idx.size), w, lw=1, label=str(class_names[c]))
        ax.axhline(1.0, color="k", lw=0.6, ls=":")
        ax.set_xlabel("member rank (fraction of class)")
        ax.set_ylabel("weight x class size")
        if P.shape[0] <= 14:
            ax.legend(fontsize=6, ncol=2)
        ax.set_title(title or "saliency weight profiles")
        return _save(fig, path)


def plot_metric_grid(table, metric, path, lower_is_better=True):
    """Heatmap of one metric over datasets (rows) and methods (columns).

    ``table`` maps ``dataset -> {method: value or None}``.
    """
    datasets = list(table)
    methods = sorted({m for row in table.values() for m in row},
                     key=lambda m: (m.startswith("swmlda"), m))
    grid = np.full((len(datasets), len(methods)), np.nan)
    for i, ds in enumerate(datasets):
        for j, m in enumerate(methods):
            v = table[ds].get(m)
            if v is not None:
                grid[i, j] = v
    with report_style():
        fig, ax = plt.subplots(figsize=(1.0 + 0.7 * len(methods), 0.9 + 0.45 * len(datasets)))
        cmap = "viridis_r" if lower_is_better else "viridis"
        im = ax.imshow(grid, cmap=cmap, aspect="auto")
        for i in range(grid.shape[0]):
            for j in range(grid.shape[1]):
                txt = "FAIL" if np.isnan(grid[i, j]) else f"{grid[i, j]:.3f}"
                ax.text(j, i, txt, ha="center", va="center", fontsize=6, color="w")
        ax.set_xticks(range(len(methods)), methods, rotation=45, ha="right")
        ax.set_yticks(range(len(datasets)), datasets)
        fig.colorbar(im, ax=ax, shrink=0.8)
        ax.set_title(metric)
        return _save(fig, path)
