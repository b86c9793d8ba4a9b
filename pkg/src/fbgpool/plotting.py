"""Figures rendered to files: report bar charts and partition overlays."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402

from .partition import PALETTE, RegionPartition, partition_indices  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
}

# fixed metadata keeps the PNG bytes independent of the matplotlib build
_PNG_META = {"Software": None}


def plot_report(report: dict, path) -> Path:
    """Horizontal bar chart of per-category accuracy with the mean marked."""
    path = Path(path)
    cats = report["categories"]
    names = [c["name"] for c in cats]
    acc = [np.nan if c["accuracy"] is None else c["accuracy"] for c in cats]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 0.35 * len(cats) + 1.2))
        y = np.arange(len(cats))
        ax.barh(y, acc, color="#4c72b0")
        ax.axvline(report["mean"], color="#c44e52", lw=1.2, ls="--", label=f"mean {report['mean']:.2f}")
        ax.set_yticks(y, names)
        ax.invert_yaxis()
        ax.set_xlim(0, 100)
        ax.set_xlabel("accuracy (IoU, %)")
        ax.legend(loc="lower right", frameon=False)
        blocks = ", ".join(report["config"].get("blocks", []))
        ax.set_title(blocks or "report")
        fig.tight_layout()
        fig.savefig(path, metadata=_PNG_META)
        plt.close(fig)
    return path


def partition_cmap(n_cells: int) -> ListedColormap:
    colors = [tuple(c / 255 for c in rgb) for rgb in PALETTE[:2 + n_cells]]
    return ListedColormap(colors)


def plot_partition(img: np.ndarray, parts: list[tuple[str, RegionPartition]], path) -> Path:
    """Original image followed by one panel per partition."""
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 1 + len(parts), figsize=(2.6 * (1 + len(parts)), 2.8))
        axes = np.atleast_1d(axes)
        axes[0].imshow(img, cmap="gray", vmin=0, vmax=1, interpolation="nearest")
        axes[0].set_title("image")
        for ax, (title, part) in zip(axes[1:], parts):
            idx = partition_indices(part)
            cmap = partition_cmap(part.n_cells)
            ax.imshow(idx, cmap=cmap, vmin=-0.5, vmax=1.5 + part.n_cells, interpolation="nearest")
            ax.set_title(title)
        for ax in axes:
            ax.set_axis_off()
        fig.tight_layout()
        fig.savefig(path, metadata=_PNG_META)
        plt.close(fig)
    return path
