"""Average of per-category accuracy (dataset-global intersection over
union)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..errors import DimensionMismatchError
from .dataset import VOID


@dataclass
class AACResult:
    names: list[str]
    accuracy: list[float | None]  # percent; None when absent from prediction and ground truth
    mean: float
    include_background: bool

    def as_dict(self) -> dict:
        return {
            "categories": [{"index": i, "name": n, "accuracy": a}
                           for i, (n, a) in enumerate(zip(self.names, self.accuracy))],
            "mean": self.mean,
            "include_background": self.include_background,
        }


def confusion(pred: np.ndarray, gt: np.ndarray, n_categories: int) -> np.ndarray:
    """``(n, n + 1)`` counts of ground truth ``c`` predicted as ``p``; the
    extra column collects predictions outside the category table.
    Void ground-truth pixels are skipped."""
    valid = gt != VOID
    g = gt[valid].astype(np.int64)
    p = pred[valid].astype(np.int64)
    p = np.where(p < n_categories, p, n_categories)
    keep = g < n_categories
    flat = np.bincount(g[keep] * (n_categories + 1) + p[keep], minlength=n_categories * (n_categories + 1))
    return flat.reshape(n_categories, n_categories + 1)


def aac(predictions: Mapping[str, np.ndarray], gts: Mapping[str, np.ndarray], names: list[str],
        include_background: bool = True) -> AACResult:
    n = len(names)
    conf = np.zeros((n, n + 1), dtype=np.int64)
    for iid, gt in gts.items():
        pred = np.asarray(predictions[iid])
        gt = np.asarray(gt)
        if pred.shape != gt.shape:
            raise DimensionMismatchError(f"image {iid}: prediction shape {pred.shape} != ground truth {gt.shape}")
        conf += confusion(pred, gt, n)
    tp = np.diag(conf[:, :n])
    fn = conf.sum(axis=1) - tp
    fp = conf[:, :n].sum(axis=0) - tp
    denom = tp + fp + fn
    acc = [100.0 * float(t) / float(d) if d else None for t, d in zip(tp, denom)]
    counted = [a for i, a in enumerate(acc) if a is not None and (include_background or i != 0)]
    mean = float(np.mean(counted)) if counted else 0.0
    return AACResult(list(names), acc, mean, include_background)
