"""Overlap targets and greedy candidate pasting."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import DimensionMismatchError
from .dataset import VOID

DEFAULT_TAU = 0.3
MIN_FREE_FRACTION = 0.5


def candidate_targets(mask: np.ndarray, gt: np.ndarray, categories: Sequence[int]) -> np.ndarray:
    """IoU of ``mask`` with the ground-truth support of each category,
    void pixels excluded from both intersection and union."""
    mask = np.asarray(mask, dtype=bool)
    gt = np.asarray(gt)
    if mask.shape != gt.shape:
        raise DimensionMismatchError(f"mask shape {mask.shape} != label map shape {gt.shape}")
    valid = gt != VOID
    m = mask & valid
    out = np.zeros(len(categories))
    for j, c in enumerate(categories):
        g = gt == c
        union = np.count_nonzero(m | g)
        if union:
            out[j] = np.count_nonzero(m & g) / union
    return out


def infer_labeling(masks: Sequence[np.ndarray], scores: np.ndarray, ranks: Sequence[int],
                   shape: tuple[int, int], tau: float = DEFAULT_TAU,
                   categories: Sequence[int] | None = None) -> np.ndarray:
    """Paint candidates greedily into a label map.

    ``scores[i, j]`` scores candidate ``i`` as category ``categories[j]``
    (default ``1..k``). Pairs are visited by descending score, ties by
    rank then category index; a pair is accepted when its score reaches
    ``tau`` and at least half of the candidate is still unlabeled. The
    accepted candidate paints only its unlabeled pixels; the rest of the
    image stays background (0).
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(len(masks), -1)
    if categories is None:
        categories = range(1, scores.shape[1] + 1)
    categories = list(categories)
    out = np.zeros(shape, dtype=np.uint8)
    labeled = np.zeros(shape, dtype=bool)
    pairs = [(-scores[i, j], ranks[i], categories[j], i)
             for i in range(len(masks)) for j in range(len(categories)) if scores[i, j] >= tau]
    pairs.sort()
    for _, _, cat, i in pairs:
        m = np.asarray(masks[i], dtype=bool)
        size = np.count_nonzero(m)
        if size == 0:
            continue
        free = m & ~labeled
        if np.count_nonzero(free) >= MIN_FREE_FRACTION * size:
            out[free] = cat
            labeled |= m
    return out
