"""Pixel-grid primitives: gray images, binary masks, exact Euclidean
distance transforms and disc dilation.

Images are 2-D ``float64`` arrays indexed ``[y, x]`` with values in [0, 1];
masks are 2-D ``bool`` arrays of the same layout. Distances are measured
between pixel centers.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DimensionMismatchError, NoSeedsError

INSIDE = "inside"
OUTSIDE = "outside"
BACKGROUND = "background"
IGNORE = "ignore"


def as_gray(values) -> np.ndarray:
    img = np.asarray(values, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"gray image must be a non-empty 2-D array, got shape {img.shape}")
    if not np.all(np.isfinite(img)) or img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("gray image values must be finite and within [0, 1]")
    return img


def as_mask(bits, shape: tuple[int, int] | None = None) -> np.ndarray:
    mask = np.asarray(bits).astype(bool, copy=False)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    if shape is not None and mask.shape != tuple(shape):
        raise DimensionMismatchError(f"mask shape {mask.shape} does not match image shape {tuple(shape)}")
    return mask


def load_gray(path) -> np.ndarray:
    """Read an 8-bit PNG (or any Pillow-readable image) as gray values/255."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    return arr / 255.0


def load_mask(path) -> np.ndarray:
    """Read a mask PNG; any nonzero pixel is a member."""
    with Image.open(path) as im:
        if im.mode in ("RGB", "RGBA"):
            im = im.convert("L")
        arr = np.asarray(im)
    return arr != 0


def save_gray(path, img: np.ndarray) -> None:
    arr = np.clip(np.rint(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(Path(path))


def save_mask(path, mask: np.ndarray) -> None:
    arr = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(Path(path))


def bounding_box(mask: np.ndarray) -> tuple[int, int, int, int] | None:
    """Return ``(x, y, w, h)`` of the mask's pixels, or None when empty."""
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return None
    x0, y0 = int(xs.min()), int(ys.min())
    return x0, y0, int(xs.max()) - x0 + 1, int(ys.max()) - y0 + 1


def _row_pass(seeds: np.ndarray, inf: int) -> np.ndarray:
    # 1-D distance (not squared) to the nearest seed along each row
    h, w = seeds.shape
    g = np.empty((h, w), dtype=np.int64)
    g[:, 0] = np.where(seeds[:, 0], 0, inf)
    for x in range(1, w):
        g[:, x] = np.where(seeds[:, x], 0, g[:, x - 1] + 1)
    for x in range(w - 2, -1, -1):
        g[:, x] = np.minimum(g[:, x], g[:, x + 1] + 1)
    return np.minimum(g, inf)


def _envelope_1d(g: list[int]) -> list[int]:
    """Lower envelope of the parabolas ``(y - i)**2 + g[i]**2`` sampled at
    every integer ``y``; all arithmetic stays in integers."""
    m = len(g)
    g2 = [v * v for v in g]
    s = [0] * m
    t = [0] * m
    q = 0
    for u in range(1, m):
        gu = g2[u]
        while q >= 0 and (t[q] - s[q]) ** 2 + g2[s[q]] > (t[q] - u) ** 2 + gu:
            q -= 1
        if q < 0:
            q = 0
            s[0] = u
        else:
            i = s[q]
            w = 1 + (u * u - i * i + gu - g2[i]) // (2 * (u - i))
            if w < m:
                q += 1
                s[q] = u
                t[q] = w
    out = [0] * m
    for u in range(m - 1, -1, -1):
        out[u] = (u - s[q]) ** 2 + g2[s[q]]
        if u == t[q]:
            q -= 1
    return out


def squared_edt_of_seeds(seeds: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distance from every pixel to the nearest
    ``True`` pixel of ``seeds``, as an ``int64`` array.

    Two separable passes: a 1-D scan along each row, then a lower-envelope
    pass down each column.
    """
    seeds = np.asarray(seeds, dtype=bool)
    if not seeds.any():
        raise NoSeedsError("distance transform has no seed pixels")
    h, w = seeds.shape
    inf = h + w
    g = _row_pass(seeds, inf)
    out = np.empty((h, w), dtype=np.int64)
    for x in range(w):
        out[:, x] = _envelope_1d(g[:, x].tolist())
    return out


def squared_edt(mask: np.ndarray, seeds: str = INSIDE, boundary: str = IGNORE) -> np.ndarray:
    """Squared-distance variant of :func:`euclidean_distance_transform`."""
    mask = as_mask(mask)
    if seeds not in (INSIDE, OUTSIDE):
        raise ValueError(f"seeds must be 'inside' or 'outside', got {seeds!r}")
    if boundary not in (BACKGROUND, IGNORE):
        raise ValueError(f"boundary must be 'background' or 'ignore', got {boundary!r}")
    seed_bits = mask if seeds == INSIDE else ~mask
    if boundary == BACKGROUND:
        # virtual ring of outside pixels one step past the image edge
        padded = np.pad(seed_bits, 1, constant_values=(seeds == OUTSIDE))
        return squared_edt_of_seeds(padded)[1:-1, 1:-1]
    return squared_edt_of_seeds(seed_bits)


def euclidean_distance_transform(mask: np.ndarray, seeds: str = INSIDE, boundary: str = IGNORE) -> np.ndarray:
    """Exact Euclidean distance from each pixel center to the nearest seed.

    Parameters
    ----------
    mask : bool array
        Binary mask, ``[y, x]`` indexed.
    seeds : {'inside', 'outside'}
        Whether mask pixels or non-mask pixels are the seeds.
    boundary : {'background', 'ignore'}
        With ``'background'`` the pixels one step outside the image count
        as non-mask pixels (seeds when ``seeds='outside'``).

    Raises
    ------
    NoSeedsError
        If the seed set is empty.
    """
    return np.sqrt(squared_edt(mask, seeds, boundary).astype(np.float64))


def dilate_disc(mask: np.ndarray, radius: float) -> np.ndarray:
    """Pixels whose distance to the mask is at most ``radius``."""
    mask = as_mask(mask)
    if radius < 0:
        raise ValueError("radius must be non-negative")
    box = bounding_box(mask)
    if box is None:
        return np.zeros_like(mask)
    # every pixel within the radius lies inside the bbox grown by the radius
    x, y, w, h = box
    r = int(math.floor(radius))
    y0, y1 = max(0, y - r), min(mask.shape[0], y + h + r)
    x0, x1 = max(0, x - r), min(mask.shape[1], x + w + r)
    d2 = squared_edt_of_seeds(mask[y0:y1, x0:x1])
    out = np.zeros_like(mask)
    out[y0:y1, x0:x1] = d2 <= radius * radius
    return out
