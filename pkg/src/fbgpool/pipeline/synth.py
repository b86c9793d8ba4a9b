"""Synthetic two-class benchmark whose classes differ only around (halo
variant) or inside (radial variant) the object."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .. import raster
from .dataset import DatasetManifest, ImageEntry, save_labelmap, write_manifest

CATEGORIES = ["background", "class_a", "class_b"]
HALO, RADIAL = "halo", "radial"
HALO_WIDTH = 5.0
IMAGE_SIZE = 96
HALO_CONTRAST = 0.04


def ellipse_mask(shape, cx, cy, a, b, theta) -> np.ndarray:
    yy, xx = np.indices(shape, dtype=np.float64)
    dx, dy = xx - cx, yy - cy
    c, s = np.cos(theta), np.sin(theta)
    u = (c * dx + s * dy) / a
    v = (-s * dx + c * dy) / b
    return u * u + v * v <= 1.0


def _interior_texture(rng, shape) -> np.ndarray:
    # class-independent: random gratings plus noise
    yy, xx = np.indices(shape, dtype=np.float64)
    tex = np.full(shape, rng.uniform(0.35, 0.65))
    for _ in range(2):
        ang = rng.uniform(0, np.pi)
        period = rng.uniform(4.0, 10.0)
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.uniform(0.15, 0.35)
        tex += amp * np.sin(2 * np.pi * (np.cos(ang) * xx + np.sin(ang) * yy) / period + phase)
    return tex + rng.normal(0.0, 0.04, shape)


def _radial_texture(rng, shape, label, cx, cy) -> np.ndarray:
    yy, xx = np.indices(shape, dtype=np.float64)
    r = np.hypot(xx - cx, yy - cy)
    phi = np.arctan2(yy - cy, xx - cx)
    amp = rng.uniform(0.15, 0.25)
    phase = rng.uniform(0, 2 * np.pi)
    base = rng.uniform(0.35, 0.65)
    if label == 1:
        pattern = np.sin(8 * phi + phase)  # spokes
    else:
        pattern = np.sin(2 * np.pi * r / 6.0 + phase)  # rings
    return base + amp * pattern + rng.normal(0.0, 0.04, shape)


def _halo_texture(rng, shape, label) -> np.ndarray:
    yy, xx = np.indices(shape, dtype=np.float64)
    coord = yy if label == 1 else xx  # class_a: horizontal stripes, class_b: vertical
    phase = rng.uniform(0, 2 * np.pi)
    return 0.5 + HALO_CONTRAST * np.sin(2 * np.pi * coord / 4.0 + phase) + rng.normal(0.0, 0.04, shape)


def render_sample(rng, label: int, variant: str = HALO, size: int = IMAGE_SIZE):
    """One image, its object mask and two perturbed candidate masks."""
    shape = (size, size)
    a, b = rng.uniform(14.0, 24.0, 2)
    theta = rng.uniform(0, np.pi)
    margin = max(a, b) + HALO_WIDTH + 2
    cx, cy = rng.uniform(margin, size - 1 - margin, 2)
    obj = ellipse_mask(shape, cx, cy, a, b, theta)

    img = 0.5 + 0.06 * rng.standard_normal(shape)
    ring = raster.dilate_disc(obj, HALO_WIDTH) & ~obj
    if variant == HALO:
        img[ring] = _halo_texture(rng, shape, label)[ring]
        img[obj] = _interior_texture(rng, shape)[obj]
    elif variant == RADIAL:
        img[obj] = _radial_texture(rng, shape, label, cx, cy)[obj]
    else:
        raise ValueError(f"unknown synthetic variant {variant!r}")
    img = np.clip(img, 0.0, 1.0)

    shift = rng.uniform(4.0, 8.0) * np.array([np.cos(t := rng.uniform(0, 2 * np.pi)), np.sin(t)])
    shifted = ellipse_mask(shape, cx + shift[0], cy + shift[1], a, b, theta)
    k = rng.choice([rng.uniform(0.6, 0.8), rng.uniform(1.15, 1.3)])
    scaled = ellipse_mask(shape, cx, cy, a * k, b * k, theta)
    return img, obj, [obj, shifted, scaled]


def synth_border_benchmark(out_dir, seed: int = 1, n_train: int = 200, n_test: int = 100,
                           variant: str = HALO, size: int = IMAGE_SIZE) -> DatasetManifest:
    """Write a deterministic benchmark under ``out_dir`` and return its
    manifest (also saved as ``out_dir/manifest.json``).

    Each image holds one ellipse of class_a or class_b. In the ``halo``
    variant both classes share the interior texture distribution and
    differ only in the stripe orientation of a 5-pixel exterior ring; in
    the ``radial`` variant they differ in the interior pattern (spokes vs
    concentric rings). Candidates are the true mask plus a shifted and a
    rescaled copy, ranked in random order.
    """
    if n_train < 1 or n_test < 1:
        raise ValueError("n_train and n_test must be >= 1")
    out = Path(out_dir).resolve()
    for sub in ("images", "labels", "candidates"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    images, splits = {}, {"train": [], "test": []}
    for split, count in (("train", n_train), ("test", n_test)):
        for i in range(count):
            iid = f"{split}_{i:04d}"
            label = 1 + i % 2
            img, obj, cands = render_sample(rng, label, variant, size)
            raster.save_gray(out / "images" / f"{iid}.png", img)
            save_labelmap(out / "labels" / f"{iid}.png", np.where(obj, label, 0))
            cdir = out / "candidates" / iid
            cdir.mkdir(exist_ok=True)
            names = ["true", "shift", "scale"]
            for name, m in zip(names, cands):
                raster.save_mask(cdir / f"{name}.png", m)
            order = rng.permutation(len(names))
            (cdir / "ranking.txt").write_text("".join(f"{names[j]}\n" for j in order))
            images[iid] = ImageEntry(iid, out / "images" / f"{iid}.png", out / "labels" / f"{iid}.png",
                                     cdir, cdir / "ranking.txt")
            splits[split].append(iid)
    manifest = DatasetManifest(out, list(CATEGORIES), splits, images)
    manifest.path = write_manifest(out / "manifest.json", manifest)
    return manifest
