"""End-to-end train/evaluate runs and their reports."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import raster
from ..errors import EmptySplitError, FbgError
from ..model import LinearModel, default_lambda, score, train_ridge
from .dataset import DatasetManifest, ImageEntry, load_labelmap
from .features import FeatureConfig, ImageDescriptors, candidate_feature
from .inference import DEFAULT_TAU, candidate_targets, infer_labeling
from .metrics import aac

log = logging.getLogger(__name__)


@dataclass
class ImageFeatures:
    id: str
    shape: tuple[int, int]
    masks: list[np.ndarray]
    ranks: list[int]
    features: np.ndarray  # (n_candidates, feature_dim)
    targets: np.ndarray  # (n_candidates, n_foreground)


def image_features(entry: ImageEntry, manifest: DatasetManifest, cfg: FeatureConfig) -> ImageFeatures:
    """Features and overlap targets for every candidate of one image."""
    try:
        img = raster.load_gray(entry.image)
        gt = load_labelmap(entry.labels)
        if gt.shape != img.shape:
            raise FbgError(f"label map shape {gt.shape} != image shape {img.shape}")
        cache = ImageDescriptors(img, cfg.grid)
        fg = list(range(1, manifest.n_categories))
        masks, ranks, feats, targets = [], [], [], []
        for cand in manifest.candidates(entry):
            mask = raster.as_mask(cand.load(), img.shape)
            if not mask.any():
                log.warning("image %s: skipping empty candidate %s", entry.id, cand.id)
                continue
            try:
                feats.append(candidate_feature(cache, mask, cfg))
            except FbgError as exc:
                raise FbgError(f"candidate {cand.id}: {exc}") from exc
            masks.append(mask)
            ranks.append(cand.rank)
            targets.append(candidate_targets(mask, gt, fg))
    except FbgError as exc:
        raise FbgError(f"image {entry.id}: {exc}") from exc
    dim = cfg.feature_dim()
    return ImageFeatures(
        entry.id, img.shape, masks, ranks,
        np.vstack(feats) if feats else np.zeros((0, dim)),
        np.vstack(targets) if targets else np.zeros((0, len(fg))))


def _job(args):
    return image_features(*args)


def collect_features(entries: list[ImageEntry], manifest: DatasetManifest, cfg: FeatureConfig,
                     jobs: int = 1) -> list[ImageFeatures]:
    """Per-image features in manifest order regardless of ``jobs``."""
    work = [(e, manifest, cfg) for e in entries]
    if jobs <= 1 or len(work) <= 1:
        return [_job(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_job, work, chunksize=max(1, len(work) // (4 * jobs))))


def default_jobs() -> int:
    return os.cpu_count() or 1


def train_model(per_image: list[ImageFeatures], manifest: DatasetManifest, cfg: FeatureConfig,
                lam: float | None = None) -> LinearModel:
    x = np.vstack([f.features for f in per_image])
    t = np.vstack([f.targets for f in per_image])
    if x.shape[0] == 0:
        raise EmptySplitError("training split has no candidates")
    lam = default_lambda(x.shape[0]) if lam is None else lam
    return train_ridge(x, t, lam, manifest.categories[1:], digest=cfg.digest())


def predict_labelings(model: LinearModel, per_image: list[ImageFeatures], cfg: FeatureConfig,
                      tau: float = DEFAULT_TAU) -> dict[str, np.ndarray]:
    out = {}
    for f in per_image:
        s = score(model, f.features, digest=cfg.digest()) if len(f.masks) else np.zeros((0, len(model.categories)))
        out[f.id] = infer_labeling(f.masks, s, f.ranks, f.shape, tau)
    return out


def resolve_eval_split(manifest: DatasetManifest, eval_split: str | None) -> str:
    if eval_split is not None:
        if not manifest.splits.get(eval_split):
            raise EmptySplitError(f"evaluation split {eval_split!r} is empty")
        return eval_split
    for name in ("val", "test"):
        if manifest.splits.get(name):
            return name
    raise EmptySplitError("manifest has no non-empty 'val' or 'test' split to evaluate on")


def run_experiment(manifest: DatasetManifest, cfg: FeatureConfig, lam: float | None = None,
                   tau: float = DEFAULT_TAU, jobs: int = 1, eval_split: str | None = None,
                   train_split: str = "train", include_background: bool = True) -> dict:
    """Extract, pool, train on ``train_split``, then label and score the
    evaluation split. Returns the report as a JSON-ready dict."""
    split = resolve_eval_split(manifest, eval_split)
    train_entries = manifest.split(train_split)
    if not train_entries:
        raise EmptySplitError(f"training split {train_split!r} is empty")
    train_feats = collect_features(train_entries, manifest, cfg, jobs)
    model = train_model(train_feats, manifest, cfg, lam)
    if split == train_split:
        eval_feats = train_feats
    else:
        eval_feats = collect_features(manifest.split(split), manifest, cfg, jobs)
    preds = predict_labelings(model, eval_feats, cfg, tau)
    gts = {e.id: load_labelmap(e.labels) for e in manifest.split(split)}
    result = aac(preds, gts, manifest.categories, include_background)
    return {
        "config": {
            **cfg.to_dict(),
            "lambda": model.lam,
            "tau": tau,
            "train_split": train_split,
            "eval_split": split,
            "include_background": include_background,
            "digest": cfg.digest(),
        },
        "n_train_images": len(train_entries),
        "n_train_candidates": int(sum(len(f.masks) for f in train_feats)),
        "n_eval_images": len(eval_feats),
        **result.as_dict(),
    }


def format_table(report: dict) -> str:
    """Aligned plain-text table: one row per category then the mean."""
    rows = [(c["name"], "-" if c["accuracy"] is None else f"{c['accuracy']:.2f}") for c in report["categories"]]
    rows.append(("mean", f"{report['mean']:.2f}"))
    width = max(len("category"), *(len(r[0]) for r in rows))
    lines = [f"{'category':<{width}}  accuracy", f"{'-' * width}  --------"]
    lines += [f"{name:<{width}}  {acc:>8}" for name, acc in rows]
    lines.append("")
    lines.append("config: " + ", ".join(f"{k}={v}" for k, v in report["config"].items() if k != "digest"))
    return "\n".join(lines) + "\n"


def format_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "category", "accuracy"])
    for c in report["categories"]:
        w.writerow([c["index"], c["name"], "" if c["accuracy"] is None else repr(c["accuracy"])])
    w.writerow(["", "mean", repr(report["mean"])])
    return buf.getvalue()


def write_report(report: dict, out, figure: bool = True) -> dict[str, Path]:
    """Write ``<out>.json``, ``.txt`` and ``.csv`` (and a bar chart
    ``.png`` when ``figure``); returns the written paths."""
    out = Path(out)
    base = out.with_suffix("") if out.suffix == ".json" else out
    base.parent.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": base.with_suffix(".json"),
        "txt": base.with_suffix(".txt"),
        "csv": base.with_suffix(".csv"),
    }
    paths["json"].write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    paths["txt"].write_text(format_table(report))
    paths["csv"].write_text(format_csv(report))
    if figure:
        from ..plotting import plot_report

        paths["png"] = plot_report(report, base.with_suffix(".png"))
    return paths
