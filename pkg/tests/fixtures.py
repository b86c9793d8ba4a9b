"""Small on-disk datasets shared by the pipeline and CLI tests."""
import json

import numpy as np
from PIL import Image

from fbgpool import raster
from fbgpool.pipeline.dataset import MANIFEST_SCHEMA, save_labelmap


def square_mask(shape, y0, y1, x0, x1):
    m = np.zeros(shape, bool)
    m[y0:y1, x0:x1] = True
    return m


def write_tiny_dataset(root, n_images=2, size=48, categories=("background", "a", "b")):
    """Images with one labeled square each; the only candidate per image
    is the ground-truth mask. Every image is in both train and val."""
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(0)
    images = {}
    for i in range(n_images):
        iid = f"im{i}"
        label = 1 + i % (len(categories) - 1)
        obj = square_mask((size, size), 12, 36, 10 + i, 34 + i)
        img = np.clip(0.5 + 0.2 * rng.standard_normal((size, size)), 0, 1)
        raster.save_gray(root / f"{iid}.png", img)
        save_labelmap(root / f"{iid}_gt.png", np.where(obj, label, 0))
        cdir = root / f"{iid}_cand"
        cdir.mkdir(exist_ok=True)
        raster.save_mask(cdir / "gt.png", obj)
        images[iid] = {"image": f"{iid}.png", "labels": f"{iid}_gt.png", "candidates": f"{iid}_cand"}
    ids = sorted(images)
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "categories": list(categories),
        "splits": {"train": ids, "val": ids},
        "images": images,
    }
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


def write_voc_fixture(root, ids=("2007_000001", "2007_000002", "2007_000003")):
    """Minimal VOC-layout tree: JPEG images, class and object label maps
    (object maps for the first image only), train/val lists."""
    for sub in ("JPEGImages", "SegmentationClass", "SegmentationObject", "ImageSets/Segmentation"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(1)
    for k, iid in enumerate(ids):
        rgb = (rng.random((40, 50, 3)) * 255).astype(np.uint8)
        Image.fromarray(rgb).save(root / "JPEGImages" / f"{iid}.jpg")
        cls = np.zeros((40, 50), np.uint8)
        obj = np.zeros((40, 50), np.uint8)
        cls[5:15, 5:20] = 15  # person
        obj[5:15, 5:20] = 1
        cls[20:35, 25:45] = 15
        obj[20:35, 25:45] = 2
        cls[4:36, 24] = 255
        if k == 2:
            cls[20:35, 25:45] = 8  # cat
        save_labelmap(root / "SegmentationClass" / f"{iid}.png", cls)
        if k == 0:
            save_labelmap(root / "SegmentationObject" / f"{iid}.png", obj)
    (root / "ImageSets/Segmentation/train.txt").write_text("\n".join(ids[:2]) + "\n")
    (root / "ImageSets/Segmentation/val.txt").write_text(ids[2] + "\n")
    return root
