"""Dataset manifests, label maps and candidate directories."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .. import raster
from ..errors import ManifestError, MissingFileError

MANIFEST_SCHEMA = "fbgpool.manifest/1"
VOID = 255
DEFAULT_MAX_CANDIDATES = 150
SPLITS = ("train", "val", "test")

VOC_CATEGORIES = [
    "background", "aeroplane", "bicycle", "bird", "boat", "bottle", "bus", "car", "cat", "chair", "cow",
    "diningtable", "dog", "horse", "motorbike", "person", "pottedplant", "sheep", "sofa", "train", "tvmonitor",
]


def _voc_palette() -> list[int]:
    pal = []
    for i in range(256):
        r = g = b = 0
        c = i
        for j in range(8):
            r |= ((c >> 0) & 1) << (7 - j)
            g |= ((c >> 1) & 1) << (7 - j)
            b |= ((c >> 2) & 1) << (7 - j)
            c >>= 3
        pal += [r, g, b]
    pal[3 * VOID:3 * VOID + 3] = [224, 224, 192]
    return pal


VOC_PALETTE = _voc_palette()


def load_labelmap(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("P", "L"):
            raise ManifestError(f"{path}: label map must be an 8-bit indexed or gray PNG, got mode {im.mode}")
        return np.asarray(im, dtype=np.uint8).copy()


def save_labelmap(path, labels: np.ndarray) -> None:
    im = Image.fromarray(np.asarray(labels, dtype=np.uint8), mode="P")
    im.putpalette(VOC_PALETTE)
    im.save(Path(path))


@dataclass(frozen=True)
class ImageEntry:
    id: str
    image: Path
    labels: Path
    candidates: Path
    ranking: Path | None = None


@dataclass(frozen=True)
class Candidate:
    id: str
    rank: int
    path: Path

    def load(self) -> np.ndarray:
        return raster.load_mask(self.path)


@dataclass
class DatasetManifest:
    root: Path
    categories: list[str]
    splits: dict[str, list[str]]
    images: dict[str, ImageEntry]
    max_candidates: int = DEFAULT_MAX_CANDIDATES
    path: Path | None = field(default=None, compare=False)

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    def split(self, name: str) -> list[ImageEntry]:
        return [self.images[i] for i in self.splits.get(name, [])]

    def candidates(self, entry: ImageEntry) -> list[Candidate]:
        return list_candidates(entry, self.max_candidates)

    def to_dict(self) -> dict:
        def rel(p):
            return None if p is None else os.path.relpath(p, self.root).replace(os.sep, "/")

        return {
            "schema": MANIFEST_SCHEMA,
            "categories": list(self.categories),
            "max_candidates": self.max_candidates,
            "splits": {k: list(v) for k, v in self.splits.items()},
            "images": {
                e.id: {k: v for k, v in (("image", rel(e.image)), ("labels", rel(e.labels)),
                                         ("candidates", rel(e.candidates)), ("ranking", rel(e.ranking)))
                       if v is not None}
                for e in self.images.values()
            },
        }


def write_manifest(path, manifest: DatasetManifest) -> Path:
    path = Path(path)
    path.write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")
    return path


def _no_duplicate_keys(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ManifestError(f"duplicate key {k!r} in manifest")
        out[k] = v
    return out


def _parse_categories(raw) -> list[str]:
    if isinstance(raw, dict):
        try:
            idx = sorted(int(k) for k in raw)
        except ValueError as exc:
            raise ManifestError("bad category table: keys must be integer indices") from exc
        if idx != list(range(len(idx))):
            raise ManifestError("bad category table: indices must be contiguous from 0")
        names = [raw[str(i)] for i in idx]
    elif isinstance(raw, list):
        names = raw
    else:
        raise ManifestError("bad category table: expected a list or an index->name object")
    if not names or not all(isinstance(n, str) and n for n in names):
        raise ManifestError("bad category table: names must be non-empty strings")
    if len(set(names)) != len(names):
        raise ManifestError("bad category table: duplicate category names")
    if len(names) >= VOID:
        raise ManifestError(f"bad category table: at most {VOID} categories (index {VOID} is void)")
    return list(names)


def read_ranking(path) -> list[str]:
    lines = Path(path).read_text().splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")]


def list_candidates(entry: ImageEntry, cap: int = DEFAULT_MAX_CANDIDATES) -> list[Candidate]:
    """Candidates of one image, best first, capped at ``cap``. Without a
    ranking file the PNG files are taken in name order."""
    if entry.ranking is not None:
        ids = read_ranking(entry.ranking)
        if len(set(ids)) != len(ids):
            raise ManifestError(f"{entry.ranking}: duplicate candidate ids")
    else:
        ids = sorted(p.stem for p in entry.candidates.glob("*.png"))
    out = []
    for rank, cid in enumerate(ids[:cap]):
        path = entry.candidates / f"{cid}.png"
        if not path.is_file():
            raise MissingFileError(path, "candidate mask")
        out.append(Candidate(cid, rank, path))
    return out


def load_dataset(path, max_candidates: int | None = None) -> DatasetManifest:
    """Parse and validate a manifest JSON file.

    Raises :class:`ManifestError` (or its :class:`MissingFileError`
    subclass) describing the first problem found.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(path, "manifest")
    try:
        raw = json.loads(path.read_text(), object_pairs_hook=_no_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from exc
    if raw.get("schema") != MANIFEST_SCHEMA:
        raise ManifestError(f"{path}: unsupported schema {raw.get('schema')!r}, expected {MANIFEST_SCHEMA!r}")
    root = (path.parent / raw.get("root", ".")).resolve()
    categories = _parse_categories(raw.get("categories"))
    cap = int(max_candidates if max_candidates is not None else raw.get("max_candidates", DEFAULT_MAX_CANDIDATES))
    if cap < 1:
        raise ManifestError("max_candidates must be >= 1")

    images = {}
    for iid, spec in raw.get("images", {}).items():
        try:
            entry = ImageEntry(
                iid, root / spec["image"], root / spec["labels"], root / spec["candidates"],
                root / spec["ranking"] if spec.get("ranking") else None)
        except (KeyError, TypeError) as exc:
            raise ManifestError(f"image {iid!r}: missing field {exc}") from exc
        for p, what in ((entry.image, "image"), (entry.labels, "label map"), (entry.ranking, "ranking file")):
            if p is not None and not p.is_file():
                raise MissingFileError(p, what)
        if not entry.candidates.is_dir():
            raise MissingFileError(entry.candidates, "candidate directory")
        images[iid] = entry

    splits = {}
    for name, ids in raw.get("splits", {}).items():
        if not isinstance(ids, list):
            raise ManifestError(f"split {name!r} must be a list of image ids")
        if len(set(ids)) != len(ids):
            raise ManifestError(f"split {name!r} has duplicate image ids")
        for iid in ids:
            if iid not in images:
                raise ManifestError(f"split {name!r} references unknown image {iid!r}")
        splits[name] = list(ids)

    manifest = DatasetManifest(root, categories, splits, images, cap, path)
    for entry in images.values():
        list_candidates(entry, cap)  # raises on missing candidate files
    return manifest


def import_voc(voc_root, out_dir, candidates_root=None, splits=("train", "val"),
               max_candidates: int = DEFAULT_MAX_CANDIDATES) -> Path:
    """Write a manifest for a VOC-layout directory.

    Candidates come from ``candidates_root/<id>/*.png`` when given.
    Otherwise ideal candidates are derived from the ground truth: one per
    instance in ``SegmentationObject`` if present, else one per class.
    """
    voc_root, out_dir = Path(voc_root).resolve(), Path(out_dir).resolve()
    out_dir.mkdir(parents=True, exist_ok=True)
    split_ids = {}
    for name in splits:
        lst = voc_root / "ImageSets" / "Segmentation" / f"{name}.txt"
        if not lst.is_file():
            raise MissingFileError(lst, "VOC split list")
        split_ids[name] = read_ranking(lst)

    images = {}
    for iid in dict.fromkeys(i for ids in split_ids.values() for i in ids):
        img = voc_root / "JPEGImages" / f"{iid}.jpg"
        lbl = voc_root / "SegmentationClass" / f"{iid}.png"
        for p in (img, lbl):
            if not p.is_file():
                raise MissingFileError(p)
        if candidates_root is not None:
            cand_dir = Path(candidates_root).resolve() / iid
            ranking = cand_dir / "ranking.txt"
            ranking = ranking if ranking.is_file() else None
        else:
            cand_dir = out_dir / "candidates" / iid
            ranking = _ideal_candidates(voc_root, iid, load_labelmap(lbl), cand_dir)
        images[iid] = ImageEntry(iid, img, lbl, cand_dir, ranking)

    manifest = DatasetManifest(out_dir, list(VOC_CATEGORIES), split_ids, images, max_candidates)
    return write_manifest(out_dir / "manifest.json", manifest)


def _ideal_candidates(voc_root: Path, iid: str, labels: np.ndarray, out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    obj = voc_root / "SegmentationObject" / f"{iid}.png"
    source = load_labelmap(obj) if obj.is_file() else labels
    ids = []
    for v in np.unique(source):
        if v == 0 or v == VOID:
            continue
        cid = f"{int(v):03d}"
        raster.save_mask(out / f"{cid}.png", source == v)
        ids.append(cid)
    ranking = out / "ranking.txt"
    ranking.write_text("".join(f"{c}\n" for c in ids))
    return ranking
