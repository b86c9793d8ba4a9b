"""Dense multiscale local descriptors.

Three kinds are produced on a regular grid of centers and patch sizes:

* ``eSIFT``  -- 4x4 cells x 8 orientations of gradient energy plus 4
  enrichment values (relative x, relative y, relative scale, mean
  intensity);
* ``eMSIFT`` -- the same, with gradient magnitude zeroed outside a mask;
* ``eLBP``   -- uniform local binary pattern histogram (58 + 1 bins) plus
  3 enrichment values.

Descriptors are emitted in scan order: row-major over centers, then by
ascending patch size.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import raster
from .errors import FormatError
from .partition import BORDER_CODE, GROUND_CODE, RegionId, RegionPartition

ESIFT, EMSIFT, ELBP = "eSIFT", "eMSIFT", "eLBP"
KINDS = (ESIFT, EMSIFT, ELBP)

N_CELLS = 4
N_ORIENT = 8
SIFT_DIM = N_CELLS * N_CELLS * N_ORIENT + 4
LBP_BINS = 59
LBP_DIM = LBP_BINS + 3
CLIP = 0.2
_NORM_FLOOR = 1e-12


def descriptor_dim(kind: str) -> int:
    if kind not in KINDS:
        raise ValueError(f"unknown descriptor kind {kind!r}; expected one of {KINDS}")
    return LBP_DIM if kind == ELBP else SIFT_DIM


@dataclass(frozen=True)
class DenseGrid:
    stride: int = 4
    scales: tuple[int, ...] = (16, 24, 32)

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if not self.scales:
            raise ValueError("at least one scale is required")
        for s in self.scales:
            if s < 8 or s % 2:
                raise ValueError(f"scale {s} must be even and >= 8")
        object.__setattr__(self, "scales", tuple(sorted(int(s) for s in self.scales)))


@dataclass(frozen=True)
class LocalDescriptor:
    x: int
    y: int
    scale: int
    vector: np.ndarray


@dataclass(frozen=True, eq=False)
class DescriptorSet:
    """Column-oriented list of descriptors of one kind."""

    kind: str
    centers: np.ndarray  # (n, 2) int, columns x, y
    scales: np.ndarray  # (n,) int
    vectors: np.ndarray  # (n, d) float64

    @classmethod
    def empty(cls, kind: str) -> DescriptorSet:
        return cls(kind, np.zeros((0, 2), np.int64), np.zeros(0, np.int64),
                   np.zeros((0, descriptor_dim(kind))))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __getitem__(self, i: int) -> LocalDescriptor:
        x, y = self.centers[i]
        return LocalDescriptor(int(x), int(y), int(self.scales[i]), self.vectors[i])

    def __iter__(self) -> Iterator[LocalDescriptor]:
        for i in range(len(self)):
            yield self[i]

    def subset(self, index) -> DescriptorSet:
        return DescriptorSet(self.kind, self.centers[index], self.scales[index], self.vectors[index])


def grid_points(shape: tuple[int, int], grid: DenseGrid, where: np.ndarray | None = None) -> list[tuple[int, int, int]]:
    """``(x, y, scale)`` triples whose whole patch lies inside the image."""
    h, w = shape
    pts = []
    for y in range(0, h, grid.stride):
        for x in range(0, w, grid.stride):
            if where is not None and not where[y, x]:
                continue
            for s in grid.scales:
                x0, y0 = x - s // 2, y - s // 2
                if x0 >= 0 and y0 >= 0 and x0 + s <= w and y0 + s <= h:
                    pts.append((x, y, s))
    return pts


def _enrichment(pts, frame, means=None) -> np.ndarray:
    fx, fy, fw, fh = frame
    arr = np.asarray(pts, dtype=np.float64).reshape(-1, 3)
    cols = [(arr[:, 0] - fx) / fw, (arr[:, 1] - fy) / fh, arr[:, 2] / max(fw, fh)]
    if means is not None:
        cols.append(means)
    return np.clip(np.stack(cols, axis=1), 0.0, 1.0)


def gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central differences inside the image, one-sided at its edges."""
    gy, gx = np.gradient(img)
    return gx, gy


def orientation_energy(img: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Per-pixel gradient magnitude split linearly between the two
    nearest of 8 orientation bins, shape ``(h, w, 8)``."""
    gx, gy = gradients(img)
    mag = np.hypot(gx, gy)
    if mask is not None:
        mag = mag * mask
    o = np.mod(np.arctan2(gy, gx), 2 * np.pi) / (2 * np.pi / N_ORIENT)
    b0 = np.floor(o)
    frac = o - b0
    b0 = b0.astype(np.int64) % N_ORIENT
    b1 = (b0 + 1) % N_ORIENT
    out = np.zeros(img.shape + (N_ORIENT,))
    # b0 != b1 for every pixel, so plain assignment does not collide
    np.put_along_axis(out, b0[..., None], (mag * (1.0 - frac))[..., None], axis=2)
    np.put_along_axis(out, b1[..., None], (mag * frac)[..., None], axis=2)
    return out


def _axis_cell_weights(s: int) -> np.ndarray:
    # (s, 4): bilinear share of each patch row/column in each spatial cell
    cell = s / N_CELLS
    u = (np.arange(s) + 0.5) / cell - 0.5
    c0 = np.floor(u).astype(np.int64)
    f = u - c0
    w = np.zeros((s, N_CELLS))
    for i in range(s):
        if 0 <= c0[i] < N_CELLS:
            w[i, c0[i]] += 1.0 - f[i]
        if 0 <= c0[i] + 1 < N_CELLS:
            w[i, c0[i] + 1] += f[i]
    return w


def spatial_weights(s: int) -> np.ndarray:
    """Gaussian (sigma = s/2) times bilinear cell weights, ``(s, s, 16)``
    indexed ``[row, col, cell_y * 4 + cell_x]``."""
    c = (s - 1) / 2.0
    r = np.arange(s) - c
    sigma = s / 2.0
    g = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2 * sigma ** 2))
    a = _axis_cell_weights(s)
    w = g[:, :, None, None] * a[:, None, :, None] * a[None, :, None, :]
    return w.reshape(s, s, N_CELLS * N_CELLS)


def normalize_sift(hist: np.ndarray) -> np.ndarray:
    """L2-normalize, clip at 0.2, renormalize; rows with no energy stay 0."""
    hist = np.array(hist, dtype=np.float64, copy=True)
    norm = np.linalg.norm(hist, axis=1)
    live = norm > _NORM_FLOOR
    hist[~live] = 0.0
    hist[live] /= norm[live, None]
    np.minimum(hist, CLIP, out=hist)
    norm = np.linalg.norm(hist, axis=1)
    hist[live] /= norm[live, None]
    return hist


def dense_sift(img: np.ndarray, grid: DenseGrid | None = None, mask: np.ndarray | None = None,
               frame: tuple[float, float, float, float] | None = None,
               where: np.ndarray | None = None) -> DescriptorSet:
    """Extract eSIFT (or eMSIFT when ``mask`` is given) descriptors.

    ``frame`` is the ``(x, y, w, h)`` box the enrichment coordinates are
    expressed in; it defaults to the whole image. ``where`` optionally
    restricts the grid centers.
    """
    img = raster.as_gray(img)
    grid = grid or DenseGrid()
    h, w = img.shape
    if mask is not None:
        mask = raster.as_mask(mask, img.shape)
    frame = frame or (0.0, 0.0, float(w), float(h))
    kind = ESIFT if mask is None else EMSIFT

    pts = grid_points(img.shape, grid, where)
    if not pts:
        return DescriptorSet.empty(kind)
    energy = orientation_energy(img, mask)
    pts_arr = np.asarray(pts, dtype=np.int64)
    hist = np.zeros((len(pts), N_CELLS * N_CELLS, N_ORIENT))
    means = np.zeros(len(pts))
    gray = img if mask is None else img * mask
    for s in grid.scales:
        sel = np.nonzero(pts_arr[:, 2] == s)[0]
        if sel.size == 0:
            continue
        x0 = pts_arr[sel, 0] - s // 2
        y0 = pts_arr[sel, 1] - s // 2
        windows = sliding_window_view(energy, (s, s), axis=(0, 1))[y0, x0]  # (n, 8, s, s)
        hist[sel] = np.einsum("nors,rsc->nco", windows, spatial_weights(s), optimize=True)
        sums = sliding_window_view(gray, (s, s))[y0, x0].sum(axis=(1, 2))
        if mask is None:
            means[sel] = sums / (s * s)
        else:
            counts = sliding_window_view(mask, (s, s))[y0, x0].sum(axis=(1, 2))
            means[sel] = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    grad = normalize_sift(hist.reshape(len(pts), -1))
    vectors = np.hstack([grad, _enrichment(pts, frame, means)])
    return DescriptorSet(kind, pts_arr[:, :2].copy(), pts_arr[:, 2].copy(), vectors)


def _uniform_table() -> np.ndarray:
    table = np.full(256, LBP_BINS - 1, dtype=np.int64)
    nxt = 0
    for code in range(256):
        bits = [(code >> k) & 1 for k in range(8)]
        if sum(bits[k] != bits[(k + 1) % 8] for k in range(8)) <= 2:
            table[code] = nxt
            nxt += 1
    assert nxt == LBP_BINS - 1
    return table


UNIFORM_BIN = _uniform_table()


def _neighbor_offsets() -> list[tuple[float, float]]:
    # counterclockwise from east with y pointing down; opposite neighbors
    # are exact negations so 180-degree rotation permutes the bits
    d = np.sqrt(0.5)
    half = [(1.0, 0.0), (d, -d), (0.0, -1.0), (-d, -d)]
    return half + [(-dx, -dy) for dx, dy in half]


def lbp_codes(img: np.ndarray) -> np.ndarray:
    """8-neighbor, radius-1 LBP code of every pixel; a neighbor at least
    as bright as the center sets its bit. Samples off the image clamp to
    the nearest edge pixel."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    yy, xx = np.indices((h, w))
    codes = np.zeros((h, w), dtype=np.int64)
    for k, (dx, dy) in enumerate(_neighbor_offsets()):
        bx, by = int(np.floor(dx)), int(np.floor(dy))
        fx, fy = dx - bx, dy - by
        x0 = np.clip(xx + bx, 0, w - 1)
        x1 = np.clip(xx + bx + 1, 0, w - 1)
        y0 = np.clip(yy + by, 0, h - 1)
        y1 = np.clip(yy + by + 1, 0, h - 1)
        top = img[y0, x0] + fx * (img[y0, x1] - img[y0, x0])
        bot = img[y1, x0] + fx * (img[y1, x1] - img[y1, x0])
        val = top + fy * (bot - top)
        codes |= (val >= img).astype(np.int64) << k
    return codes


def dense_lbp(img: np.ndarray, grid: DenseGrid | None = None,
              frame: tuple[float, float, float, float] | None = None,
              where: np.ndarray | None = None) -> DescriptorSet:
    """Extract eLBP descriptors: L1-normalized uniform-pattern histogram of
    each patch plus relative position and scale."""
    img = raster.as_gray(img)
    grid = grid or DenseGrid()
    h, w = img.shape
    frame = frame or (0.0, 0.0, float(w), float(h))
    pts = grid_points(img.shape, grid, where)
    if not pts:
        return DescriptorSet.empty(ELBP)
    bins = UNIFORM_BIN[lbp_codes(img)]
    onehot = np.zeros((h + 1, w + 1, LBP_BINS), dtype=np.int64)
    onehot[1:, 1:][np.arange(h)[:, None], np.arange(w)[None, :], bins] = 1
    integral = onehot.cumsum(0).cumsum(1)
    pts_arr = np.asarray(pts, dtype=np.int64)
    s = pts_arr[:, 2]
    x0, y0 = pts_arr[:, 0] - s // 2, pts_arr[:, 1] - s // 2
    x1, y1 = x0 + s, y0 + s
    counts = integral[y1, x1] - integral[y0, x1] - integral[y1, x0] + integral[y0, x0]
    total = counts.sum(axis=1, keepdims=True)
    hist = np.where(total > 0, counts / np.maximum(total, 1), 0.0)
    vectors = np.hstack([hist, _enrichment(pts, frame)])
    return DescriptorSet(ELBP, pts_arr[:, :2].copy(), pts_arr[:, 2].copy(), vectors)


def extract(kind: str, img: np.ndarray, grid: DenseGrid | None = None, mask: np.ndarray | None = None,
            where: np.ndarray | None = None) -> DescriptorSet:
    """Dispatch by kind. eMSIFT uses ``mask`` both for gating and for its
    bounding-box frame."""
    if kind == ESIFT:
        return dense_sift(img, grid, where=where)
    if kind == EMSIFT:
        if mask is None:
            raise ValueError("eMSIFT requires a mask")
        box = raster.bounding_box(mask)
        if box is None:
            return DescriptorSet.empty(EMSIFT)
        return dense_sift(img, grid, mask=mask, frame=tuple(float(v) for v in box), where=where)
    if kind == ELBP:
        return dense_lbp(img, grid, where=where)
    raise ValueError(f"unknown descriptor kind {kind!r}")


def assign_to_pools(descs: DescriptorSet, part: RegionPartition) -> dict[RegionId, DescriptorSet]:
    """Route each descriptor to the region under its center pixel."""
    codes = part.codes[descs.centers[:, 1], descs.centers[:, 0]] if len(descs) else np.zeros(0, np.int64)
    pools = {}
    for region in part.region_ids():
        if region.tag == "F":
            hit = codes >= 0 if region.cell is None else codes == region.cell
        else:
            hit = codes == (BORDER_CODE if region.tag == "B" else GROUND_CODE)
        pools[region] = descs.subset(np.nonzero(hit)[0])
    return pools


# -- binary dump: 16-byte header then little-endian float32 rows

DUMP_MAGIC = b"FBGDUMP1"
_HEADER = struct.Struct("<8sII")


def write_dump(path, rows: np.ndarray) -> None:
    rows = np.atleast_2d(np.asarray(rows, dtype="<f4"))
    n, d = rows.shape
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(DUMP_MAGIC, n, d))
        fh.write(rows.tobytes(order="C"))


def read_dump(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, n, d = _HEADER.unpack_from(data)
    if magic != DUMP_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    body = data[_HEADER.size:]
    if len(body) != 4 * n * d:
        raise FormatError(f"{path}: expected {n}x{d} float32 rows, got {len(body)} bytes")
    return np.frombuffer(body, dtype="<f4").reshape(n, d).astype(np.float64)
