"""Figure-Border-Ground partitions and contour-based spatial pyramids.

A partition assigns every pixel exactly one region: a Figure cell, the
Border crown, or the Ground. Figure cells come from an optional spatial
pyramid over the candidate mask (distance-transform crowns or centroid
quadrants); without a pyramid the Figure is a single cell.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import raster
from .errors import EmptyFigureError

FIGURE, BORDER, GROUND = "F", "B", "G"
TAG_ORDER = {FIGURE: 0, BORDER: 1, GROUND: 2}

# codes stored in RegionPartition.codes; Figure cells use 0..n_cells-1
BORDER_CODE = -1
GROUND_CODE = -2

SP_NONE, SP_CROWN, SP_CARTESIAN = "none", "crown", "cartesian"
SIDE_EXTERIOR, SIDE_INTERIOR, SIDE_STRADDLE = "exterior", "interior", "straddle"
BORDER_SIDES = (SIDE_EXTERIOR, SIDE_INTERIOR, SIDE_STRADDLE)

QUADRANT_NAMES = ("NW", "NE", "SW", "SE")
MAX_LAYERS = 16


@dataclass(frozen=True, order=False)
class RegionId:
    tag: str
    cell: int | None = None

    def __post_init__(self):
        if self.tag not in TAG_ORDER:
            raise ValueError(f"unknown region tag {self.tag!r}")
        if self.cell is not None and (self.tag != FIGURE or self.cell < 0):
            raise ValueError("only Figure regions carry a non-negative cell index")

    def sort_key(self) -> tuple[int, int]:
        return TAG_ORDER[self.tag], -1 if self.cell is None else self.cell

    def __str__(self) -> str:
        return self.tag if self.cell is None else f"{self.tag}{self.cell}"


@dataclass(frozen=True)
class SPConfig:
    kind: str = SP_NONE
    layers: int = 4

    def __post_init__(self):
        if self.kind not in (SP_NONE, SP_CROWN, SP_CARTESIAN):
            raise ValueError(f"unknown spatial pyramid {self.kind!r}")
        if not 1 <= self.layers <= MAX_LAYERS:
            raise ValueError(f"layers must be in [1, {MAX_LAYERS}]")

    @property
    def n_cells(self) -> int:
        return {SP_NONE: 1, SP_CROWN: self.layers, SP_CARTESIAN: 4}[self.kind]


@dataclass(frozen=True)
class LayerSpec:
    """Crown thresholds ``d_max / 2**k`` for ``k = 1 .. n_layers-1``."""

    d_max: float
    thresholds: tuple[float, ...]

    @classmethod
    def from_d_max(cls, d_max: float, n_layers: int) -> LayerSpec:
        return cls(d_max, tuple(d_max / 2.0 ** k for k in range(1, n_layers)))


@dataclass(frozen=True, eq=False)
class RegionPartition:
    codes: np.ndarray
    border_width: float = 5.0
    sp: SPConfig = field(default_factory=SPConfig)
    border_side: str = SIDE_EXTERIOR

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape

    @property
    def n_cells(self) -> int:
        return self.sp.n_cells

    @property
    def figure(self) -> np.ndarray:
        return self.codes >= 0

    @property
    def border(self) -> np.ndarray:
        return self.codes == BORDER_CODE

    @property
    def ground(self) -> np.ndarray:
        return self.codes == GROUND_CODE

    def cell(self, k: int) -> np.ndarray:
        return self.codes == k

    def region_of_code(self, code: int) -> RegionId:
        if code == BORDER_CODE:
            return RegionId(BORDER)
        if code == GROUND_CODE:
            return RegionId(GROUND)
        return RegionId(FIGURE, None if self.sp.kind == SP_NONE else int(code))

    def region_at(self, y: int, x: int) -> RegionId:
        return self.region_of_code(int(self.codes[y, x]))

    def region_ids(self) -> list[RegionId]:
        """Pixel-level region ids in canonical order."""
        if self.sp.kind == SP_NONE:
            figs = [RegionId(FIGURE)]
        else:
            figs = [RegionId(FIGURE, k) for k in range(self.n_cells)]
        return figs + [RegionId(BORDER), RegionId(GROUND)]

    def mask(self, region: RegionId) -> np.ndarray:
        """Pixels of ``region``; ``RegionId('F')`` is the whole Figure."""
        if region.tag == BORDER:
            return self.border
        if region.tag == GROUND:
            return self.ground
        if region.cell is None:
            return self.figure
        return self.cell(region.cell)

    def counts(self) -> dict[str, int]:
        out = {str(r): int(self.mask(r).sum()) for r in self.region_ids()}
        if self.sp.kind != SP_NONE:
            out[FIGURE] = int(self.figure.sum())
        return out


def _require_figure(mask) -> np.ndarray:
    mask = raster.as_mask(mask)
    if not mask.any():
        raise EmptyFigureError("object candidate mask has no pixels")
    return mask


def interior_sq_distance(mask: np.ndarray) -> np.ndarray:
    """Squared distance from Figure pixels to the nearest outside pixel
    (image edge treated as background); zero off the Figure."""
    return raster.squared_edt(mask, raster.OUTSIDE, raster.BACKGROUND) * mask


def fbg_partition(mask, border_width: float = 5.0) -> RegionPartition:
    """Split the image into Figure (the mask), an exterior Border crown of
    ``border_width`` pixels, and the remaining Ground."""
    return compose_partition(mask, border_width, SPConfig())


def crown_layers(mask, n_layers: int = 4) -> np.ndarray:
    """Crown spatial pyramid over the Figure.

    Returns an int array holding the layer index of every Figure pixel
    (0 is the innermost core) and -1 elsewhere. Layer ``k < n_layers-1``
    holds interior distances in ``(d_max/2**(k+1), d_max/2**k]``; the last
    layer takes everything down to the contour.
    """
    mask = _require_figure(mask)
    if not 1 <= n_layers <= MAX_LAYERS:
        raise ValueError(f"n_layers must be in [1, {MAX_LAYERS}]")
    d2 = interior_sq_distance(mask)
    d2_max = int(d2.max())
    cells = np.zeros(mask.shape, dtype=np.int64)
    # d <= d_max / 2**j  <=>  d2 * 4**j <= d2_max, exact in integers
    for j in range(1, n_layers):
        cells += d2 * (4 ** j) <= d2_max
    return np.where(mask, cells, -1)


def layer_spec(mask, n_layers: int = 4) -> LayerSpec:
    d2 = interior_sq_distance(_require_figure(mask))
    return LayerSpec.from_d_max(float(np.sqrt(d2.max())), n_layers)


def centroid(mask) -> tuple[float, float]:
    ys, xs = np.nonzero(_require_figure(mask))
    return float(xs.sum()) / xs.size, float(ys.sum()) / ys.size


def cartesian_quadrants(mask) -> np.ndarray:
    """Quadrant index (NW=0, NE=1, SW=2, SE=3) of every Figure pixel around
    the Figure's center of mass, -1 elsewhere. Pixels level with the
    centroid go east/south."""
    mask = _require_figure(mask)
    ys, xs = np.nonzero(mask)
    n = xs.size
    sx, sy = int(xs.sum()), int(ys.sum())
    # x >= sx/n compared as x*n >= sx to avoid rounding
    east = xs.astype(np.int64) * n >= sx
    south = ys.astype(np.int64) * n >= sy
    cells = np.full(mask.shape, -1, dtype=np.int64)
    cells[ys, xs] = east.astype(np.int64) + 2 * south.astype(np.int64)
    return cells


def compose_partition(mask, border_width: float = 5.0, sp: SPConfig | None = None,
                      border_side: str = SIDE_EXTERIOR) -> RegionPartition:
    """Full per-candidate codification: Figure cells, Border and Ground.

    ``border_side`` picks where the crown lies relative to the contour:
    ``exterior`` (default; the Figure is the mask itself), ``interior``
    (the crown is carved out of the mask) or ``straddle`` (half width on
    each side).
    """
    mask = _require_figure(mask)
    sp = sp or SPConfig()
    if border_width < 0:
        raise ValueError("border_width must be non-negative")
    if border_side not in BORDER_SIDES:
        raise ValueError(f"border_side must be one of {BORDER_SIDES}")

    if border_side == SIDE_EXTERIOR:
        figure = mask
        border = raster.dilate_disc(mask, border_width) & ~mask
    else:
        out_w = border_width / 2.0 if border_side == SIDE_STRADDLE else 0.0
        in_w = border_width - out_w
        inner = mask & (interior_sq_distance(mask) <= in_w * in_w)
        figure = mask & ~inner
        border = inner | (raster.dilate_disc(mask, out_w) & ~mask)

    codes = np.full(mask.shape, GROUND_CODE, dtype=np.int64)
    codes[border] = BORDER_CODE
    if figure.any():
        if sp.kind == SP_CROWN:
            cells = crown_layers(figure, sp.layers)
        elif sp.kind == SP_CARTESIAN:
            cells = cartesian_quadrants(figure)
        else:
            cells = np.where(figure, 0, -1)
        codes[figure] = cells[figure]
    return RegionPartition(codes, float(border_width), sp, border_side)


# indexed palette: 0 Ground black, 1 Border gray, 2.. Figure cells
_CELL_HUES = [
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200),
    (245, 130, 48), (145, 30, 180), (70, 240, 240), (240, 50, 230),
    (210, 245, 60), (250, 190, 212), (0, 128, 128), (220, 190, 255),
    (170, 110, 40), (255, 250, 200), (128, 0, 0), (170, 255, 195),
]
PALETTE = [(0, 0, 0), (128, 128, 128)] + _CELL_HUES


def partition_indices(part: RegionPartition) -> np.ndarray:
    """Palette indices: Ground 0, Border 1, Figure cell k -> 2 + k."""
    idx = np.where(part.codes >= 0, part.codes + 2, 0)
    idx[part.codes == BORDER_CODE] = 1
    return idx.astype(np.uint8)


def save_partition_png(path, part: RegionPartition) -> None:
    im = Image.fromarray(partition_indices(part), mode="P")
    flat = [c for rgb in PALETTE for c in rgb]
    im.putpalette(flat + [0] * (768 - len(flat)))
    im.save(Path(path))
