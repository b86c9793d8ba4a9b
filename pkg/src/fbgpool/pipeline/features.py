"""Per-candidate feature assembly from a pooling configuration."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .. import descriptors as D
from ..descriptors import DenseGrid, DescriptorSet
from ..partition import (BORDER_CODE, GROUND_CODE, SIDE_EXTERIOR, SP_NONE, RegionId, RegionPartition,
                         SPConfig, compose_partition)
from ..pooling import O2PConfig, PooledFeature, concat_features, o2p_pool, pooled_dim

GROUPS = ("F", "SPF", "B", "G")


@dataclass(frozen=True)
class FeatureConfig:
    """Which descriptor kinds are pooled over which region groups.

    A block ``(kind, group)`` with group ``SPF`` expands to one pooled
    vector per spatial-pyramid cell of the Figure.
    """

    blocks: tuple[tuple[str, str], ...] = (("eSIFT", "F"),)
    border_width: float = 5.0
    border_side: str = SIDE_EXTERIOR
    sp: SPConfig = field(default_factory=SPConfig)
    grid: DenseGrid = field(default_factory=DenseGrid)
    o2p: O2PConfig = field(default_factory=O2PConfig)

    def __post_init__(self):
        blocks = tuple((str(k), str(g)) for k, g in self.blocks)
        if not blocks:
            raise ValueError("at least one (descriptor, region) block is required")
        for kind, group in blocks:
            D.descriptor_dim(kind)
            if group not in GROUPS:
                raise ValueError(f"unknown region group {group!r}; expected one of {GROUPS}")
            if group == "SPF" and self.sp.kind == SP_NONE:
                raise ValueError("region group SPF needs a spatial pyramid (crown or cartesian)")
        if len(set(blocks)) != len(blocks):
            raise ValueError("duplicate (descriptor, region) block")
        object.__setattr__(self, "blocks", tuple(sorted(blocks, key=_block_key)))

    @classmethod
    def from_lists(cls, descriptors, regions, **kw) -> FeatureConfig:
        return cls(tuple((k, g) for k in descriptors for g in regions), **kw)

    @property
    def kinds(self) -> list[str]:
        return [k for k in D.KINDS if any(b[0] == k for b in self.blocks)]

    def to_dict(self) -> dict:
        return {
            "blocks": [f"{k}:{g}" for k, g in self.blocks],
            "border_width": self.border_width,
            "border_side": self.border_side,
            "sp": self.sp.kind,
            "layers": self.sp.layers if self.sp.kind == "crown" else None,
            "stride": self.grid.stride,
            "scales": list(self.grid.scales),
            "epsilon": self.o2p.epsilon,
            "power": self.o2p.power,
        }

    @classmethod
    def from_dict(cls, d: dict) -> FeatureConfig:
        blocks = tuple(tuple(b.split(":", 1)) for b in d["blocks"])
        return cls(blocks, float(d["border_width"]), d["border_side"],
                   SPConfig(d["sp"], int(d["layers"] or 4)),
                   DenseGrid(int(d["stride"]), tuple(d["scales"])),
                   O2PConfig(float(d["epsilon"]), float(d["power"])))

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def n_blocks(self) -> int:
        return sum(self.sp.n_cells if g == "SPF" else 1 for _, g in self.blocks)

    def feature_dim(self) -> int:
        return sum((self.sp.n_cells if g == "SPF" else 1) * pooled_dim(D.descriptor_dim(k))
                   for k, g in self.blocks)


def _block_key(block):
    kind, group = block
    return D.KINDS.index(kind) if kind in D.KINDS else 99, GROUPS.index(group) if group in GROUPS else 99


class ImageDescriptors:
    """Caches the unmasked descriptors of one image across candidates."""

    def __init__(self, img: np.ndarray, grid: DenseGrid):
        self.img = img
        self.grid = grid
        self._cache: dict[str, DescriptorSet] = {}

    def get(self, kind: str) -> DescriptorSet:
        if kind not in self._cache:
            self._cache[kind] = D.extract(kind, self.img, self.grid)
        return self._cache[kind]


def _group_support(part: RegionPartition, group: str) -> np.ndarray:
    if group == "B":
        return part.border
    if group == "G":
        return part.ground
    return part.figure


def group_pools(descs: DescriptorSet, part: RegionPartition, group: str) -> list[tuple[RegionId, DescriptorSet]]:
    """Descriptor pools of one region group, keyed by the region of each
    descriptor's center pixel."""
    if len(descs):
        codes = part.codes[descs.centers[:, 1], descs.centers[:, 0]]
    else:
        codes = np.zeros(0, dtype=np.int64)
    if group == "F":
        return [(RegionId("F"), descs.subset(np.nonzero(codes >= 0)[0]))]
    if group == "SPF":
        return [(RegionId("F", k), descs.subset(np.nonzero(codes == k)[0])) for k in range(part.n_cells)]
    code = BORDER_CODE if group == "B" else GROUND_CODE
    return [(RegionId(group), descs.subset(np.nonzero(codes == code)[0]))]


def candidate_blocks(cache: ImageDescriptors, mask: np.ndarray, cfg: FeatureConfig) -> list[PooledFeature]:
    part = compose_partition(mask, cfg.border_width, cfg.sp, cfg.border_side)
    out = []
    for kind, group in cfg.blocks:
        if kind == D.EMSIFT:
            # masked to the region group's own support, centers restricted to it
            support = _group_support(part, group)
            descs = D.extract(kind, cache.img, cfg.grid, mask=support, where=support)
        else:
            descs = cache.get(kind)
        dim = D.descriptor_dim(kind)
        for region, pool in group_pools(descs, part, group):
            out.append(o2p_pool(pool, cfg.o2p, dim=dim, region=region, kind=kind))
    return out


def candidate_feature(cache: ImageDescriptors, mask: np.ndarray, cfg: FeatureConfig) -> np.ndarray:
    return concat_features(candidate_blocks(cache, mask, cfg))
