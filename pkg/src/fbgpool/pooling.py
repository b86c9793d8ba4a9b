"""Second-order pooling (O2P) of descriptor pools.

A pool of ``n`` descriptors of dimension ``d`` becomes the matrix log of
``(1/n) sum x x^T + eps I``, flattened to its upper triangle (off-diagonal
entries scaled by sqrt(2) so dot products equal Frobenius products) and
power-normalized elementwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .descriptors import KINDS, DescriptorSet
from .errors import DuplicateBlockError, NumericalInputError
from .partition import RegionId

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class O2PConfig:
    epsilon: float = 1e-3
    power: float = 0.5
    offdiag_scale: float = SQRT2

    def __post_init__(self):
        # epsilon = 0 is accepted for analytic checks; singular pools then fail
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be non-negative")
        if not 0 < self.power <= 1:
            raise ValueError("power must be in (0, 1]")


@dataclass(frozen=True, eq=False)
class PooledFeature:
    region: RegionId | None
    kind: str | None
    vector: np.ndarray
    count: int

    @property
    def key(self) -> tuple[int, tuple[int, int]]:
        kind_rank = KINDS.index(self.kind) if self.kind in KINDS else len(KINDS)
        region_key = self.region.sort_key() if self.region is not None else (-1, -1)
        return kind_rank, region_key


def pooled_dim(d: int) -> int:
    return d * (d + 1) // 2


def _as_rows(pool) -> np.ndarray:
    if isinstance(pool, DescriptorSet):
        x = pool.vectors
    elif len(pool) and hasattr(pool[0], "vector"):
        x = np.vstack([p.vector for p in pool])
    else:
        x = np.asarray(pool, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("pool must be a 2-D array of descriptor rows")
    return x


def second_moment(x: np.ndarray, epsilon: float) -> np.ndarray:
    """``(1/n) X^T X + eps I`` with rows in a fixed lexicographic order so
    the result does not depend on the order of the pool."""
    if not np.all(np.isfinite(x)):
        raise NumericalInputError("descriptor pool contains non-finite entries")
    n, d = x.shape
    x = x[np.lexsort(x.T[::-1])]
    a = (x.T @ x) / n
    a = 0.5 * (a + a.T)
    a[np.diag_indices(d)] += epsilon
    return a


def spd_log(a: np.ndarray) -> np.ndarray:
    """Matrix logarithm of a symmetric positive-definite matrix."""
    w, v = np.linalg.eigh(a)
    if w.min() <= 0:
        raise NumericalInputError(f"pooled matrix is not positive definite (min eigenvalue {w.min():.3g})")
    out = (v * np.log(w)) @ v.T
    return 0.5 * (out + out.T)


def flatten_sym(m: np.ndarray, offdiag_scale: float = SQRT2) -> np.ndarray:
    d = m.shape[0]
    iu = np.triu_indices(d)
    v = m[iu].copy()
    v[iu[0] != iu[1]] *= offdiag_scale
    return v


def power_normalize(v: np.ndarray, power: float) -> np.ndarray:
    return np.sign(v) * np.abs(v) ** power


def o2p_matrix(pool, epsilon: float = 1e-3) -> np.ndarray:
    """Log-mapped second-moment matrix of a non-empty pool."""
    x = _as_rows(pool)
    if x.shape[0] == 0:
        raise ValueError("o2p_matrix needs at least one descriptor")
    return spd_log(second_moment(x, epsilon))


def o2p_pool(pool, cfg: O2PConfig | None = None, dim: int | None = None,
             region: RegionId | None = None, kind: str | None = None) -> PooledFeature:
    """Pool descriptors into one O2P vector.

    ``pool`` may be a :class:`DescriptorSet`, a list of local descriptors
    or an ``(n, d)`` array. An empty pool gives the zero vector; its
    descriptor dimension is taken from ``dim`` or from the set itself.
    """
    cfg = cfg or O2PConfig()
    if isinstance(pool, DescriptorSet):
        kind = kind or pool.kind
    x = _as_rows(pool) if len(pool) else None
    if x is None or x.shape[0] == 0:
        d = dim if dim is not None else (pool.dim if isinstance(pool, DescriptorSet) else None)
        if d is None:
            raise ValueError("empty pool needs an explicit descriptor dimension")
        return PooledFeature(region, kind, np.zeros(pooled_dim(d)), 0)
    log_a = spd_log(second_moment(x, cfg.epsilon))
    v = power_normalize(flatten_sym(log_a, cfg.offdiag_scale), cfg.power)
    return PooledFeature(region, kind, v, x.shape[0])


def concat_features(parts: Sequence[PooledFeature]) -> np.ndarray:
    """Concatenate pooled blocks in canonical order: descriptor kind
    (eSIFT, eMSIFT, eLBP) outer, region (Figure, its cells, Border,
    Ground) inner."""
    seen = set()
    for p in parts:
        if p.key in seen:
            raise DuplicateBlockError(f"duplicate block ({p.kind}, {p.region})")
        seen.add(p.key)
    ordered = sorted(parts, key=lambda p: p.key)
    if not ordered:
        return np.zeros(0)
    return np.concatenate([p.vector for p in ordered])
