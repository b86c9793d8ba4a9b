"""Per-category linear scorers trained by ridge regression on overlap
targets."""
from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConfigMismatchError, DimensionMismatchError, FormatError

MODEL_MAGIC = b"FBGMODEL"
MODEL_VERSION = 1


@dataclass(eq=False)
class LinearModel:
    categories: list[str]
    weights: np.ndarray  # (k, d), acting on standardized features
    bias: np.ndarray  # (k,)
    mean: np.ndarray  # (d,)
    scale: np.ndarray  # (d,)
    lam: float
    digest: str = ""

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale


def default_lambda(n: int) -> float:
    return 1e-4 * n


def standardization(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean and scale; zero-variance dimensions keep scale 1."""
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    return mean, np.where(std > 0, std, 1.0)


def train_ridge(features, targets, lam: float, categories: Sequence[str], digest: str = "",
                standardize: bool = True) -> LinearModel:
    """Fit ``w_c, b_c`` minimizing ``sum_i (w_c . z_i + b_c - t_ic)**2 +
    lam * |w_c|**2`` for every category, with ``z`` the standardized
    features and the bias left unpenalized.

    Solved in closed form with a Cholesky factorization: the primal
    ``d x d`` system when there are at least as many examples as feature
    dimensions, the equivalent ``n x n`` dual system otherwise.
    """
    x = np.asarray(features, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("need at least one training example")
    if t.ndim == 1:
        t = t[:, None]
    n, d = x.shape
    if t.shape != (n, len(categories)):
        raise DimensionMismatchError(f"targets shape {t.shape} does not match ({n}, {len(categories)})")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if not np.all(np.isfinite(x)):
        raise ValueError("training features must be finite")

    if standardize:
        mean, scale = standardization(x)
    else:
        mean, scale = np.zeros(d), np.ones(d)
    z = (x - mean) / scale
    # centering absorbs the unpenalized bias
    z_mean = z.mean(axis=0)
    t_mean = t.mean(axis=0)
    zc = z - z_mean
    tc = t - t_mean
    if n >= d:
        gram = zc.T @ zc
        gram[np.diag_indices(d)] += lam
        w = cho_solve(cho_factor(gram, lower=True), zc.T @ tc).T
    else:
        gram = zc @ zc.T
        gram[np.diag_indices(n)] += lam
        alpha = cho_solve(cho_factor(gram, lower=True), tc)
        w = (zc.T @ alpha).T
    b = t_mean - w @ z_mean
    return LinearModel(list(categories), w, b, mean, scale, float(lam), digest)


def score(model: LinearModel, features, digest: str | None = None) -> np.ndarray:
    """Per-category scores ``w_c . z + b_c`` for one feature vector or a
    stack of them."""
    if digest is not None and digest != model.digest:
        raise ConfigMismatchError(
            f"feature configuration {digest[:12]} does not match model configuration {model.digest[:12]}")
    x = np.asarray(features, dtype=np.float64)
    if x.shape[-1] != model.feature_dim:
        raise DimensionMismatchError(f"feature dimension {x.shape[-1]} != model dimension {model.feature_dim}")
    return model.standardize(x) @ model.weights.T + model.bias


def ridge_objective_grad(model: LinearModel, features, targets) -> np.ndarray:
    """Gradient of the ridge objective at the model's parameters, stacked
    per category as ``[dw..., db]``."""
    z = model.standardize(np.asarray(features, dtype=np.float64))
    t = np.asarray(targets, dtype=np.float64).reshape(z.shape[0], -1)
    r = z @ model.weights.T + model.bias - t
    gw = 2 * r.T @ z + 2 * model.lam * model.weights
    gb = 2 * r.sum(axis=0)
    return np.hstack([gw, gb[:, None]])


def _pack_str(buf: io.BytesIO, s: str) -> None:
    raw = s.encode("utf-8")
    buf.write(struct.pack("<I", len(raw)))
    buf.write(raw)


def _unpack_str(data: memoryview, off: int) -> tuple[str, int]:
    (n,) = struct.unpack_from("<I", data, off)
    off += 4
    return bytes(data[off:off + n]).decode("utf-8"), off + n


def model_metadata(model: LinearModel) -> dict:
    return {
        "format": "fbgpool.model",
        "version": MODEL_VERSION,
        "categories": list(model.categories),
        "feature_dim": model.feature_dim,
        "lambda": model.lam,
        "digest": model.digest,
    }


def save_model(path, model: LinearModel) -> None:
    """Binary container plus a ``.json`` metadata sidecar."""
    path = Path(path)
    buf = io.BytesIO()
    buf.write(MODEL_MAGIC)
    buf.write(struct.pack("<IIQd", MODEL_VERSION, len(model.categories), model.feature_dim, model.lam))
    _pack_str(buf, model.digest)
    for name in model.categories:
        _pack_str(buf, name)
    buf.write(np.asarray(model.mean, dtype="<f8").tobytes())
    buf.write(np.asarray(model.scale, dtype="<f8").tobytes())
    rows = np.hstack([model.weights, model.bias[:, None]])
    buf.write(np.ascontiguousarray(rows, dtype="<f8").tobytes())
    path.write_bytes(buf.getvalue())
    path.with_suffix(".json").write_text(json.dumps(model_metadata(model), indent=2) + "\n")


def load_model(path) -> LinearModel:
    data = memoryview(Path(path).read_bytes())
    if bytes(data[:8]) != MODEL_MAGIC:
        raise FormatError(f"{path}: not a model file")
    try:
        version, k, d, lam = struct.unpack_from("<IIQd", data, 8)
        if version != MODEL_VERSION:
            raise FormatError(f"{path}: unsupported model version {version}")
        off = 8 + struct.calcsize("<IIQd")
        digest, off = _unpack_str(data, off)
        categories = []
        for _ in range(k):
            name, off = _unpack_str(data, off)
            categories.append(name)
        body = np.frombuffer(data[off:], dtype="<f8").astype(np.float64)
    except (struct.error, UnicodeDecodeError, ValueError) as exc:
        raise FormatError(f"{path}: corrupt model file ({exc})") from exc
    if body.size != 2 * d + k * (d + 1):
        raise FormatError(f"{path}: expected {2 * d + k * (d + 1)} floats, found {body.size}")
    mean, scale = body[:d], body[d:2 * d]
    rows = body[2 * d:].reshape(k, d + 1)
    return LinearModel(categories, rows[:, :d].copy(), rows[:, d].copy(), mean.copy(), scale.copy(), lam, digest)
