"""Brute-force reference implementations used as test oracles.

Nothing here imports the code under test; each function recomputes its
quantity the slow, obvious way.
"""
from __future__ import annotations

import math

import numpy as np


def brute_sq_edt(mask, seeds="inside", boundary="ignore"):
    """All-pairs squared distance to the nearest seed, integer arithmetic."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    seed_bits = mask if seeds == "inside" else ~mask
    sy, sx = np.nonzero(seed_bits)
    if boundary == "background" and seeds == "outside":
        ring = [(y, -1) for y in range(-1, h + 1)] + [(y, w) for y in range(-1, h + 1)]
        ring += [(-1, x) for x in range(w)] + [(h, x) for x in range(w)]
        ry, rx = np.array(ring).T
        sy, sx = np.concatenate([sy, ry]), np.concatenate([sx, rx])
    if sy.size == 0:
        return None
    yy, xx = np.mgrid[:h, :w]
    d2 = (yy[..., None].astype(np.int64) - sy) ** 2 + (xx[..., None].astype(np.int64) - sx) ** 2
    return d2.min(axis=-1)


def brute_dilate(mask, radius):
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    out = np.zeros_like(mask)
    pts = list(zip(*np.nonzero(mask)))
    for y in range(h):
        for x in range(w):
            out[y, x] = any((y - py) ** 2 + (x - px) ** 2 <= radius * radius for py, px in pts)
    return out


def stamp_dilate(mask, radius):
    """Union of the mask shifted by every integer offset inside the disc."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    out = np.zeros_like(mask)
    r = int(math.floor(radius))
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy * dy + dx * dx > radius * radius or abs(dy) >= h or abs(dx) >= w:
                continue
            out[max(dy, 0):h + min(dy, 0), max(dx, 0):w + min(dx, 0)] |= \
                mask[max(-dy, 0):h + min(-dy, 0), max(-dx, 0):w + min(-dx, 0)]
    return out


def brute_crown_cells(mask, n_layers):
    """Cell index by thresholding float distances against d_max / 2**k."""
    d = np.sqrt(brute_sq_edt(mask, "outside", "background").astype(float))
    d_max = d[mask].max()
    cells = np.full(mask.shape, -1)
    for y, x in zip(*np.nonzero(mask)):
        k = 0
        while k < n_layers - 1 and d[y, x] <= d_max / 2.0 ** (k + 1):
            k += 1
        cells[y, x] = k
    return cells


def brute_quadrants(mask):
    ys, xs = np.nonzero(mask)
    from fractions import Fraction

    cx, cy = Fraction(int(xs.sum()), xs.size), Fraction(int(ys.sum()), ys.size)
    cells = np.full(mask.shape, -1)
    for y, x in zip(ys, xs):
        cells[y, x] = (1 if x >= cx else 0) + (2 if y >= cy else 0)
    return cells


def _grad_at(img, y, x):
    h, w = img.shape
    if w == 1:
        gx = 0.0
    elif x == 0:
        gx = img[y, 1] - img[y, 0]
    elif x == w - 1:
        gx = img[y, w - 1] - img[y, w - 2]
    else:
        gx = (img[y, x + 1] - img[y, x - 1]) / 2.0
    if h == 1:
        gy = 0.0
    elif y == 0:
        gy = img[1, x] - img[0, x]
    elif y == h - 1:
        gy = img[h - 1, x] - img[h - 2, x]
    else:
        gy = (img[y + 1, x] - img[y - 1, x]) / 2.0
    return gx, gy


def reference_sift(img, x, y, s, mask=None, frame=None):
    """Straight-line eSIFT/eMSIFT for one grid point, tent-function form."""
    h, w = img.shape
    frame = frame or (0.0, 0.0, float(w), float(h))
    x0, y0 = x - s // 2, y - s // 2
    c = (s - 1) / 2.0
    sigma = s / 2.0
    cell = s / 4.0
    hist = [[[0.0] * 8 for _ in range(4)] for _ in range(4)]
    for i in range(s):
        for j in range(s):
            py, px = y0 + i, x0 + j
            gx, gy = _grad_at(img, py, px)
            m = math.sqrt(gx * gx + gy * gy)
            if mask is not None and not mask[py, px]:
                m = 0.0
            if m == 0.0:
                continue
            ang = math.atan2(gy, gx)
            if ang < 0:
                ang += 2 * math.pi
            o = ang / (math.pi / 4)
            b = int(math.floor(o))
            f = o - b
            g = math.exp(-((i - c) ** 2 + (j - c) ** 2) / (2 * sigma * sigma))
            uy = (i + 0.5) / cell - 0.5
            ux = (j + 0.5) / cell - 0.5
            for cy in range(4):
                wy = max(0.0, 1.0 - abs(uy - cy))
                for cx in range(4):
                    wx = max(0.0, 1.0 - abs(ux - cx))
                    if wy == 0.0 or wx == 0.0:
                        continue
                    hist[cy][cx][b % 8] += g * wy * wx * m * (1 - f)
                    hist[cy][cx][(b + 1) % 8] += g * wy * wx * m * f
    v = [hist[cy][cx][o] for cy in range(4) for cx in range(4) for o in range(8)]
    norm = math.sqrt(sum(t * t for t in v))
    if norm > 1e-12:
        v = [min(t / norm, 0.2) for t in v]
        norm = math.sqrt(sum(t * t for t in v))
        v = [t / norm for t in v]
    else:
        v = [0.0] * 128
    fx, fy, fw, fh = frame
    total, count = 0.0, 0
    for i in range(s):
        for j in range(s):
            if mask is None or mask[y0 + i, x0 + j]:
                total += img[y0 + i, x0 + j]
                count += 1
    mean = total / count if count else 0.0
    clamp = lambda t: min(1.0, max(0.0, t))  # noqa: E731
    return np.array(v + [clamp((x - fx) / fw), clamp((y - fy) / fh), clamp(s / max(fw, fh)), clamp(mean)])


def jacobi_eigh(a, tol=1e-12, max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix."""
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        if math.sqrt(float(np.sum(a[off_mask] ** 2))) < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                if abs(theta) > 1e150:
                    t = 1 / (2 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                cs = 1 / math.sqrt(t * t + 1)
                sn = t * cs
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = cs
                rot[p, q], rot[q, p] = sn, -sn
                a = rot.T @ a @ rot
                v = v @ rot
    return np.diag(a).copy(), v


def jacobi_o2p(x, eps, power):
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    a = sum(np.outer(r, r) for r in x) / n + eps * np.eye(d)
    w, v = jacobi_eigh(a)
    log_a = v @ np.diag(np.log(w)) @ v.T
    out = []
    for i in range(d):
        for j in range(i, d):
            out.append(log_a[i, j] if i == j else math.sqrt(2) * log_a[i, j])
    out = np.array(out)
    return np.sign(out) * np.abs(out) ** power


def gd_ridge(z, t, lam, tol=1e-10, max_iter=2_000_000):
    """Gradient descent on sum (z w + b - t)^2 + lam |w|^2."""
    n, d = z.shape
    aug = np.hstack([z, np.ones((n, 1))])
    reg = np.diag([lam] * d + [0.0])
    lip = 2 * np.linalg.eigvalsh(aug.T @ aug + reg).max()
    theta = np.zeros(d + 1)
    for _ in range(max_iter):
        g = 2 * aug.T @ (aug @ theta - t) + 2 * reg @ theta
        if np.linalg.norm(g) < tol:
            break
        theta -= g / lip
    return theta[:d], theta[d]


def triple_loop_aac(preds, gts, n_categories, include_background=True):
    tp = [0] * n_categories
    fp = [0] * n_categories
    fn = [0] * n_categories
    for iid in gts:
        gt, pr = gts[iid], preds[iid]
        h, w = gt.shape
        for y in range(h):
            for x in range(w):
                g, p = int(gt[y, x]), int(pr[y, x])
                if g == 255:
                    continue
                for c in range(n_categories):
                    if g == c and p == c:
                        tp[c] += 1
                    elif p == c:
                        fp[c] += 1
                    elif g == c:
                        fn[c] += 1
    acc = []
    for c in range(n_categories):
        den = tp[c] + fp[c] + fn[c]
        acc.append(100.0 * tp[c] / den if den else None)
    used = [a for c, a in enumerate(acc) if a is not None and (include_background or c != 0)]
    return acc, (sum(used) / len(used) if used else 0.0)
