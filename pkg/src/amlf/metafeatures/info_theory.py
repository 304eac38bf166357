"""Entropy, mutual information and concentration kernels on discrete codes (bits)."""

from __future__ import annotations

import numpy as np

N_BINS = 10


def discretize(v, bins: int = N_BINS) -> np.ndarray:
    """Equal-width binning into ``bins`` codes; a constant column maps to one bin."""
    v = np.asarray(v, dtype=float)
    lo, hi = np.nanmin(v), np.nanmax(v)
    if not np.isfinite(lo) or hi <= lo:
        return np.zeros(v.shape, dtype=np.int64)
    codes = np.floor((v - lo) / (hi - lo) * bins).astype(np.int64)
    return np.clip(codes, 0, bins - 1)


def _codes(v) -> np.ndarray:
    v = np.asarray(v)
    if v.dtype.kind in "iu":
        return v.astype(np.int64)
    return np.unique(v, return_inverse=True)[1].astype(np.int64)


def entropy(codes) -> float:
    c = _codes(codes)
    if c.size == 0:
        return float("nan")
    p = np.bincount(c - c.min()) / c.size
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _joint(a, b) -> np.ndarray:
    a = _codes(a)
    b = _codes(b)
    a = a - a.min()
    b = b - b.min()
    width = int(b.max()) + 1
    return a * width + b


def joint_entropy(a, b) -> float:
    return entropy(_joint(a, b))


def mutual_information(a, b) -> float:
    mi = entropy(a) + entropy(b) - joint_entropy(a, b)
    return max(mi, 0.0)


def contingency(x, y) -> np.ndarray:
    x = _codes(x)
    y = _codes(y)
    x = x - x.min()
    y = y - y.min()
    nx, ny = int(x.max()) + 1, int(y.max()) + 1
    table = np.bincount(x * ny + y, minlength=nx * ny).reshape(nx, ny)
    return table / x.size


def goodman_kruskal_tau(x, y) -> float:
    """Proportional reduction in error predicting ``y`` once ``x`` is known."""
    pij = contingency(x, y)
    pi = pij.sum(axis=1)
    pj2 = float((pij.sum(axis=0) ** 2).sum())
    if pj2 >= 1.0 - 1e-15:
        return float("nan")
    nz = pi > 0
    within = float((pij[nz] ** 2 / pi[nz, None]).sum())
    return (within - pj2) / (1.0 - pj2)
