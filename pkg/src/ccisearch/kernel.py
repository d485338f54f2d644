"""Uniform-kernel regression residuals with MAD-scaled bandwidths."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from .dataset import DataError, mad

__all__ = [
    "MAD_TO_SD",
    "TINY_WIDTH",
    "bandwidth",
    "combine_bandwidths",
    "conditioning_bandwidth",
    "residuals",
    "predictions",
]

MAD_TO_SD = 1.4826
TINY_WIDTH = 1e3 * np.finfo(float).eps

# distance-matrix entries per block; block shapes depend on N only, never on
# the worker count, so results are bitwise identical for any parallelism
_BLOCK_ENTRIES = 1 << 15


def bandwidth(z) -> float:
    """h = 1.4826 * MAD * ((4/3) / N) ** 0.2 for one conditioning column.

    A zero MAD falls back to the sample std in place of 1.4826 * MAD, and a
    constant column gets a tiny positive width.
    """
    z = np.asarray(z, dtype=float).ravel()
    n = z.size
    if n < 2:
        raise DataError("bandwidth needs at least 2 samples")
    shrink = ((4.0 / 3.0) / n) ** 0.2
    m = mad(z)
    if m > 0:
        return MAD_TO_SD * m * shrink
    sd = float(np.std(z, ddof=1))
    if sd > 0:
        return sd * shrink
    return TINY_WIDTH


def combine_bandwidths(widths: Sequence[float], m: int | None = None) -> float:
    widths = list(widths)
    if not widths:
        raise ValueError("combine_bandwidths needs at least one width")
    if m is None:
        m = len(widths)
    if m < 1:
        raise ValueError(f"dimension count must be positive, got {m}")
    return max(widths) * math.sqrt(m)


def conditioning_bandwidth(z: np.ndarray) -> float:
    """Combined width for an N x m conditioning block."""
    z = _as_matrix(z)
    return combine_bandwidths([bandwidth(z[:, k]) for k in range(z.shape[1])])


def _as_matrix(z) -> np.ndarray:
    if isinstance(z, (list, tuple)):
        if len(z) == 0:
            return np.empty((0, 0))
        z = np.column_stack([np.asarray(c, dtype=float).ravel() for c in z])
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    return z


def _predict_block(x, z, h2, lo, hi):
    # exact squared distances from rows lo..hi to every row
    d2 = np.zeros((hi - lo, z.shape[0]))
    for k in range(z.shape[1]):
        diff = z[lo:hi, k, None] - z[None, :, k]
        d2 += diff * diff
    inside = d2 <= h2
    # own row is always inside: kernel(0) = 1
    inside[np.arange(hi - lo), np.arange(lo, hi)] = True
    weight = inside.sum(axis=1)
    total = np.where(inside, x[None, :], 0.0).sum(axis=1)
    return total / weight


def predictions(x, z, width: float, workers: int = 1) -> np.ndarray:
    """Uniform-kernel (radius ``width``) local mean of x at each row of z."""
    x = np.asarray(x, dtype=float).ravel()
    z = _as_matrix(z)
    n = x.size
    if z.shape[0] != n:
        raise DataError(f"length mismatch: x has {n} rows, z has {z.shape[0]}")
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    h2 = width * width
    rows = max(1, _BLOCK_ENTRIES // n)
    blocks = [(lo, min(lo + rows, n)) for lo in range(0, n, rows)]
    if workers <= 1 or len(blocks) == 1:
        parts = [_predict_block(x, z, h2, lo, hi) for lo, hi in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _predict_block(x, z, h2, *b), blocks))
    return np.concatenate(parts)


def residuals(x, z, width: float | None = None, workers: int = 1) -> np.ndarray:
    """x minus its uniform-kernel regression on the conditioning columns z.

    With no conditioning columns x is returned unchanged. ``width`` defaults
    to the combined MAD bandwidth of z.
    """
    x = np.asarray(x, dtype=float).ravel()
    z = _as_matrix(z)
    if z.size == 0 or z.shape[1] == 0:
        if z.shape[0] not in (0, x.size):
            raise DataError("length mismatch between x and z")
        return x.copy()
    if z.shape[0] != x.size:
        raise DataError(f"length mismatch: x has {x.size} rows, z has {z.shape[0]}")
    if width is None:
        width = conditioning_bandwidth(z)
    return x - predictions(x, z, width, workers=workers)
