"""Scalar statistics: correlation, Fisher Z, Hawkins' variance correction,
Benjamini-Hochberg FDR and Kendall's tau-b."""

from __future__ import annotations

import math
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .dataset import DataError

__all__ = [
    "CORR_CLAMP",
    "FdrDecision",
    "pearson_corr",
    "fisher_z",
    "hawkins_tau2",
    "hawkins_p",
    "normal_two_sided_p",
    "bh_fdr",
    "kendall_tau",
    "kendall_tau_bruteforce",
]

# correlations at +-1 are pulled back to this magnitude before fisher_z
CORR_CLAMP = 1.0 - 1e-12


class FdrDecision(NamedTuple):
    reject: bool
    cutoff: Optional[float]  # None when nothing is significant


def pearson_corr(x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise DataError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise DataError("correlation needs at least 2 samples")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if not (sxx > 0 and syy > 0):
        raise DataError("degenerate column: zero variance")
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def fisher_z(r: float) -> float:
    if not abs(r) < 1:
        raise ValueError(f"fisher_z needs |r| < 1, got {r}")
    return 0.5 * math.log((1 + r) / (1 - r))


def hawkins_tau2(xs, ys) -> float:
    """Mean of xs_i^2 * ys_i^2 for standardized inputs.

    This is the asymptotic variance of sqrt(N) * fisher_z(r) when the
    variables are uncorrelated but not necessarily Gaussian.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.size != ys.size:
        raise DataError(f"length mismatch: {xs.size} vs {ys.size}")
    return float(np.mean(xs * xs * ys * ys))


def normal_two_sided_p(stat):
    """2 * (1 - Phi(|stat|)), vectorized."""
    p = 2.0 * ndtr(-np.abs(stat))
    return np.minimum(p, 1.0)


def hawkins_p(z: float, tau2: float, n: int) -> float:
    if not tau2 > 0:
        raise ValueError(f"tau2 must be positive, got {tau2}")
    if n < 2:
        raise ValueError(f"sample size must be at least 2, got {n}")
    return float(normal_two_sided_p(math.sqrt(n) * z / math.sqrt(tau2)))


def bh_fdr(ps: Sequence[float], alpha: float) -> FdrDecision:
    """Benjamini-Hochberg step-up: the largest p(k) with p(k) <= k * alpha / m."""
    p = np.sort(np.asarray(ps, dtype=float).ravel())
    m = p.size
    if m == 0:
        raise ValueError("bh_fdr needs at least one p-value")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    thresholds = alpha * np.arange(1, m + 1) / m
    below = np.nonzero(p <= thresholds)[0]
    if below.size == 0:
        return FdrDecision(False, None)
    return FdrDecision(True, float(p[below[-1]]))


def _count_inversions(seq: list) -> int:
    """Number of pairs i < j with seq[i] > seq[j]; sorts seq in place."""
    n = len(seq)
    if n < 2:
        return 0
    buf = seq[:]
    inversions = 0
    width = 1
    src, dst = seq, buf
    # bottom-up merge sort; ties are merged left-first so they never count
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    dst[k] = src[j]
                    inversions += mid - i
                    j += 1
                else:
                    dst[k] = src[i]
                    i += 1
                k += 1
            if i < mid:
                dst[k:hi] = src[i:mid]
            elif j < hi:
                dst[k:hi] = src[j:hi]
        src, dst = dst, src
        width *= 2
    if src is not seq:
        seq[:] = src
    return inversions


def _tied_pairs(sorted_vals: np.ndarray) -> int:
    if sorted_vals.size == 0:
        return 0
    change = np.flatnonzero(sorted_vals[1:] != sorted_vals[:-1]) + 1
    bounds = np.concatenate(([0], change, [sorted_vals.size]))
    t = np.diff(bounds)
    return int(np.sum(t * (t - 1) // 2))


def kendall_tau(x, y) -> float:
    """Tie-corrected Kendall tau-b in O(N log N) (Knight's algorithm)."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = x.size
    if n != y.size:
        raise DataError(f"length mismatch: {n} vs {y.size}")
    if n < 2:
        raise DataError("kendall_tau needs at least 2 samples")

    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    n0 = n * (n - 1) // 2
    n1 = _tied_pairs(xs)

    # pairs tied in both x and y
    change = np.flatnonzero((xs[1:] != xs[:-1]) | (ys[1:] != ys[:-1])) + 1
    bounds = np.concatenate(([0], change, [n]))
    t = np.diff(bounds)
    n3 = int(np.sum(t * (t - 1) // 2))

    ylist = ys.tolist()
    swaps = _count_inversions(ylist)
    n2 = _tied_pairs(np.asarray(ylist))

    denom = (n0 - n1) * (n0 - n2)
    if denom == 0:
        raise DataError("kendall_tau undefined: a vector is entirely tied")
    # concordant - discordant over pairs untied in both coordinates
    s = n0 - n1 - n2 + n3 - 2 * swaps
    return s / math.sqrt(denom)


def kendall_tau_bruteforce(x, y) -> float:
    """O(N^2) pairwise tau-b, kept as an independent reference."""
    x = list(map(float, x))
    y = list(map(float, y))
    n = len(x)
    conc = disc = tx = ty = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = (x[i] > x[j]) - (x[i] < x[j])
            dy = (y[i] > y[j]) - (y[i] < y[j])
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                tx += 1
            elif dy == 0:
                ty += 1
            elif dx == dy:
                conc += 1
            else:
                disc += 1
    denom = (conc + disc + tx) * (conc + disc + ty)
    if denom == 0:
        raise DataError("kendall_tau undefined: a vector is entirely tied")
    return (conc - disc) / math.sqrt(denom)
