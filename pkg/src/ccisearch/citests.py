"""Conditional independence tests behind a common interface.

Every test exposes ``independent(x, y, z, data) -> IndependenceDecision``
and a ``name``. Three data-driven tests live here:

* :class:`CciTest` -- kernel-regression residuals, a basis of univariate
  transforms, Hawkins-corrected Fisher Z p-values per basis pair and a
  Benjamini-Hochberg verdict over all pairs.
* :class:`FisherZTest` -- Gaussian partial correlation.
* :class:`RankPartialTest` -- partial correlation on the Kendall-tau based
  nonparanormal correlation matrix.
"""

from __future__ import annotations

import math
import threading
import weakref
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .dataset import DataError, Dataset
from .kernel import conditioning_bandwidth, residuals
from .stats import CORR_CLAMP, bh_fdr, kendall_tau, normal_two_sided_p

__all__ = [
    "COMPOSITE",
    "MIN_CCI_SAMPLES",
    "IndependenceDecision",
    "BasisSpec",
    "power_basis",
    "hermite_basis",
    "parse_basis",
    "basis_pvalues",
    "independent_unconditional",
    "cci",
    "partial_correlation",
    "RankDeficientError",
    "CiTest",
    "CciTest",
    "FisherZTest",
    "RankPartialTest",
    "make_test",
]

COMPOSITE = "composite"
MIN_CCI_SAMPLES = 20
_DEGENERATE_RTOL = 1e-10


@dataclass(frozen=True)
class IndependenceDecision:
    independent: bool
    p_value: Union[float, str]
    detail: Optional[Tuple[float, ...]] = None

    def __bool__(self):
        return self.independent


# ---------------------------------------------------------------------------
# basis functions


@dataclass(frozen=True)
class BasisSpec:
    """An ordered list of univariate transforms (never the constant)."""

    name: str
    functions: Tuple[Callable[[np.ndarray], np.ndarray], ...] = field(repr=False)

    def __post_init__(self):
        if not self.functions:
            raise ValueError("basis must contain at least one function")

    def __len__(self):
        return len(self.functions)

    def expand(self, x: np.ndarray) -> np.ndarray:
        """N x |F| matrix with column k = f_k(x)."""
        return np.column_stack([f(x) for f in self.functions])

    def permuted(self, order: Sequence[int]) -> "BasisSpec":
        return BasisSpec(f"{self.name}[perm]", tuple(self.functions[i] for i in order))


def _power(k):
    return lambda x: x**k


def power_basis(degree: int = 7) -> BasisSpec:
    """{x, x^2, ..., x^degree}."""
    if degree < 1:
        raise ValueError("power basis degree must be at least 1")
    return BasisSpec(f"power:{degree}", tuple(_power(k) for k in range(1, degree + 1)))


def _hermite(n):
    def h(x):
        prev, cur = np.ones_like(x), 2.0 * x
        if n == 1:
            return cur
        for k in range(2, n + 1):
            prev, cur = cur, 2.0 * x * cur - 2.0 * (k - 1) * prev
        return cur

    return h


def hermite_basis(degree: int = 7) -> BasisSpec:
    """Physicists' Hermite polynomials H_1..H_degree (H_0 = 1 excluded)."""
    if degree < 1:
        raise ValueError("hermite basis degree must be at least 1")
    return BasisSpec(f"hermite:{degree}", tuple(_hermite(k) for k in range(1, degree + 1)))


def parse_basis(text: str) -> BasisSpec:
    """Parse ``power:k`` or ``hermite:k`` (k between 1 and 12)."""
    kind, _, deg = text.partition(":")
    try:
        k = int(deg) if deg else 7
    except ValueError:
        raise ValueError(f"bad basis degree in {text!r}") from None
    if not 1 <= k <= 12:
        raise ValueError(f"basis degree must be between 1 and 12, got {k}")
    if kind == "power":
        return power_basis(k)
    if kind == "hermite":
        return hermite_basis(k)
    raise ValueError(f"unknown basis {kind!r}; expected power:k or hermite:k")


# ---------------------------------------------------------------------------
# CCI


def _standardize_columns(m: np.ndarray):
    """Standardize each column (sample std); also flag degenerate columns."""
    centered = m - m.mean(axis=0)
    sd = centered.std(axis=0, ddof=1)
    scale = np.max(np.abs(m), axis=0)
    ok = np.isfinite(sd) & (sd > _DEGENERATE_RTOL * np.maximum(scale, 1.0))
    out = np.zeros_like(centered)
    out[:, ok] = centered[:, ok] / sd[ok]
    return out, ok


def _is_degenerate(v: np.ndarray) -> bool:
    sd = float(np.std(v, ddof=1))
    scale = float(np.max(np.abs(v))) if v.size else 0.0
    return not (np.isfinite(sd) and sd > _DEGENERATE_RTOL * max(scale, 1.0))


def basis_pvalues(x, y, basis: BasisSpec) -> np.ndarray:
    """|F| x |F| matrix of p-values; entry (i, j) tests corr(f_i(x), f_j(y)) = 0.

    Inputs are standardized before expansion. Degenerate inputs or
    transformed columns give p = 1.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = x.size
    if n != y.size:
        raise DataError(f"length mismatch: {n} vs {y.size}")
    k = len(basis)
    if _is_degenerate(x) or _is_degenerate(y):
        return np.ones((k, k))
    xs = (x - x.mean()) / x.std(ddof=1)
    ys = (y - y.mean()) / y.std(ddof=1)

    fx, okx = _standardize_columns(basis.expand(xs))
    gy, oky = _standardize_columns(basis.expand(ys))

    # fx, gy have sample std 1, so the sample correlation is a scaled dot
    r = (fx.T @ gy) / (n - 1)
    np.clip(r, -CORR_CLAMP, CORR_CLAMP, out=r)
    z = np.arctanh(r)
    tau2 = ((fx * fx).T @ (gy * gy)) / n

    p = np.ones((k, k))
    ok = np.outer(okx, oky) & (tau2 > 0)
    p[ok] = normal_two_sided_p(math.sqrt(n) * z[ok] / np.sqrt(tau2[ok]))
    return p


def _decide(p: np.ndarray, alpha: float, early_exit: bool) -> IndependenceDecision:
    flat = p.ravel()
    if early_exit:
        # p <= alpha / m guarantees the full BH step also rejects
        hits = np.flatnonzero(flat <= alpha / flat.size)
        if hits.size:
            return IndependenceDecision(False, COMPOSITE, tuple(flat[: hits[0] + 1]))
    decision = bh_fdr(flat, alpha)
    return IndependenceDecision(not decision.reject, COMPOSITE, tuple(flat.tolist()))


def independent_unconditional(
    x, y, alpha: float = 0.05, basis: BasisSpec | None = None, early_exit: bool = False
) -> IndependenceDecision:
    """Independence of two sample vectors via correlations of basis transforms."""
    if basis is None:
        basis = power_basis(7)
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    x = np.asarray(x, dtype=float).ravel()
    if x.size < MIN_CCI_SAMPLES:
        raise DataError(f"CCI needs at least {MIN_CCI_SAMPLES} samples, got {x.size}")
    p = basis_pvalues(x, y, basis)
    return _decide(p, alpha, early_exit)


def cci(
    x,
    y,
    z: Sequence = (),
    alpha: float = 0.05,
    basis: BasisSpec | None = None,
    data: Dataset | None = None,
    early_exit: bool = False,
    workers: int = 1,
) -> IndependenceDecision:
    """CCI on variables of ``data`` (names or indices), or on raw vectors if
    ``data`` is None (then ``z`` is a sequence of vectors)."""
    if data is not None:
        xv, yv = data.column(x), data.column(y)
        zm = data.columns(z)
    else:
        xv = np.asarray(x, dtype=float).ravel()
        yv = np.asarray(y, dtype=float).ravel()
        zm = np.column_stack(z) if len(z) else np.empty((xv.size, 0))
    if zm.shape[1]:
        h = conditioning_bandwidth(zm)
        xv = residuals(xv, zm, h, workers=workers)
        yv = residuals(yv, zm, h, workers=workers)
    return independent_unconditional(xv, yv, alpha, basis, early_exit)


# ---------------------------------------------------------------------------
# partial correlation


class RankDeficientError(DataError):
    pass


def partial_correlation(corr, x: int, y: int, s: Sequence[int] = ()) -> float:
    """-inv[x, y] / sqrt(inv[x, x] * inv[y, y]) over the {x, y} + s submatrix."""
    corr = np.asarray(corr, dtype=float)
    idx = [x, y, *s]
    sub = corr[np.ix_(idx, idx)]
    if not s:
        r = float(sub[0, 1])
        return min(1.0, max(-1.0, r))
    try:
        np.linalg.cholesky(sub)
        omega = np.linalg.inv(sub)
    except np.linalg.LinAlgError:
        raise RankDeficientError("rank-deficient conditioning set") from None
    denom = omega[0, 0] * omega[1, 1]
    if not denom > 0:
        raise RankDeficientError("rank-deficient conditioning set")
    r = -omega[0, 1] / math.sqrt(denom)
    return min(1.0, max(-1.0, r))


def _fisher_referral(rho: float, n: int, k: int) -> float:
    if n - k - 3 <= 0:
        raise DataError(f"need more than {k + 3} samples, got {n}")
    rho = min(CORR_CLAMP, max(-CORR_CLAMP, rho))
    return float(normal_two_sided_p(math.sqrt(n - k - 3) * math.atanh(rho)))


# ---------------------------------------------------------------------------
# CiTest implementations


class CiTest:
    """Base for conditional independence tests consumed by the PC search."""

    name = "abstract"

    def independent(self, x, y, z, data: Dataset) -> IndependenceDecision:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


def _canonical(x, y, z):
    a, b = (x, y) if str(x) <= str(y) else (y, x)
    return a, b, tuple(sorted(z, key=str))


class _PerDatasetCache:
    """A small thread-safe cache keyed on (dataset identity, key)."""

    def __init__(self):
        self._store = weakref.WeakKeyDictionary()
        self._lock = threading.Lock()

    def get(self, data, key, compute):
        with self._lock:
            table = self._store.setdefault(data, {})
            if key in table:
                return table[key]
        value = compute()
        with self._lock:
            table.setdefault(key, value)
        return value


class CciTest(CiTest):
    name = "cci"

    def __init__(
        self,
        alpha: float = 0.05,
        basis: BasisSpec | None = None,
        early_exit: bool = False,
        workers: int = 1,
        cache: bool = True,
    ):
        if not 0 < alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
        self.alpha = alpha
        self.basis = basis if basis is not None else power_basis(7)
        self.early_exit = early_exit
        self.workers = workers
        self._cache = _PerDatasetCache() if cache else None

    def __repr__(self):
        return f"CciTest(alpha={self.alpha}, basis={self.basis.name})"

    def residual(self, var, z: tuple, data: Dataset) -> np.ndarray:
        def compute():
            if not z:
                return data.column(var)
            zm = data.columns(z)
            return residuals(data.column(var), zm, conditioning_bandwidth(zm), self.workers)

        if self._cache is None:
            return compute()
        return self._cache.get(data, (var, z), compute)

    def independent(self, x, y, z, data: Dataset) -> IndependenceDecision:
        x, y, z = _canonical(x, y, z)
        if x == y or x in z or y in z:
            raise ValueError(f"variables must be distinct: {x}, {y} | {z}")
        rx = self.residual(x, z, data)
        ry = self.residual(y, z, data)
        return independent_unconditional(rx, ry, self.alpha, self.basis, self.early_exit)


class FisherZTest(CiTest):
    name = "fisher-z"

    def __init__(self, alpha: float = 0.05):
        self.alpha = alpha
        self._cache = _PerDatasetCache()

    def __repr__(self):
        return f"FisherZTest(alpha={self.alpha})"

    def correlation(self, data: Dataset) -> np.ndarray:
        def compute():
            sd = data.values.std(axis=0, ddof=1)
            if np.any(sd == 0):
                bad = [data.variables[i] for i in np.flatnonzero(sd == 0)]
                raise DataError(f"degenerate column(s): {bad}")
            return np.corrcoef(data.values, rowvar=False)

        return self._cache.get(data, "corr", compute)

    def independent(self, x, y, z, data: Dataset) -> IndependenceDecision:
        x, y, z = _canonical(x, y, z)
        c = self.correlation(data)
        rho = partial_correlation(
            c, data.index(x), data.index(y), [data.index(v) for v in z]
        )
        p = _fisher_referral(rho, data.n_samples, len(z))
        return IndependenceDecision(p > self.alpha, p)


def _regularized(psi: np.ndarray) -> np.ndarray:
    try:
        np.linalg.cholesky(psi)
        return psi
    except np.linalg.LinAlgError:
        pass
    eps = 1e-10
    while eps <= 1e-4 * (1 + 1e-9):
        trial = psi + eps * np.eye(psi.shape[0])
        try:
            np.linalg.cholesky(trial)
            return trial
        except np.linalg.LinAlgError:
            eps *= 10
    raise RankDeficientError("rank correlation matrix is not positive definite")


class RankPartialTest(CiTest):
    """Partial correlation on sin(pi/2 * Kendall tau) correlations."""

    name = "rank"

    def __init__(self, alpha: float = 0.05):
        self.alpha = alpha
        self._cache = _PerDatasetCache()
        self._taus = _PerDatasetCache()

    def __repr__(self):
        return f"RankPartialTest(alpha={self.alpha})"

    def _tau(self, data, i, j):
        return self._taus.get(
            data, (i, j), lambda: kendall_tau(data.values[:, i], data.values[:, j])
        )

    def psi(self, data: Dataset, idx: Sequence[int]) -> np.ndarray:
        k = len(idx)
        out = np.eye(k)
        for a in range(k):
            for b in range(a + 1, k):
                i, j = sorted((idx[a], idx[b]))
                out[a, b] = out[b, a] = math.sin(math.pi / 2 * self._tau(data, i, j))
        return out

    def full_psi(self, data: Dataset) -> np.ndarray:
        return self.psi(data, list(range(data.n_vars)))

    def independent(self, x, y, z, data: Dataset) -> IndependenceDecision:
        x, y, z = _canonical(x, y, z)
        idx = [data.index(x), data.index(y), *(data.index(v) for v in z)]
        psi = _regularized(self.psi(data, idx))
        rho = partial_correlation(psi, 0, 1, list(range(2, len(idx))))
        p = _fisher_referral(rho, data.n_samples, len(z))
        return IndependenceDecision(p > self.alpha, p)


def make_test(name: str, alpha: float = 0.05, basis: str | BasisSpec = "power:7", early_exit=False):
    if isinstance(basis, str):
        basis = parse_basis(basis)
    if name == "cci":
        return CciTest(alpha, basis, early_exit=early_exit)
    if name in ("fisher-z", "fisherz", "fisher_z"):
        return FisherZTest(alpha)
    if name == "rank":
        return RankPartialTest(alpha)
    if name == "kci":
        raise ValueError("kci is not implemented: the kernel conditional independence test is out of scope")
    raise ValueError(f"unknown test {name!r}; expected cci, fisher-z or rank")
