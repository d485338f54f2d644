import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccisearch.dataset import DataError
from ccisearch.stats import (
    bh_fdr,
    fisher_z,
    hawkins_p,
    hawkins_tau2,
    kendall_tau,
    kendall_tau_bruteforce,
    pearson_corr,
)


def test_pearson_examples():
    x = np.array([4.0, 1.0, 7.0, 2.0])
    assert pearson_corr(x, x) == pytest.approx(1.0)
    assert pearson_corr([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    # hand computation: cov sum 3, sxx 2, syy 42/9
    assert pearson_corr([1, 2, 3], [1, 2, 4]) == pytest.approx(3 / math.sqrt(2 * 42 / 9))
    assert pearson_corr([1, 2, 3], [1, 2, 4]) == pytest.approx(0.981, abs=1e-3)


def test_pearson_errors():
    with pytest.raises(DataError):
        pearson_corr([1, 1, 1], [1, 2, 3])
    with pytest.raises(DataError):
        pearson_corr([1, 2], [1, 2, 3])


@settings(max_examples=100)
@given(
    st.integers(0, 10_000),
    st.floats(0.01, 100),
    st.floats(-50, 50),
    st.floats(0.01, 100),
    st.floats(-50, 50),
)
def test_pearson_affine_invariance(seed, a, b, c, d):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=30), rng.normal(size=30)
    assert abs(pearson_corr(a * x + b, c * y + d) - pearson_corr(x, y)) < 1e-10


def test_fisher_z_examples():
    assert fisher_z(0.0) == 0.0
    assert fisher_z(0.5) == pytest.approx(0.5 * math.log(3), abs=1e-6)
    assert fisher_z(0.5) == pytest.approx(0.549306, abs=1e-6)
    assert fisher_z(-0.9) == pytest.approx(-1.472219, abs=1e-6)
    for bad in (1.0, -1.0, 1.5):
        with pytest.raises(ValueError):
            fisher_z(bad)


@given(st.floats(-0.999999, 0.999999))
def test_fisher_z_odd(r):
    assert abs(fisher_z(-r) + fisher_z(r)) < 1e-12


def test_hawkins_tau2_examples():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=5000), rng.normal(size=5000)
    assert abs(hawkins_tau2(a, b) - 1) < 0.1
    # E[Z^4] = 3; Monte-Carlo reference with a larger independent draw
    z = np.random.default_rng(1).normal(size=200_000)
    mc = float(np.mean(z**4))
    assert abs(mc - 3) < 0.05
    x = rng.normal(size=20000)
    assert abs(hawkins_tau2(x, x) - mc) < 0.25
    assert hawkins_tau2([-1, 1, 1, -1], [1, -1, 1, -1]) == 1.0
    with pytest.raises(DataError):
        hawkins_tau2([1, 2], [1, 2, 3])


def test_hawkins_p_examples():
    n = 400
    assert hawkins_p(0.0, 1.0, n) == 1.0
    assert hawkins_p(1.959964 / math.sqrt(n), 1.0, n) == pytest.approx(0.05, abs=1e-4)
    for z in (0.01, 0.1, -0.2):
        assert hawkins_p(z, 4.0, n) == pytest.approx(hawkins_p(z / 2, 1.0, n), rel=1e-12)
    with pytest.raises(ValueError):
        hawkins_p(0.1, 0.0, n)


@given(st.floats(0, 0.3), st.floats(0, 0.3), st.floats(0.2, 5))
def test_hawkins_p_monotone(z1, z2, tau2):
    lo, hi = sorted((z1, z2))
    assert hawkins_p(hi, tau2, 100) <= hawkins_p(lo, tau2, 100)
    assert hawkins_p(-hi, tau2, 100) <= hawkins_p(lo, tau2, 100)


def test_bh_examples():
    d = bh_fdr([0.3, 0.02, 0.001, 0.04], 0.05)
    assert d.reject and d.cutoff == 0.02
    d = bh_fdr([1.0, 1.0, 1.0], 0.05)
    assert not d.reject and d.cutoff is None
    d = bh_fdr([0.05], 0.05)
    assert d.reject and d.cutoff == 0.05
    with pytest.raises(ValueError):
        bh_fdr([], 0.05)
    with pytest.raises(ValueError):
        bh_fdr([0.1], 1.0)


def _rejected(ps, alpha):
    d = bh_fdr(ps, alpha)
    return {i for i, p in enumerate(ps) if d.reject and p <= d.cutoff}


@given(st.lists(st.floats(0, 1), min_size=1, max_size=40), st.floats(0.001, 0.5), st.floats(0.001, 0.5))
def test_bh_monotone_in_alpha(ps, a1, a2):
    lo, hi = sorted((a1, a2))
    assert _rejected(ps, lo) <= _rejected(ps, hi)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.randoms())
def test_bh_order_insensitive(ps, rnd):
    shuffled = list(ps)
    rnd.shuffle(shuffled)
    assert bh_fdr(ps, 0.05) == bh_fdr(shuffled, 0.05)


def test_kendall_examples():
    assert kendall_tau([1, 2, 3], [1, 2, 3]) == 1.0
    assert kendall_tau([1, 2, 3], [3, 2, 1]) == -1.0
    assert kendall_tau([1, 2, 3], [2, 1, 3]) == pytest.approx(1 / 3)
    assert kendall_tau_bruteforce([1, 2, 3], [2, 1, 3]) == pytest.approx(1 / 3)
    with pytest.raises(DataError):
        kendall_tau([1, 1, 1], [1, 2, 3])
    with pytest.raises(DataError):
        kendall_tau([1, 2], [1, 2, 3])


@settings(max_examples=300)
@given(
    st.integers(2, 60).flatmap(
        lambda n: st.tuples(
            st.lists(st.integers(0, 6), min_size=n, max_size=n),
            st.lists(st.integers(0, 6), min_size=n, max_size=n),
        )
    )
)
def test_kendall_matches_bruteforce_with_ties(xy):
    x, y = xy
    try:
        ref = kendall_tau_bruteforce(x, y)
    except DataError:
        with pytest.raises(DataError):
            kendall_tau(x, y)
        return
    assert kendall_tau(x, y) == ref


def test_kendall_against_scipy():
    from scipy.stats import kendalltau

    rng = np.random.default_rng(5)
    x, y = rng.integers(0, 20, 300), rng.integers(0, 20, 300)
    assert kendall_tau(x, y) == pytest.approx(kendalltau(x, y).statistic, abs=1e-12)
