import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ranking_samples
from genrank.exceptions import InputError, SizeError
from genrank.kernels import KernelSpec, kernel_bounds, kernel_eval
from genrank.mmd import (
    EmpiricalSample,
    empirical_quantile,
    generalizability,
    mmd_biased,
    mmd_curve_samples,
    mmd_distribution,
    n_grid,
    n_star_exact,
)
from genrank.synthetic import explicit_distribution, point_mass, sample_from, two_point_distribution, uniform_distribution


def naive_mmd2(spec, x, y):
    n = len(x)
    kxx = sum(kernel_eval(spec, a, b) for a in x for b in x)
    kyy = sum(kernel_eval(spec, a, b) for a in y for b in y)
    kxy = sum(kernel_eval(spec, a, b) for a in x for b in y)
    return (kxx + kyy - 2 * kxy) / n**2


def test_mmd_examples():
    spec = KernelSpec.jaccard(3, 1)
    assert mmd_biased(spec, [(0, 0, 0)], [(0, 1, 1)]) == pytest.approx(math.sqrt(4 / 3))
    assert mmd_biased(spec, [(0, 1, 2), (1, 0, 2)], [(0, 1, 2), (1, 0, 2)]) == 0.0


def test_mmd_unequal_sizes():
    with pytest.raises(SizeError):
        mmd_biased(KernelSpec.jaccard(3, 1), [(0, 1, 2)], [(0, 1, 2), (1, 0, 2)])


@given(st.data())
def test_mmd_matches_double_loop(data):
    n_a = data.draw(st.integers(2, 4))
    n = data.draw(st.integers(1, 5))
    x = data.draw(ranking_samples(n_a, n, n))
    y = data.draw(ranking_samples(n_a, n, n))
    for spec in (KernelSpec.jaccard(n_a, 1), KernelSpec.mallows(n_a), KernelSpec.borda(n_a, 0)):
        m = mmd_biased(spec, x, y)
        assert abs(m**2 - max(naive_mmd2(spec, x, y), 0.0)) < 1e-12
        assert m == pytest.approx(mmd_biased(spec, y, x), abs=1e-15)
        b = kernel_bounds(spec)
        assert 0 <= m <= math.sqrt(2 * (b.k_sup - b.k_inf)) + 1e-12


def test_empirical_quantile():
    assert empirical_quantile(np.arange(1, 101), 0.95) == 95
    assert empirical_quantile([5.0], 0.3) == 5.0
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.normal(size=rng.integers(1, 50))
        a = float(rng.uniform(0.01, 0.99))
        assert empirical_quantile(v, a) == np.sort(v)[math.ceil(a * len(v)) - 1]
    with pytest.raises(InputError):
        empirical_quantile([1.0], 1.0)
    with pytest.raises(InputError):
        empirical_quantile([], 0.5)


def test_distribution_point_mass_and_determinism():
    spec = KernelSpec.mallows(3)
    pm = EmpiricalSample.from_rankings([(0, 1, 2)] * 10)
    assert np.all(mmd_distribution(pm, spec, 3, 50).values == 0)
    smp = sample_from(uniform_distribution(3), 20, seed=4)
    a = mmd_distribution(smp, spec, 10, 200, "subsample", seed=9).values
    b = mmd_distribution(smp, spec, 10, 200, "subsample", seed=9).values
    assert np.array_equal(a, b)
    assert len(a) == 200
    assert a.max() <= math.sqrt(2 * (1 - kernel_bounds(spec).k_inf))


def test_subsample_size_guard():
    smp = sample_from(uniform_distribution(3), 10)
    with pytest.raises(SizeError):
        mmd_distribution(smp, KernelSpec.jaccard(3, 1), 6, 10, "subsample")
    # bootstrap has no such limit
    assert len(mmd_distribution(smp, KernelSpec.jaccard(3, 1), 6, 10, "bootstrap").values) == 10
    with pytest.raises(InputError):
        mmd_distribution(smp, KernelSpec.jaccard(3, 1), 2, 10, "jackknife")


def test_subsample_halves_are_disjoint():
    # with N = 2n and all results distinct, both halves together use every result once
    smp = EmpiricalSample.from_rankings(
        [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    )
    spec = KernelSpec.mallows(3)
    vals = mmd_distribution(smp, spec, 3, 500, "subsample", seed=1).values
    # a disjoint split never compares a half against itself, so MMD is never 0
    assert vals.min() > 0


def test_kernel_kind_mismatch():
    smp = EmpiricalSample.from_vectors(np.random.default_rng(0).normal(size=(6, 3)))
    with pytest.raises(InputError):
        smp.gram(KernelSpec.jaccard(3, 1))
    with pytest.raises(InputError):
        EmpiricalSample.from_rankings([(0, 1)]).gram(KernelSpec.jaccard(3, 1))


def test_generalizability_properties():
    spec = KernelSpec.jaccard(5, 1)
    pm = EmpiricalSample.from_rankings([(0, 1, 2, 3, 4)] * 8)
    assert generalizability(pm, spec, 4, 0.0) == 1.0
    smp = sample_from(two_point_distribution(), 20, seed=2)
    assert generalizability(smp, spec, 10, math.sqrt(2.0)) == 1.0
    gs = [generalizability(smp, spec, 10, e, 200, seed=5) for e in np.linspace(0, 1.5, 16)]
    assert all(b >= a for a, b in zip(gs, gs[1:]))


def test_generalizability_trend_in_n():
    spec = KernelSpec.mallows(3)
    smp = sample_from(uniform_distribution(3), 80, seed=0)
    gs = [generalizability(smp, spec, n, 0.3, 400, seed=1) for n in (2, 5, 10, 20, 40)]
    assert all(b >= a - 0.02 for a, b in zip(gs, gs[1:]))


def test_n_grid():
    assert n_grid(3) == []
    assert n_grid(10) == [2, 3, 4, 5]
    assert n_grid(10, start=1) == [1, 2, 3, 4, 5]
    g = n_grid(1000)
    assert g[0] == 2 and g[-1] == 500 and len(g) <= 20 and g == sorted(set(g))


def test_curve_independent_of_threads():
    smp = sample_from(uniform_distribution(4), 40, seed=3)
    spec = KernelSpec.jaccard(4, 1)
    a = mmd_curve_samples(smp, spec, n_grid(40), 100, "subsample", 7, threads=1)
    b = mmd_curve_samples(smp, spec, n_grid(40), 100, "subsample", 7, threads=4)
    assert all(np.array_equal(a[n].values, b[n].values) for n in a)


def test_n_star_exact_examples():
    spec = KernelSpec.jaccard(3, 1)
    assert n_star_exact(point_mass((0, 1, 2)), spec, 0.95, 0.1) == 1
    # two results the Borda kernel cannot tell apart
    pair = explicit_distribution([((0, 0, 0), 0.5), ((0, 1, 1), 0.5)])
    borda = KernelSpec.borda(3, 0, 1 / 3)
    assert n_star_exact(pair, borda, 0.99, 1e-6) == 1
    jac = KernelSpec.jaccard(5, 1)
    eps = math.sqrt(0.1)
    n = n_star_exact(two_point_distribution(), jac, 0.74, eps)
    assert n is not None and n <= 10
    # unreachable target gives the sentinel
    assert n_star_exact(uniform_distribution(3), spec, 0.999, 1e-3, n_max=5, n_rep=100) is None
