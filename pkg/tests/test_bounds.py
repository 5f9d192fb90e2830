import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dictcoh import bounds, matgen
from dictcoh.coherence import coherence
from dictcoh.errors import DomainError


def test_chi2_examples():
    assert bounds.chi2_lower_tail_bound(5, 1e-12) == pytest.approx(1.0)
    assert bounds.chi2_lower_tail_bound(5, math.log(2)) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(DomainError):
        bounds.chi2_lower_tail_bound(5, 0.0)


def test_chi2_monte_carlo():
    m, x = 100, 2.0
    z = np.random.default_rng(1).chisquare(m, 100_000)
    freq = np.mean(z - m <= -bounds.chi2_lower_threshold(m, x))
    assert freq <= bounds.chi2_lower_tail_bound(m, x)


def test_inner_product_examples():
    assert bounds.inner_product_tail_bound(100, 1e-12) == pytest.approx(2.0)
    assert bounds.inner_product_tail_bound(100, 0.5) == pytest.approx(2 * math.exp(-5), rel=1e-14)
    assert bounds.inner_product_tail_bound(100, 0.5) == pytest.approx(0.01348, abs=1e-5)
    with pytest.raises(DomainError):
        bounds.inner_product_tail_bound(0, 0.5)


def test_inner_product_monte_carlo():
    m, x, draws = 100, 0.5, 100_000
    rng = np.random.default_rng(2)
    hits = 0
    for _ in range(10):
        u = rng.standard_normal((draws // 10, m)) / np.sqrt(m)
        v = rng.standard_normal((draws // 10, m)) / np.sqrt(m)
        hits += np.count_nonzero(np.abs(np.einsum("ij,ij->i", u, v)) >= x)
    assert hits / draws <= bounds.inner_product_tail_bound(m, x)


def test_coherence_tail_arithmetic_oracle():
    m, n, eps, a = 1000, 2000, 0.5, 0.8
    first = math.exp(-m * a ** 2 * eps ** 2 / (4 * (1 + a * eps / 2)))
    second = math.exp(-m / 4 * (1 - a) ** 2)
    expected = n * (n - 1) / 2 * (first + second)
    got = bounds.coherence_tail_bound(m, n, eps, a)
    assert got.raw == pytest.approx(expected, rel=1e-14)
    assert got.clamped == 1.0
    union = bounds.coherence_tail_bound(m, n, eps, a, form="union")
    assert union.raw == pytest.approx(2 * expected, rel=1e-14)


def test_coherence_tail_vacuous_near_one():
    b = bounds.coherence_tail_bound(100, 10, 0.5, 1 - 1e-9)
    assert b.raw >= 10 * 9 / 2
    assert b.clamped == 1.0


def test_coherence_tail_domain():
    for kwargs in ({"eps": 0.0}, {"eps": 1.0}, {"a": 0.0}, {"a": 1.5}):
        args = {"m": 10, "n": 20, "eps": 0.5, "a": 0.5, **kwargs}
        with pytest.raises(DomainError):
            bounds.coherence_tail_bound(**args)
    with pytest.raises(ValueError):
        bounds.coherence_tail_bound(10, 20, 0.5, 0.5, ensemble="uniform_l1")


def test_optimized_a_beats_grid():
    m, n, eps = 400, 800, 0.4
    a_star, best = bounds.coherence_tail_bound_opt(m, n, eps)
    assert best.raw <= bounds.coherence_tail_bound(m, n, eps, 0.5).raw
    grid = np.arange(1, 1000) / 1000
    vals = [bounds.coherence_tail_bound(m, n, eps, a).raw for a in grid]
    assert best.raw <= min(vals) * (1 + 1e-9)
    assert 0 < a_star < 1


def test_tail_monotone_in_eps_and_m():
    assert (bounds.coherence_tail_bound_opt(300, 600, 0.8)[1].raw
            <= bounds.coherence_tail_bound_opt(300, 600, 0.5)[1].raw)
    vals = [bounds.coherence_tail_bound(m, 200, 0.5, 0.6).raw for m in range(50, 1000, 50)]
    assert np.all(np.diff(vals) < 0)


@given(st.integers(1, 5000), st.integers(2, 5000), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
@settings(max_examples=100, deadline=None)
def test_bounds_nonnegative_and_clamped(m, n, eps, a):
    for ens in ("gaussian", "bernoulli"):
        b = bounds.coherence_tail_bound(m, n, eps, a, ensemble=ens)
        assert b.raw >= 0 and 0 <= b.clamped <= 1


def test_bernoulli_tail_is_hoeffding():
    b = bounds.coherence_tail_bound(100, 50, 0.5, 0.6, ensemble="bernoulli")
    assert b.raw == pytest.approx(50 * 49 / 2 * 2 * math.exp(-100 * 0.25 / 2), rel=1e-14)
    # unit-norm columns: the split parameter and the union/printed form do not matter
    assert bounds.coherence_tail_bound(100, 50, 0.5, 0.1, ensemble="bernoulli") == b
    assert bounds.coherence_tail_bound(100, 50, 0.5, 0.6, ensemble="bernoulli", form="union") == b


def test_bernoulli_tail_at_one_matches_mu_one_bound():
    b = bounds.coherence_tail_bound(20, 40, 1 - 1e-15, 0.5, ensemble="bernoulli")
    assert b.raw == pytest.approx(bounds.bernoulli_mu_equals_one_bound(20, 40), rel=1e-12)


def test_bernoulli_empirical_tail_below_bound():
    grid = [0.5, 0.6, 0.7]
    freq, _ = bounds.empirical_coherence_tail(50, 100, grid, 100, seed=9, ensemble="bernoulli")
    for e, f in zip(grid, freq):
        assert f <= bounds.coherence_tail_bound(50, 100, e, 0.5, ensemble="bernoulli").clamped


def test_bernoulli_mu_one_examples():
    assert bounds.bernoulli_mu_equals_one_bound(0, 7) == 42
    assert bounds.bernoulli_mu_equals_one_bound(10, 2) == pytest.approx(2 * math.exp(-5))


def test_bernoulli_mu_one_monte_carlo():
    m, n = 20, 40
    hits = sum(coherence(matgen.gen_bernoulli(m, n, t)) >= 1 - 1e-12 for t in range(10_000))
    assert hits / 10_000 <= bounds.bernoulli_mu_equals_one_bound(m, n)


def test_concentration_examples():
    v = bounds.concentration_probability(0, 0.5)
    assert v.raw == -1.0 and v.clamped == 0.0
    assert bounds.c0(0.6) == pytest.approx(0.054, abs=1e-15)
    printed = bounds.concentration_probability(100, 0.5, form="printed")
    assert printed.raw < 0
    with pytest.raises(DomainError):
        bounds.concentration_probability(10, 1.0)


@pytest.mark.xfail(strict=True, reason="singular values of a 200x400 Gaussian matrix lie "
                   "near sqrt(2) +- 1, outside [sqrt(0.5), sqrt(1.5)]")
def test_concentration_singular_values_monte_carlo():
    eta, trials = 0.5, 200
    inside = 0
    for t in range(trials):
        s = np.linalg.svd(matgen.gen_gaussian(200, 400, t).entries, compute_uv=False)
        inside += np.sqrt(1 - eta) <= s[-1] and s[0] <= np.sqrt(1 + eta)
    assert inside / trials >= bounds.concentration_probability(200, eta).clamped


def test_concentration_fixed_vector_monte_carlo():
    eta, trials = 0.5, 200
    x = np.random.default_rng(4).standard_normal(400)
    x /= np.linalg.norm(x)
    inside = 0
    for t in range(trials):
        y = matgen.gen_gaussian(200, 400, t).entries @ x
        inside += (1 - eta) <= y @ y <= (1 + eta)
    assert inside / trials >= bounds.concentration_probability(200, eta).clamped


def test_query_validation():
    q = bounds.TailBoundQuery(m=100, n=200, eps=0.5)
    out = q.evaluate()
    assert out["coherence_tail_opt"].raw <= out["coherence_tail"].raw * (1 + 1e-12)
    for bad in ({"eps": 1.0}, {"a": 0.0}, {"eta": 1.2}, {"x": -1.0}, {"m": 0}, {"n": 1}):
        with pytest.raises(DomainError):
            bounds.TailBoundQuery(**{"m": 10, "n": 20, "eps": 0.5, **bad})


def test_empirical_tail_below_bound():
    grid = np.round(np.arange(0.3, 0.91, 0.1), 10)
    freq, mus = bounds.empirical_coherence_tail(100, 200, grid, 100, seed=3)
    assert mus.shape == (100,)
    for e, f in zip(grid, freq):
        assert f <= bounds.coherence_tail_bound_opt(100, 200, e)[1].clamped


def test_p2_p3_ordering_and_limit():
    for eps in (0.2, 0.5, 0.9):
        est = bounds.estimate_p2_p3(10, 20, eps, 200, seed=1)
        assert est.p3_hat <= est.p2_hat
        assert est.used + est.skipped == 200
    near_one = bounds.estimate_p2_p3(10, 20, 1 - 1e-9, 200, seed=2)
    assert near_one.p3_hat == 0.0


def test_p2_p3_bernoulli():
    est = bounds.estimate_p2_p3(10, 20, 0.4, 100, seed=5, ensemble="bernoulli")
    assert est.p3_hat <= est.p2_hat


@pytest.mark.slow
def test_p2_p3_disjoint_seed_ranges_agree():
    first = bounds.estimate_p2_p3(50, 100, 0.5, 2000, seed=0)
    second = bounds.estimate_p2_p3(50, 100, 0.5, 2000, seed=0, seed_offset=2000)
    for key in ("p2_hat", "p3_hat"):
        se = "se2" if key == "p2_hat" else "se3"
        combined = math.hypot(getattr(first, se), getattr(second, se))
        assert abs(getattr(first, key) - getattr(second, key)) <= 3 * combined
