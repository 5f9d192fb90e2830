import numpy as np
import pytest

from dictcoh import coherence as coh
from dictcoh import matgen, recovery
from dictcoh.errors import DomainError, ZeroColumnError


def test_single_atom():
    a = matgen.gen_gaussian(10, 20, 0).entries
    res = recovery.omp(a, a[:, 5], 3, support=[5])
    assert list(res.support_hat) == [5]
    assert res.iterations == 1
    assert res.residual_norm < 1e-12
    assert res.exact_support


def test_zero_signal():
    a = matgen.gen_gaussian(10, 20, 0).entries
    res = recovery.omp(a, np.zeros(10), 4)
    assert res.support_hat.size == 0
    assert np.array_equal(res.x_hat, np.zeros(20))
    assert res.iterations == 0


def test_tie_break_lowest_index():
    a = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    res = recovery.omp(a, np.array([1.0, 0.0]), 1)
    assert list(res.support_hat) == [0]


def test_errors():
    a = matgen.gen_gaussian(4, 8, 0)
    with pytest.raises(DomainError):
        recovery.omp(a, np.zeros(4), 5)
    z = np.ones((3, 5))
    z[:, 2] = 0
    with pytest.raises(ZeroColumnError):
        recovery.omp(z, np.ones(3), 1)
    with pytest.raises(DomainError):
        recovery.make_problem(a, 9, np.random.default_rng(0))


def test_problem_invariants():
    a = matgen.gen_gaussian(20, 40, 1)
    p = recovery.make_problem(a, 4, np.random.default_rng(3))
    assert p.support.size == 4
    assert np.max(np.abs(p.b - a.entries @ p.x_true)) < 1e-12
    mags = np.abs(p.x_true[p.support])
    assert np.all((mags >= 0.5) & (mags <= 1.5))


def test_residual_orthogonal_to_support():
    a = matgen.gen_gaussian(30, 60, 2).entries
    b = np.random.default_rng(1).standard_normal(30)
    for k in range(1, 8):
        res = recovery.omp(a, b, k)
        r = b - a @ res.x_hat
        assert np.max(np.abs(a[:, res.support_hat].T @ r)) <= 1e-9
        assert res.support_hat.size <= res.iterations


def test_determinism():
    a = matgen.gen_gaussian(30, 60, 2).entries
    b = np.random.default_rng(2).standard_normal(30)
    r1, r2 = recovery.omp(a, b, 6), recovery.omp(a, b, 6)
    assert np.array_equal(r1.support_hat, r2.support_hat)
    assert r1.x_hat.tobytes() == r2.x_hat.tobytes()


def test_guarantee_gaussian_100x200():
    a = matgen.gen_gaussian(100, 200, 4)
    k = coh.guaranteed_sparsity(coh.coherence(a))
    assert k >= 1
    for t in range(100):
        prob = recovery.make_problem(a, k, matgen.make_rng(matgen.derive_seed(4, t)))
        assert recovery.solve(prob).exact_support


def test_sweep_rows():
    a = matgen.gen_gaussian(40, 80, 5)
    rows = recovery.recovery_sweep(a, 10, 20, seed=1)
    assert [r["k"] for r in rows] == list(range(11))
    assert rows[0]["rate_a"] == rows[0]["rate_pa"] == 1.0
    rate = [r["rate_a"] for r in rows]
    for lo, hi in zip(rate[1:], rate[:-1]):
        assert lo <= hi + 0.02 + 2 * np.sqrt(0.25 / 20)
    assert rows == recovery.recovery_sweep(a, 10, 20, seed=1)
    with pytest.raises(DomainError):
        recovery.recovery_sweep(a, 41, 2, seed=0)


def test_sweep_without_whitening():
    rows = recovery.recovery_sweep(matgen.gen_gaussian(10, 20, 0), 2, 3, seed=0, whiten=False)
    assert np.isnan(rows[1]["rate_pa"])


def test_whitened_guarantee_bernoulli_300x600():
    a = matgen.gen_bernoulli(300, 600, 11)
    assert recovery.guaranteed_k(a, whiten=True) >= recovery.guaranteed_k(a)


def test_ill_conditioned_support_flagged():
    # two nearly parallel atoms: the support Gram matrix has condition ~1e14
    a = np.array([[1.0, 1.0], [0.0, 1e-7]])
    res = recovery.omp(a, np.array([1.0, 1.0]), 2)
    assert res.support_hat.size == 2
    assert res.ill_conditioned
    assert not recovery.omp(np.eye(2), np.array([1.0, 1.0]), 2).ill_conditioned
