import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dictcoh import coherence as coh
from dictcoh import matgen
from dictcoh.errors import DimensionError, DomainError, ZeroColumnError
from oracles import brute_coherence, brute_gram, random_orthogonal

S2 = 1.0 / np.sqrt(2.0)


def test_pair_correlation_examples():
    dup = np.array([[1.0, 1.0], [2.0, 2.0]])
    assert coh.pair_correlation(dup, 0, 1) == pytest.approx(1.0, abs=1e-15)
    assert coh.pair_correlation(np.eye(2), 0, 1) == 0.0
    a = np.array([[1.0, S2], [0.0, S2]])
    assert coh.pair_correlation(a, 0, 1) == pytest.approx(0.70710678, abs=1e-8)


def test_pair_correlation_errors():
    a = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
    with pytest.raises(ZeroColumnError) as info:
        coh.pair_correlation(a, 0, 1)
    assert info.value.column == 1
    with pytest.raises(IndexError):
        coh.pair_correlation(a, 0, 3)
    with pytest.raises(ValueError):
        coh.pair_correlation(a, 2, 2)


def test_frame_coherence(frame3):
    rep = coh.mutual_coherence(frame3)
    assert rep.mu == pytest.approx(S2, abs=1e-15)
    assert rep.max_pairs == [(0, 2), (1, 2)]
    assert rep.bound == pytest.approx(0.5 * (1 + np.sqrt(2)), abs=1e-12)


def test_proportional_columns():
    a = np.array([[1.0, 0.0, -3.0], [2.0, 1.0, -6.0]])
    assert coh.mutual_coherence(a).mu == pytest.approx(1.0, abs=1e-12)


def test_against_brute_force_10x20():
    a = matgen.gen_gaussian(10, 20, 3)
    assert abs(coh.mutual_coherence(a).mu - brute_coherence(a.entries)) < 1e-12


def test_profile():
    a = matgen.gen_gaussian(6, 9, 1)
    rep = coh.mutual_coherence(a, with_profile=True)
    assert rep.profile.shape == (36,)
    assert rep.profile.max() == rep.mu
    i, j = rep.pair
    assert rep.profile[list(zip(*np.triu_indices(9, 1))).index((i, j))] == rep.mu
    assert coh.mutual_coherence(a).profile is None


def test_zero_column_is_named():
    a = np.ones((3, 5))
    a[:, 3] = 0.0
    with pytest.raises(ZeroColumnError) as info:
        coh.mutual_coherence(a)
    assert info.value.column == 3
    assert "3" in str(info.value)


def test_needs_two_columns():
    with pytest.raises(DimensionError):
        coh.mutual_coherence(np.ones((3, 1)))


@pytest.mark.parametrize("mu,expected", [(1.0, 1.0), (S2, 0.5 * (1 + np.sqrt(2))), (0.25, 2.5)])
def test_recovery_bound(mu, expected):
    assert coh.recovery_bound(mu) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("mu", [0.0, -0.1, 1.1])
def test_recovery_bound_domain(mu):
    with pytest.raises(DomainError):
        coh.recovery_bound(mu)


@pytest.mark.parametrize("mu,k", [(0.2, 2), (0.19, 3), (1.0, 0), (1 / 3, 1), (0.1, 5)])
def test_guaranteed_sparsity(mu, k):
    # mu = 0.2 gives bound exactly 3.0, so only k = 2 is guaranteed
    assert coh.guaranteed_sparsity(mu) == k


def test_gram_examples():
    q = random_orthogonal(5, np.random.default_rng(0))[:, :3]
    assert np.allclose(coh.gram(q, normalized=True), np.eye(3), atol=1e-14)
    a = np.array([[1.0, 2.0], [3.0, -1.0]])
    assert coh.gram(a)[0, 1] == 1.0 * 2.0 + 3.0 * -1.0


def test_gram_against_double_loop():
    a = matgen.gen_gaussian(8, 12, 2).entries
    g = coh.gram(a)
    assert np.max(np.abs(g - brute_gram(a))) < 1e-13
    assert np.array_equal(g, g.T)
    gn = coh.gram(a, normalized=True)
    assert np.all(np.diag(gn) == 1.0)


def test_gram_normalized_zero_column():
    with pytest.raises(ZeroColumnError):
        coh.gram(np.array([[1.0, 0.0], [1.0, 0.0]]), normalized=True)


nonzero_matrices = st.integers(2, 6).flatmap(
    lambda m: st.integers(2, 50).flatmap(
        lambda n: arrays(np.float64, (m, n), elements=st.floats(-10, 10, allow_subnormal=False))
    )
).filter(lambda a: np.all(np.linalg.norm(a, axis=0) > 1e-3))


@given(nonzero_matrices)
@settings(max_examples=60, deadline=None)
def test_brute_force_equivalence(a):
    assert abs(coh.mutual_coherence(a).mu - brute_coherence(a)) < 1e-12


@given(nonzero_matrices, st.floats(-1e3, 1e3).filter(lambda c: abs(c) > 1e-3))
@settings(max_examples=60, deadline=None)
def test_scale_invariance(a, c):
    assert abs(coh.mutual_coherence(c * a).mu - coh.mutual_coherence(a).mu) < 1e-12


@given(nonzero_matrices, st.randoms(use_true_random=False))
@settings(max_examples=60, deadline=None)
def test_permutation_invariance(a, rnd):
    perm = list(range(a.shape[1]))
    rnd.shuffle(perm)
    assert abs(coh.mutual_coherence(a[:, perm]).mu - coh.mutual_coherence(a).mu) < 1e-12


@given(st.integers(2, 12), st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_left_orthogonal_invariance(m, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, 2 * m))
    q = random_orthogonal(m, rng)
    assert abs(coh.mutual_coherence(q @ a).mu - coh.mutual_coherence(a).mu) < 1e-10


@given(st.integers(0, 10 ** 6))
@settings(max_examples=20, deadline=None)
def test_report_invariants(seed):
    a = matgen.gen_gaussian(5, 12, seed)
    rep = coh.mutual_coherence(a, with_profile=True)
    assert 0 <= rep.mu <= 1 + 1e-12
    assert rep.bound >= 1
    for i, j in rep.max_pairs:
        assert i < j
        assert abs(coh.pair_correlation(a, i, j) - rep.mu) <= coh.TIE_RTOL * rep.mu + 1e-15
