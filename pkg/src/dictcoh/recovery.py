"""Orthogonal Matching Pursuit and a seeded exact-recovery harness."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import matgen
from .coherence import column_norms, guaranteed_sparsity, coherence
from .errors import DomainError
from .spectral import inv_sqrt_gram, sym_eigen

COND_LIMIT = 1e12


@dataclass
class SparseProblem:
    dict: np.ndarray
    x_true: np.ndarray
    b: np.ndarray
    k: int

    @property
    def support(self):
        return np.flatnonzero(self.x_true)


@dataclass
class RecoveryResult:
    x_hat: np.ndarray
    support_hat: np.ndarray
    residual_norm: float
    iterations: int
    exact_support: Optional[bool] = None
    ill_conditioned: bool = False


def make_problem(a, k, rng):
    """Random k-sparse problem: random support, signs +-1, magnitudes U[0.5, 1.5]."""
    arr = matgen.as_array(a)
    m, n = arr.shape
    if not 0 <= k <= min(m, n):
        raise DomainError(f"sparsity k={k} out of range for a {m}x{n} dictionary")
    x = np.zeros(n)
    if k:
        support = np.sort(rng.choice(n, size=k, replace=False))
        signs = rng.choice([-1.0, 1.0], size=k)
        mags = rng.uniform(0.5, 1.5, size=k)
        x[support] = signs * mags
    return SparseProblem(dict=arr, x_true=x, b=arr @ x, k=int(k))


def _solve_support(a_s, b):
    """Least squares on the support via the normal equations."""
    eig = sym_eigen(a_s.T @ a_s)
    w, q = eig.eigenvalues, eig.eigenvectors
    ill = w[-1] <= w[0] / COND_LIMIT
    rhs = q.T @ (a_s.T @ b)
    if ill:
        keep = w > w[0] / COND_LIMIT
        coef = np.zeros_like(w)
        coef[keep] = rhs[keep] / w[keep]
    else:
        coef = rhs / w
    return q @ coef, bool(ill)


def omp(a, b, k, residual_tol=None, support=None):
    """Orthogonal Matching Pursuit.

    Greedily picks the column with the largest normalized correlation with
    the residual (lowest index on ties), refits by least squares on the
    selected columns and stops after ``k`` atoms or once the residual norm
    drops to ``residual_tol`` (default ``1e-10 * ||b||``).

    Parameters
    ----------
    a : Dictionary or array_like, shape (m, n)
    b : array_like, shape (m,)
    k : int
        Maximum number of atoms, at most m.
    residual_tol : float, optional
    support : array_like of int, optional
        True support; when given, ``exact_support`` is filled in.
    """
    arr = matgen.as_array(a)
    m, n = arr.shape
    if not 0 <= k <= m:
        raise DomainError(f"k={k} must lie in [0, m={m}]")
    norms = column_norms(arr)
    b = np.asarray(b, dtype=np.float64)
    bnorm = float(np.linalg.norm(b))
    tol = 1e-10 * bnorm if residual_tol is None else float(residual_tol)
    r = b.copy()
    chosen = []
    coef = np.zeros(0)
    ill = False
    available = np.ones(n, dtype=bool)
    it = 0
    while len(chosen) < k and np.linalg.norm(r) > tol:
        corr = np.abs(arr.T @ r) / norms
        corr[~available] = -1.0
        j = int(np.argmax(corr))
        chosen.append(j)
        available[j] = False
        it += 1
        coef, bad = _solve_support(arr[:, chosen], b)
        ill |= bad
        r = b - arr[:, chosen] @ coef
    x_hat = np.zeros(n)
    x_hat[chosen] = coef
    support_hat = np.array(sorted(chosen), dtype=np.intp)
    exact = None
    if support is not None:
        exact = np.array_equal(support_hat, np.sort(np.asarray(support, dtype=np.intp)))
    return RecoveryResult(x_hat=x_hat, support_hat=support_hat,
                          residual_norm=float(np.linalg.norm(r)), iterations=it,
                          exact_support=exact, ill_conditioned=ill)


def solve(problem):
    return omp(problem.dict, problem.b, problem.k, support=problem.support)


def recovery_sweep(a, k_max, trials, seed, whiten=True):
    """Exact-recovery rates of OMP for k = 0..k_max on A and on PA.

    The same k-sparse vector is used for both: OMP on ``(A, b)`` and on
    ``(PA, Pb)``. Problem ``(k, t)`` is drawn from ``derive_seed(seed, k, t)``.
    Returns a list of dict rows with keys ``k, trials, rate_a, rate_pa``.
    """
    arr = matgen.check_no_zero_columns(a)
    m = arr.shape[0]
    if k_max > m:
        raise DomainError(f"k_max={k_max} exceeds m={m}")
    p = inv_sqrt_gram(arr) if whiten else None
    pa = p @ arr if whiten else None
    rows = []
    for k in range(k_max + 1):
        ok_a = ok_pa = 0
        for t in range(trials):
            rng = matgen.make_rng(matgen.derive_seed(seed, k, t))
            prob = make_problem(arr, k, rng)
            ok_a += bool(solve(prob).exact_support)
            if whiten:
                res = omp(pa, p @ prob.b, k, support=prob.support)
                ok_pa += bool(res.exact_support)
        rows.append({
            "k": k,
            "trials": trials,
            "rate_a": ok_a / trials,
            "rate_pa": ok_pa / trials if whiten else float("nan"),
        })
    return rows


def guaranteed_k(a, whiten=False):
    """Largest k below 0.5 (1 + 1/mu) for A, or for PA when ``whiten``."""
    arr = matgen.as_array(a)
    if whiten:
        arr = inv_sqrt_gram(arr) @ arr
    return guaranteed_sparsity(coherence(arr))
