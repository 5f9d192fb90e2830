"""Mutual coherence, pairwise correlation profile and the uniqueness bound."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import DimensionError, DomainError, ZeroColumnError
from .matgen import as_array, check_no_zero_columns

#: relative tolerance for deciding that two pair correlations tie at the max
TIE_RTOL = 1e-9


@dataclass
class CoherenceReport:
    mu: float
    max_pairs: List[Tuple[int, int]]
    bound: float
    profile: Optional[np.ndarray] = None

    @property
    def pair(self):
        """First (lowest-index) pair attaining ``mu``."""
        return self.max_pairs[0]


def pair_correlation(a, i, j):
    """|<a_i, a_j>| / (||a_i|| ||a_j||) for two distinct columns."""
    arr = as_array(a)
    n = arr.shape[1]
    for k in (i, j):
        if not -n <= k < n:
            raise IndexError(f"column index {k} out of range for n={n}")
    if i % n == j % n:
        raise ValueError("pair_correlation needs two distinct columns")
    x, y = arr[:, i], arr[:, j]
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0.0:
        raise ZeroColumnError(i % n)
    if ny == 0.0:
        raise ZeroColumnError(j % n)
    return float(abs(x @ y) / (nx * ny))


def gram(a, normalized=False):
    """A^T A, or the Gram matrix of the unit-normalized columns.

    The normalized variant divides by the column norms afterwards instead of
    normalizing ``a`` first, and forces an exact unit diagonal.
    """
    arr = as_array(a)
    g = arr.T @ arr
    g = 0.5 * (g + g.T)
    if not normalized:
        return g
    norms = column_norms(arr)
    g /= np.outer(norms, norms)
    np.fill_diagonal(g, 1.0)
    return g


def column_norms(a):
    arr = check_no_zero_columns(a)
    return np.linalg.norm(arr, axis=0)


def correlation_matrix(a):
    """Matrix of |I(a_i, a_j)| with a zero diagonal."""
    c = np.abs(gram(a, normalized=True))
    np.fill_diagonal(c, 0.0)
    return c


def mutual_coherence(a, with_profile=False):
    """Largest absolute normalized inner product between distinct columns.

    Parameters
    ----------
    a : Dictionary or array_like, shape (m, n)
        Dictionary with ``n >= 2`` nonzero columns.
    with_profile : bool
        Also return all ``n(n-1)/2`` pair values, ordered like
        ``np.triu_indices(n, 1)``.

    Returns
    -------
    CoherenceReport
    """
    arr = as_array(a)
    n = arr.shape[1]
    if n < 2:
        raise DimensionError("mutual coherence needs at least two columns")
    c = correlation_matrix(arr)
    iu, ju = np.triu_indices(n, 1)
    values = c[iu, ju]
    mu = float(values.max())
    hit = np.flatnonzero(values >= mu * (1.0 - TIE_RTOL))
    pairs = [(int(iu[k]), int(ju[k])) for k in hit]
    return CoherenceReport(
        mu=mu,
        max_pairs=pairs,
        bound=recovery_bound(mu) if mu > 0 else float("inf"),
        profile=values if with_profile else None,
    )


def coherence(a):
    """Shorthand for ``mutual_coherence(a).mu``."""
    arr = as_array(a)
    return float(correlation_matrix(arr).max())


def recovery_bound(mu):
    """0.5 (1 + 1/mu): sparsity levels strictly below it are uniquely recoverable."""
    mu = float(mu)
    if not 0.0 < mu <= 1.0 + 1e-12:
        raise DomainError(f"recovery bound needs 0 < mu <= 1, got {mu}")
    return 0.5 * (1.0 + 1.0 / mu)


def guaranteed_sparsity(mu):
    """Largest integer k with k < 0.5 (1 + 1/mu)."""
    bound = recovery_bound(mu)
    k = int(np.floor(bound))
    return k - 1 if k == bound else k
