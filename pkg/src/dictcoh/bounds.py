"""Closed-form probability bounds and Monte Carlo estimators for them.

Every bound that can exceed one is returned as a :class:`BoundValue`
holding both the raw expression and its value clamped to ``[0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import matgen
from ._optim import golden_section
from .coherence import coherence
from .errors import DictcohError, DomainError
from .spectral import svd_thin, wielandt_pair


class BoundValue(NamedTuple):
    raw: float
    clamped: float


def _bv(raw):
    raw = float(raw)
    return BoundValue(raw, min(max(raw, 0.0), 1.0))


def _open_unit(name, value):
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {value}")


def _positive(name, value):
    if not value > 0.0:
        raise DomainError(f"{name} must be positive, got {value}")


def _dim(name, value, minimum=1):
    if int(value) != value or value < minimum:
        raise DomainError(f"{name} must be an integer >= {minimum}, got {value}")


@dataclass(frozen=True)
class TailBoundQuery:
    m: int
    n: int
    eps: float
    a: float = 0.5
    eta: float = 0.5
    x: float = 1.0

    def __post_init__(self):
        _dim("m", self.m)
        _dim("n", self.n, 2)
        _open_unit("eps", self.eps)
        _open_unit("a", self.a)
        _open_unit("eta", self.eta)
        _positive("x", self.x)

    def evaluate(self):
        a_opt, opt = coherence_tail_bound_opt(self.m, self.n, self.eps)
        return {
            "chi2_lower_tail": chi2_lower_tail_bound(self.m, self.x),
            "inner_product_tail": inner_product_tail_bound(self.m, self.x),
            "coherence_tail": coherence_tail_bound(self.m, self.n, self.eps, self.a),
            "coherence_tail_opt": opt,
            "a_opt": a_opt,
            "bernoulli_mu_one": bernoulli_mu_equals_one_bound(self.m, self.n),
            "concentration": concentration_probability(self.m, self.eta),
        }


def chi2_lower_tail_bound(m, x):
    """Bound exp(-x) on P{Z - m <= -2 sqrt(m x)} for Z ~ chi^2(m)."""
    _dim("m", m)
    _positive("x", x)
    return math.exp(-x)


def chi2_lower_threshold(m, x):
    """Deviation 2 sqrt(m x) below the mean that ``chi2_lower_tail_bound`` covers."""
    return 2.0 * math.sqrt(m * x)


def inner_product_tail_bound(m, x):
    """2 exp(-m x^2 / (4 (1 + x/2))) bounding P{|<a_j, a_k>| >= x}, Gaussian columns."""
    _dim("m", m)
    _positive("x", x)
    return 2.0 * math.exp(-0.25 * m * x * x / (1.0 + 0.5 * x))


def bernoulli_inner_product_tail_bound(m, x):
    """Hoeffding bound 2 exp(-m x^2 / 2) for +-1/sqrt(m) columns."""
    _dim("m", m)
    _positive("x", x)
    return 2.0 * math.exp(-0.5 * m * x * x)


def coherence_tail_bound(m, n, eps, a, ensemble="gaussian", form="printed"):
    """Union bound on P{mu(A) >= eps}.

    The Gaussian form is::

        n(n-1)/2 * [exp(-m a^2 eps^2 / (4 (1 + a eps / 2))) + exp(-m (1-a)^2 / 4)]

    The bracket comes from the inner-product tail at level ``a eps`` and the
    chi-square lower tail of a squared column norm at level ``a``. Assembling
    those two tails term by term gives twice the prefactor; ``form="union"``
    returns that doubled, strictly valid variant.

    For ``ensemble="bernoulli"`` columns have unit norm, so ``a`` plays no
    role: the bound is ``n(n-1)/2 * 2 exp(-m eps^2 / 2)``, the Hoeffding
    inner-product tail at level ``eps`` summed over pairs. Both forms agree
    there. At ``eps = 1`` it reduces to :func:`bernoulli_mu_equals_one_bound`.
    """
    _dim("m", m)
    _dim("n", n, 2)
    _open_unit("eps", eps)
    _open_unit("a", a)
    if form not in ("printed", "union"):
        raise ValueError(f"unknown form {form!r}")
    pairs = n * (n - 1) / 2.0
    if ensemble == "gaussian":
        t_inner = math.exp(-m * a * a * eps * eps / (4.0 * (1.0 + a * eps / 2.0)))
        t_norm = math.exp(-m * (1.0 - a) ** 2 / 4.0)
        raw = pairs * (t_inner + t_norm)
    elif ensemble == "bernoulli":
        return _bv(pairs * bernoulli_inner_product_tail_bound(m, eps))
    else:
        raise ValueError(f"no tail bound for ensemble {ensemble!r}")
    if form == "union":
        raw *= 2.0
    return _bv(raw)


def coherence_tail_bound_opt(m, n, eps, ensemble="gaussian", form="printed", tol=1e-10):
    """Minimize :func:`coherence_tail_bound` over the split parameter ``a``.

    Returns ``(a_star, BoundValue)``.
    """
    _open_unit("eps", eps)
    lo, hi = 1e-12, 1.0 - 1e-12

    def raw(a):
        return coherence_tail_bound(m, n, eps, a, ensemble=ensemble, form=form).raw

    a_star, _ = golden_section(raw, lo, hi, tol)
    return a_star, coherence_tail_bound(m, n, eps, a_star, ensemble=ensemble, form=form)


def bernoulli_mu_equals_one_bound(m, n):
    """n(n-1) exp(-m/2) bounding P{mu(A) = 1} for a Bernoulli dictionary."""
    if m < 0 or n < 1:
        raise DomainError(f"need m >= 0 and n >= 1, got m={m}, n={n}")
    return n * (n - 1) * math.exp(-m / 2.0)


def c0(eta):
    """eta^2/4 - eta^3/6."""
    return eta * eta / 4.0 - eta ** 3 / 6.0


def concentration_probability(m, eta, form="corrected"):
    """Lower bound on P{sqrt(1-eta) <= sigma_m <= sigma_1 <= sqrt(1+eta)}.

    ``form="corrected"`` (default) evaluates ``1 - 2 exp(-m c0(eta))``;
    ``form="printed"`` evaluates ``1 - 2 exp(c0(eta))``, which is always
    negative and kept only for comparison.
    """
    _open_unit("eta", eta)
    if m < 0:
        raise DomainError(f"m must be nonnegative, got {m}")
    if form == "corrected":
        return _bv(1.0 - 2.0 * math.exp(-m * c0(eta)))
    if form == "printed":
        return _bv(1.0 - 2.0 * math.exp(c0(eta)))
    raise ValueError(f"unknown form {form!r}")


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------

@dataclass
class P2P3Estimate:
    m: int
    n: int
    eps: float
    trials: int
    used: int
    skipped: int
    freq_u2: float
    freq_u3: float
    p2_hat: float
    p3_hat: float
    se2: float
    se3: float


def estimate_p2_p3(m, n, eps, trials, seed, ensemble="gaussian", seed_offset=0):
    """Monte Carlo estimates of n(n-1) P{eps <= u2} and n(n-1) P{eps <= u3}.

    Trial ``t`` draws a dictionary from seed ``derive_seed(seed, t)`` and one
    column pair uniformly at random from ``derive_seed(seed, t, 1)``. Trials
    whose SVD fails are counted in ``skipped``. ``seed_offset`` shifts the
    trial indices, so disjoint offsets give independent estimates.
    """
    _open_unit("eps", eps)
    if trials < 1:
        raise DomainError("trials must be >= 1")
    hits2 = hits3 = used = skipped = 0
    for t in range(seed_offset, seed_offset + trials):
        a = matgen.generate(ensemble, m, n, matgen.derive_seed(seed, t))
        pick = matgen.make_rng(matgen.derive_seed(seed, t, 1))
        i, j = sorted(int(v) for v in pick.choice(n, size=2, replace=False))
        try:
            svd = svd_thin(a)
            if svd.rank_deficient:
                raise DictcohError("rank deficient")
            w = wielandt_pair(svd, i, j)
        except DictcohError:
            skipped += 1
            continue
        used += 1
        hits2 += w.u2 >= eps
        hits3 += w.u3 >= eps
    scale = n * (n - 1)
    f2 = hits2 / used if used else float("nan")
    f3 = hits3 / used if used else float("nan")
    se = lambda f: scale * math.sqrt(f * (1.0 - f) / used) if used else float("nan")
    return P2P3Estimate(m, n, eps, trials, used, skipped, f2, f3,
                        scale * f2, scale * f3, se(f2), se(f3))


def empirical_coherence_tail(m, n, eps_grid, trials, seed, ensemble="gaussian"):
    """Fraction of ``trials`` seeded dictionaries with mu(A) >= eps, per eps."""
    eps_grid = np.asarray(eps_grid, dtype=np.float64)
    mus = np.array([
        coherence(matgen.generate(ensemble, m, n, matgen.derive_seed(seed, t)))
        for t in range(trials)
    ])
    return (mus[:, None] >= eps_grid[None, :]).mean(axis=0), mus
