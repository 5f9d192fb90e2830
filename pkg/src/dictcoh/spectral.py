"""Symmetric eigendecomposition, thin SVD, whitening and Wielandt quantities.

The eigensolver is cyclic Jacobi. Two kernels share the same rotation
formula and stopping rule:

* a row-cyclic kernel compiled with numba (pairs visited in the order
  (0,1), (0,2), ..., (n-2,n-1));
* a pure-numpy round-robin kernel, where each sweep is ``N - 1`` rounds of
  ``N/2`` disjoint rotations applied at once. It is used when numba is
  unavailable.

Both orderings are fixed, so results are deterministic. A sweep ends the
iteration when it performs no rotation or when the off-diagonal Frobenius
norm falls to ``OFF_RTOL * ||S||_F``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AsymmetryError, DomainError, NonConvergenceError, RankDeficiencyError
from .matgen import as_array

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

MAX_SWEEPS = 30
OFF_RTOL = 1e-14
RANK_RTOL = 1e-10
#: above this dimension ``method="auto"`` hands the problem to LAPACK
JACOBI_MAX_DIM = 128


@dataclass
class SymEigen:
    dim: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual: float
    sweeps: int = 0
    method: str = "jacobi"


@dataclass
class SvdFactorization:
    U: np.ndarray
    sigma: np.ndarray
    V1: np.ndarray
    residual: float
    rank: int
    a: np.ndarray = None

    @property
    def rank_deficient(self):
        return self.rank < self.sigma.size

    @property
    def rho(self):
        """(s1^2 - sm^2) / (s1^2 + sm^2)."""
        hi, lo = self.sigma[0] ** 2, self.sigma[-1] ** 2
        return float((hi - lo) / (hi + lo))


@dataclass
class WielandtPair:
    i: int
    j: int
    u2: float
    u3: float
    raw: float
    normalized: float


def _round_robin(n):
    """Round-robin schedule: a list of (p, q) index arrays covering all pairs.

    For odd ``n`` a dummy player ``n`` is added and its games dropped.
    """
    players = list(range(n + (n % 2)))
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        p, q = [], []
        for k in range(size // 2):
            a, b = players[k], players[size - 1 - k]
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=np.intp), np.array(q, dtype=np.intp)))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def _jacobi_rowcyclic_py(s, max_sweeps, rtol):
    n = s.shape[0]
    a = s.copy()
    v = np.eye(n)
    fro = np.sqrt(np.sum(a * a))
    eps = np.finfo(np.float64).eps
    off = 0.0
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0 or abs(apq) <= eps * np.sqrt(abs(a[p, p] * a[q, q])):
                    continue
                rotated = True
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - sn * akq
                    a[k, q] = sn * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - sn * aqk
                    a[q, k] = sn * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - sn * vkq
                    v[k, q] = sn * vkp + c * vkq
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        off = np.sqrt(off)
        if not rotated or off <= rtol * fro:
            return np.diag(a).copy(), v, sweep, off
    return np.diag(a).copy(), v, -1, off


_jacobi_rowcyclic = (
    numba.njit(cache=True)(_jacobi_rowcyclic_py) if numba is not None else None
)


def _jacobi(s, kernel="auto"):
    if kernel == "auto":
        kernel = "rowcyclic" if _jacobi_rowcyclic is not None else "roundrobin"
    if kernel == "rowcyclic":
        if s.shape[0] == 0 or not np.any(s):
            return np.diag(s).copy(), np.eye(s.shape[0]), 0
        w, v, sweeps, off = _jacobi_rowcyclic(np.ascontiguousarray(s), MAX_SWEEPS, OFF_RTOL)
        if sweeps < 0:
            raise NonConvergenceError(
                f"Jacobi did not converge in {MAX_SWEEPS} sweeps (off-norm {off:.3e})"
            )
        return w, v, sweeps
    if kernel == "roundrobin":
        return _jacobi_roundrobin(s)
    raise ValueError(f"unknown Jacobi kernel {kernel!r}")


def _jacobi_roundrobin(s):
    n = s.shape[0]
    a = s.copy()
    v = np.eye(n)
    fro = np.linalg.norm(a)
    if n == 1 or fro == 0.0:
        return np.diag(a).copy(), v, 0
    target = OFF_RTOL * fro
    rounds = _round_robin(n)
    eps = np.finfo(float).eps
    for sweep in range(1, MAX_SWEEPS + 1):
        rotated = False
        for p, q in rounds:
            apq = a[p, q]
            app = a[p, p]
            aqq = a[q, q]
            active = np.abs(apq) > eps * np.sqrt(np.abs(app * aqq))
            active &= apq != 0.0
            if not active.any():
                continue
            rotated = True
            p, q, apq, app, aqq = p[active], q[active], apq[active], app[active], aqq[active]
            tau = (aqq - app) / (2.0 * apq)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            sn = t * c
            # A <- J^T A J with J[p,p]=J[q,q]=c, J[p,q]=s, J[q,p]=-s
            rp, rq = a[p, :], a[q, :]
            a[p, :] = c[:, None] * rp - sn[:, None] * rq
            a[q, :] = sn[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p], a[:, q]
            a[:, p] = cp * c - cq * sn
            a[:, q] = cp * sn + cq * c
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p], v[:, q]
            v[:, p] = vp * c - vq * sn
            v[:, q] = vp * sn + vq * c
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if not rotated or off <= target:
            return np.diag(a).copy(), v, sweep
    raise NonConvergenceError(
        f"Jacobi did not converge in {MAX_SWEEPS} sweeps (off-norm {off:.3e}, "
        f"target {target:.3e})"
    )


def sym_eigen(s, method="auto", kernel="auto"):
    """Eigendecomposition of a real symmetric matrix, eigenvalues descending.

    Parameters
    ----------
    s : array_like, shape (k, k)
    method : {"auto", "jacobi", "lapack"}
        ``"auto"`` uses Jacobi up to ``JACOBI_MAX_DIM`` and LAPACK ``syevd``
        beyond it.
    kernel : {"auto", "rowcyclic", "roundrobin"}
        Jacobi kernel; ``"auto"`` prefers the compiled row-cyclic one.

    Each eigenvector is signed so that its largest-magnitude entry is
    positive.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise AsymmetryError(f"expected a square matrix, got shape {s.shape}")
    scale = np.max(np.abs(s)) if s.size else 0.0
    asym = np.max(np.abs(s - s.T)) if s.size else 0.0
    if asym > 1e-12 * scale:
        raise AsymmetryError(f"matrix is not symmetric (max |S - S^T| = {asym:.3e})")
    s = 0.5 * (s + s.T)
    n = s.shape[0]
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_DIM else "lapack"
    sweeps = 0
    if method == "jacobi":
        w, q, sweeps = _jacobi(s, kernel)
    elif method == "lapack":
        w, q = np.linalg.eigh(s)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(-w, kind="stable")
    w, q = w[order], q[:, order]
    # fix the sign of each eigenvector so its largest entry is positive
    lead = np.argmax(np.abs(q), axis=0)
    signs = np.sign(q[lead, np.arange(n)])
    signs[signs == 0] = 1.0
    q = q * signs
    residual = float(np.max(np.abs(s @ q - q * w))) if n else 0.0
    return SymEigen(dim=n, eigenvalues=w, eigenvectors=q, residual=residual,
                    sweeps=sweeps, method=method)


def svd_thin(a, method="auto"):
    """Thin SVD ``A = U diag(sigma) V1^T`` from the eigendecomposition of A A^T.

    Columns of ``V1`` belonging to singular values at or below the rank
    tolerance are filled by an orthonormal completion; ``rank`` records how
    many columns are genuine.
    """
    arr = as_array(a)
    m, n = arr.shape
    if m > n:
        raise DomainError(f"svd_thin needs m <= n, got {m}x{n}")
    eig = sym_eigen(arr @ arr.T, method=method)
    sigma = np.sqrt(np.clip(eig.eigenvalues, 0.0, None))
    u = eig.eigenvectors
    tol = RANK_RTOL * sigma[0] if sigma[0] > 0 else 0.0
    good = sigma > tol
    rank = int(good.sum())
    v1 = np.zeros((n, m))
    v1[:, good] = (arr.T @ u[:, good]) / sigma[good]
    if rank < m:
        v1[:, ~good] = _orthonormal_completion(v1[:, good], m - rank)
    residual = float(np.max(np.abs(arr - (u * sigma) @ v1.T)))
    return SvdFactorization(U=u, sigma=sigma, V1=v1, residual=residual, rank=rank, a=arr)


def _orthonormal_completion(basis, count):
    n = basis.shape[0]
    q, _ = np.linalg.qr(np.hstack([basis, np.eye(n)]))
    return q[:, basis.shape[1]: basis.shape[1] + count]


def inv_sqrt_gram(a, method="auto"):
    """P = (A A^T)^(-1/2), so that (PA)(PA)^T = I."""
    arr = as_array(a)
    eig = sym_eigen(arr @ arr.T, method=method)
    w = eig.eigenvalues
    sig = np.sqrt(np.clip(w, 0.0, None))
    if sig[-1] <= RANK_RTOL * sig[0]:
        raise RankDeficiencyError(sig[-1], sig[0])
    q = eig.eigenvectors
    p = (q / np.sqrt(w)) @ q.T
    return 0.5 * (p + p.T)


def singular_extremes(a, method="auto"):
    """(sigma_1, sigma_m) of an m x n matrix with m <= n."""
    svd = svd_thin(a, method=method)
    return float(svd.sigma[0]), float(svd.sigma[-1])


def wielandt_pair(svd, i, j):
    """u2 and u3 for columns i and j from the rows of V1.

    u3 is the cosine between rows i and j of V1, which equals the
    correlation of the whitened columns; u2 = (rho + u3) / (1 + rho u3)
    bounds the correlation of the original columns.
    """
    if i == j:
        raise ValueError("wielandt_pair needs two distinct columns")
    vi, vj = svd.V1[i], svd.V1[j]
    ni, nj = np.linalg.norm(vi), np.linalg.norm(vj)
    if ni == 0.0 or nj == 0.0:
        raise DomainError(f"row {i if ni == 0 else j} of V1 is zero")
    rho = svd.rho
    u3 = float(abs(vi @ vj) / (ni * nj))
    u2 = (rho + u3) / (1.0 + rho * u3)
    if svd.a is not None:
        ai, aj = svd.a[:, i], svd.a[:, j]
    else:
        ai, aj = (svd.U * svd.sigma) @ vi, (svd.U * svd.sigma) @ vj
    inner = float(ai @ aj)
    raw = abs(inner)
    normalized = raw / float(np.linalg.norm(ai) * np.linalg.norm(aj))
    return WielandtPair(i=int(i), j=int(j), u2=float(u2), u3=u3, raw=raw,
                        normalized=normalized)


def wielandt_all(svd):
    """u2/u3 for every pair i < j, vectorized.

    Returns a dict of equal-length arrays ``i, j, raw, normalized, u2, u3``.
    Pairs touching a zero row of V1 are dropped.
    """
    v1 = svd.V1
    a = svd.a if svd.a is not None else (svd.U * svd.sigma) @ v1.T
    n = v1.shape[0]
    iu, ju = np.triu_indices(n, 1)
    vnorm = np.linalg.norm(v1, axis=1)
    keep = (vnorm[iu] > 0) & (vnorm[ju] > 0)
    iu, ju = iu[keep], ju[keep]
    gv = v1 @ v1.T
    u3 = np.abs(gv[iu, ju]) / (vnorm[iu] * vnorm[ju])
    rho = svd.rho
    u2 = (rho + u3) / (1.0 + rho * u3)
    ga = a.T @ a
    anorm = np.sqrt(np.diag(ga))
    raw = np.abs(ga[iu, ju])
    normalized = raw / (anorm[iu] * anorm[ju])
    return {"i": iu, "j": ju, "raw": raw, "normalized": normalized, "u2": u2, "u3": u3}
