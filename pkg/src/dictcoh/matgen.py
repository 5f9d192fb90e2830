"""Seeded generation and (de)serialization of random dictionaries.

All randomness comes from numpy's Philox4x64 counter-based bit generator,
keyed directly by the 64-bit seed. Gaussian variates use numpy's ziggurat
sampler (``Generator.standard_normal``). Matrices are filled in row-major
order, so a given ``(ensemble, m, n, seed)`` yields the same bits on every
platform that ships the same numpy major version.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DimensionError, MalformedFileError, ZeroColumnError

ENSEMBLES = ("gaussian", "bernoulli", "uniform_l1", "external")

BINARY_MAGIC = b"DICTCOH1"
_ENSEMBLE_CODES = {name: code for code, name in enumerate(ENSEMBLES)}
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class Dictionary:
    """An m x n real dictionary plus the metadata it was generated from.

    ``entries`` is stored as a read-only float64 array; derived matrices are
    built with :meth:`from_array` or :func:`external`.
    """

    entries: np.ndarray
    ensemble: str = "external"
    seed: Optional[int] = None
    m: int = field(init=False)
    n: int = field(init=False)

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise DimensionError(f"dictionary must be 2-D, got shape {arr.shape}")
        if 0 in arr.shape:
            raise DimensionError(f"dictionary has an empty dimension: {arr.shape}")
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.ensemble!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "m", arr.shape[0])
        object.__setattr__(self, "n", arr.shape[1])

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def column(self, j):
        return self.entries[:, j]

    def with_entries(self, entries):
        """Return an ``external`` dictionary holding ``entries``."""
        return Dictionary(entries, ensemble="external")


def as_array(a):
    """Return the float64 matrix behind a Dictionary or array-like."""
    if isinstance(a, Dictionary):
        return a.entries
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def external(entries):
    return Dictionary(entries, ensemble="external")


def make_rng(seed):
    """Philox4x64 generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=_check_seed(seed)))


def derive_seed(seed, *indices):
    """Deterministic child seed for ``(seed, *indices)``.

    Used to give every trial of an experiment its own stream, so trials can be
    run in any order (or in parallel) and still reproduce.
    """
    ss = np.random.SeedSequence([_check_seed(seed), *[int(i) for i in indices]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _check_seed(seed):
    seed = int(seed)
    if seed < 0 or seed > _SEED_MASK:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def _check_dims(m, n):
    if int(m) != m or int(n) != n:
        raise DimensionError(f"dimensions must be integers, got m={m}, n={n}")
    m, n = int(m), int(n)
    if m <= 0 or n <= 0:
        raise DimensionError(f"dimensions must be positive, got m={m}, n={n}")
    if m >= n:
        raise DimensionError(f"overcomplete dictionary needs m < n, got m={m}, n={n}")
    return m, n


def gen_gaussian(m, n, seed):
    """i.i.d. N(0, 1/m) entries."""
    m, n = _check_dims(m, n)
    rng = make_rng(seed)
    a = rng.standard_normal((m, n)) / np.sqrt(m)
    return Dictionary(a, ensemble="gaussian", seed=int(seed))


def gen_bernoulli(m, n, seed):
    """i.i.d. entries equal to +1/sqrt(m) or -1/sqrt(m) with probability 1/2."""
    m, n = _check_dims(m, n)
    rng = make_rng(seed)
    signs = rng.integers(0, 2, size=(m, n), dtype=np.int8) * 2 - 1
    a = signs / np.sqrt(m)
    return Dictionary(a, ensemble="bernoulli", seed=int(seed))


def gen_uniform_l1(m, n, seed):
    """Uniform [0, 1) entries with each column scaled to unit l1 norm.

    A raw column that comes out all-zero is redrawn from the same stream.
    """
    m, n = _check_dims(m, n)
    rng = make_rng(seed)
    raw = rng.random((m, n))
    sums = raw.sum(axis=0)
    for j in np.flatnonzero(sums == 0.0):
        while sums[j] == 0.0:
            raw[:, j] = rng.random(m)
            sums[j] = raw[:, j].sum()
    return Dictionary(raw / sums, ensemble="uniform_l1", seed=int(seed))


GENERATORS = {
    "gaussian": gen_gaussian,
    "bernoulli": gen_bernoulli,
    "uniform_l1": gen_uniform_l1,
}


def generate(ensemble, m, n, seed):
    key = ensemble.replace("-", "_")
    try:
        gen = GENERATORS[key]
    except KeyError:
        raise ValueError(f"unknown ensemble {ensemble!r}") from None
    return gen(m, n, seed)


def check_no_zero_columns(a):
    """Raise ZeroColumnError naming the first all-zero column of ``a``."""
    arr = as_array(a)
    zero = np.flatnonzero(~np.any(arr != 0.0, axis=0))
    if zero.size:
        raise ZeroColumnError(zero[0])
    return arr


# --------------------------------------------------------------------------
# serialization
#
# text:   "m n" / m lines of n values in %.17g / "# ensemble=<tag> seed=<int|->"
# binary: 8-byte magic, u64 m, u64 n (little endian), m*n float64 row-major,
#         then an optional 10-byte trailer: u8 ensemble code, u8 has_seed,
#         u64 seed.
# --------------------------------------------------------------------------

def save_matrix(d, path, format="binary"):
    if not isinstance(d, Dictionary):
        d = external(d)
    path = Path(path)
    if format == "text":
        _save_text(d, path)
    elif format == "binary":
        _save_binary(d, path)
    else:
        raise ValueError(f"unknown format {format!r}")


def load_matrix(path, format=None):
    """Load a dictionary; ``format=None`` sniffs the binary magic."""
    path = Path(path)
    if format is None:
        with path.open("rb") as fh:
            format = "binary" if fh.read(len(BINARY_MAGIC)) == BINARY_MAGIC else "text"
    if format == "text":
        return _load_text(path)
    if format == "binary":
        return _load_binary(path)
    raise ValueError(f"unknown format {format!r}")


def _save_text(d, path):
    lines = [f"{d.m} {d.n}"]
    for row in d.entries:
        lines.append(" ".join(format(float(x), ".17g") for x in row))
    seed = "-" if d.seed is None else str(d.seed)
    lines.append(f"# ensemble={d.ensemble} seed={seed}")
    path.write_text("\n".join(lines) + "\n")


def _load_text(path):
    lines = [ln.strip() for ln in path.read_text().splitlines()]
    meta = {}
    body = []
    for ln in lines:
        if not ln:
            continue
        if ln.startswith("#"):
            for tok in ln[1:].split():
                key, _, val = tok.partition("=")
                meta[key] = val
        else:
            body.append(ln)
    if not body:
        raise MalformedFileError(f"{path}: empty file")
    header = body[0].split()
    if len(header) != 2:
        raise MalformedFileError(f"{path}: header must be 'm n', got {body[0]!r}")
    try:
        m, n = int(header[0]), int(header[1])
    except ValueError:
        raise MalformedFileError(f"{path}: non-integer header {body[0]!r}") from None
    if m <= 0 or n <= 0:
        raise MalformedFileError(f"{path}: non-positive dimensions {m}x{n}")
    try:
        values = [float(tok) for ln in body[1:] for tok in ln.split()]
    except ValueError as exc:
        raise MalformedFileError(f"{path}: {exc}") from None
    if len(values) != m * n:
        raise MalformedFileError(
            f"{path}: header claims {m}x{n}={m * n} values, found {len(values)}"
        )
    if len(body) - 1 != m:
        raise MalformedFileError(f"{path}: expected {m} rows, found {len(body) - 1}")
    entries = np.array(values, dtype=np.float64).reshape(m, n)
    return _with_meta(entries, meta.get("ensemble"), meta.get("seed"))


def _with_meta(entries, ensemble, seed):
    ensemble = ensemble if ensemble in ENSEMBLES else "external"
    seed = None if seed in (None, "-") else int(seed)
    return Dictionary(entries, ensemble=ensemble, seed=seed)


def _save_binary(d, path):
    with path.open("wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<QQ", d.m, d.n))
        fh.write(d.entries.astype("<f8", copy=False).tobytes(order="C"))
        has_seed = d.seed is not None
        fh.write(struct.pack("<BBQ", _ENSEMBLE_CODES[d.ensemble], has_seed,
                             d.seed if has_seed else 0))


def _load_binary(path):
    raw = path.read_bytes()
    if raw[: len(BINARY_MAGIC)] != BINARY_MAGIC:
        raise MalformedFileError(f"{path}: bad magic")
    if len(raw) < 24:
        raise MalformedFileError(f"{path}: truncated header")
    m, n = struct.unpack_from("<QQ", raw, 8)
    if m == 0 or n == 0:
        raise MalformedFileError(f"{path}: non-positive dimensions {m}x{n}")
    payload = 8 * m * n
    extra = len(raw) - 24 - payload
    if extra not in (0, 10):
        raise MalformedFileError(
            f"{path}: header claims {m}x{n} but payload has {len(raw) - 24} bytes"
        )
    entries = np.frombuffer(raw, dtype="<f8", count=m * n, offset=24).reshape(m, n)
    ensemble, seed = "external", None
    if extra:
        code, has_seed, seed_val = struct.unpack_from("<BBQ", raw, 24 + payload)
        if code >= len(ENSEMBLES):
            raise MalformedFileError(f"{path}: unknown ensemble code {code}")
        ensemble = ENSEMBLES[code]
        seed = seed_val if has_seed else None
    return Dictionary(entries.astype(np.float64), ensemble=ensemble, seed=seed)
