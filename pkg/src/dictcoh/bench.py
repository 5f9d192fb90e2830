"""Seeded re-runs of the coherence experiments, written as CSV.

Every trial draws its dictionary from ``derive_seed(seed, m, trial)``, so a
row can be recomputed from the configuration alone and trials may run in
any order. Means are accumulated with :func:`math.fsum`, which makes them
independent of summation order.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import matgen
from .coherence import coherence, recovery_bound
from .errors import RankDeficiencyError
from .precondition import bez_optimize
from .spectral import inv_sqrt_gram

SCHEMA_VERSION = 1
MAX_RANK_RETRIES = 10
MEMORY_WARN_BYTES = 2 * 1024 ** 3
ORTHO_TOL = 1e-9

DEFAULT_M = {
    "fig1": list(range(100, 501, 20)),
    "fig2": list(range(100, 501, 20)),
    "table1": list(range(1500, 2001, 100)),
    "table2": list(range(1500, 2001, 100)),
    "fig3": [100],
}
ENSEMBLE_OF = {
    "fig1": "bernoulli",
    "fig2": "gaussian",
    "table1": "bernoulli",
    "table2": "gaussian",
    "fig3": "uniform_l1",
}


@dataclass
class ExperimentConfig:
    experiment: str
    m_range: Sequence[int] = None
    aspect: float = 2.0
    trials: int = 20
    seed: int = 0
    output: Optional[str] = None
    ensemble: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in (*DEFAULT_M, "custom"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.m_range is None:
            if self.experiment == "custom":
                raise ValueError("custom experiments need an explicit m_range")
            self.m_range = DEFAULT_M[self.experiment]
        self.m_range = [int(m) for m in self.m_range]
        if not self.m_range:
            raise ValueError("m_range is empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for m in self.m_range:
            if m < 1 or self.aspect < 1.0 + 1.0 / m or self.n_of(m) <= m:
                raise ValueError(f"aspect {self.aspect} is not overcomplete at m={m}")
        if self.ensemble is None:
            self.ensemble = ENSEMBLE_OF.get(self.experiment, "gaussian")

    def n_of(self, m):
        return int(round(self.aspect * m))


@dataclass
class BenchResult:
    experiment: str
    columns: List[str]
    rows: List[list]
    meta: dict = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)
    regenerated: int = 0

    def to_csv(self):
        buf = io.StringIO()
        meta = " ".join(f"{k}={v}" for k, v in self.meta.items())
        buf.write(f"# dictcoh-bench schema=v{SCHEMA_VERSION} experiment={self.experiment} {meta}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def write(self, path):
        Path(path).write_text(self.to_csv())

    def column(self, name):
        k = self.columns.index(name)
        return [row[k] for row in self.rows]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def memory_estimate(m, n):
    """Rough peak bytes: dictionary, whitened copy, two n x n Gram buffers, m x m work."""
    return 8 * (2 * m * n + 2 * n * n + 3 * m * m)


def _draw_full_rank(ensemble, m, n, seed, trial):
    """Dictionary plus whitening for trial ``trial``; redraws on rank deficiency."""
    for attempt in range(MAX_RANK_RETRIES + 1):
        s = matgen.derive_seed(seed, m, trial) if attempt == 0 else \
            matgen.derive_seed(seed, m, trial, attempt)
        a = matgen.generate(ensemble, m, n, s)
        try:
            p = inv_sqrt_gram(a)
        except RankDeficiencyError:
            continue
        return a.entries, p, attempt
    raise RankDeficiencyError(0.0, 0.0, f"no full-rank draw for m={m}, trial={trial}")


def whitening_trial(ensemble, m, n, seed, trial):
    """(bound_A, bound_PA, redraws, orthonormality error) for one trial."""
    a, p, redraws = _draw_full_rank(ensemble, m, n, seed, trial)
    pa = p @ a
    ortho = float(np.max(np.abs(pa @ pa.T - np.eye(m))))
    return recovery_bound(coherence(a)), recovery_bound(coherence(pa)), redraws, ortho


def run_fig12(ensemble, cfg):
    """Mean recovery bound before and after whitening for each m."""
    rows = []
    violations = []
    regenerated = 0
    for m in cfg.m_range:
        n = cfg.n_of(m)
        if memory_estimate(m, n) > MEMORY_WARN_BYTES:
            warnings.warn(f"m={m}, n={n} needs roughly "
                          f"{memory_estimate(m, n) / 1024 ** 3:.1f} GiB", ResourceWarning)
        ba, bpa = [], []
        for t in range(cfg.trials):
            b_a, b_pa, redraws, ortho = whitening_trial(ensemble, m, n, cfg.seed, t)
            regenerated += redraws
            if not ortho < ORTHO_TOL:
                violations.append(f"m={m} trial={t}: |PA PA^T - I| = {ortho:.3e}")
            ba.append(b_a)
            bpa.append(b_pa)
        rows.append([m, n, cfg.trials, math.fsum(ba) / len(ba), math.fsum(bpa) / len(bpa)])
    for row in rows:
        if not all(np.isfinite(row[3:])):
            violations.append(f"m={row[0]}: non-finite mean")
    return BenchResult(
        experiment=cfg.experiment,
        columns=["m", "n", "trials", "mean_bound_A", "mean_bound_PA"],
        rows=rows,
        meta={"ensemble": ensemble, "seed": cfg.seed, "aspect": cfg.aspect},
        violations=violations,
        regenerated=regenerated,
    )


def run_table(ensemble, cfg):
    """Same statistic as :func:`run_fig12`, on the table grid."""
    return run_fig12(ensemble, cfg)


def fig3_trial(m, n, seed, trial, grid=None):
    """Row ``[trial, bound_D, bound_whiten, bound_bez, eps_star]`` for one trial."""
    d, p, redraws = _draw_full_rank("uniform_l1", m, n, seed, trial)
    bound_d = recovery_bound(coherence(d))
    bound_w = recovery_bound(coherence(p @ d))
    eps_star, pre = bez_optimize(d, grid)
    return [trial, bound_d, bound_w, recovery_bound(pre.mu_after), eps_star], redraws


def run_fig3(cfg):
    """Raw, whitened and BEZ-preconditioned bounds for uniform-l1 dictionaries."""
    rows = []
    regenerated = 0
    violations = []
    for m in cfg.m_range:
        n = cfg.n_of(m)
        for t in range(cfg.trials):
            row, redraws = fig3_trial(m, n, cfg.seed, t)
            regenerated += redraws
            if not all(np.isfinite(row[1:])):
                violations.append(f"m={m} trial={t}: non-finite bound")
            rows.append(row)
    return BenchResult(
        experiment=cfg.experiment,
        columns=["trial", "bound_D", "bound_whiten", "bound_bez", "eps_star"],
        rows=rows,
        meta={"ensemble": "uniform_l1", "seed": cfg.seed, "aspect": cfg.aspect,
              "m": ",".join(str(m) for m in cfg.m_range)},
        violations=violations,
        regenerated=regenerated,
    )


def run(cfg):
    """Dispatch on ``cfg.experiment``; writes ``cfg.output`` when set."""
    if cfg.experiment == "fig3":
        result = run_fig3(cfg)
    else:
        result = run_fig12(cfg.ensemble, cfg)
    if cfg.output:
        result.write(cfg.output)
    return result
