"""Command line entry points.

Each command is usable on its own (``dictgen``, ``coherence``, ...) and as
a subcommand of ``dictcoh``.
"""

from __future__ import annotations

import csv
import sys

import click
import numpy as np

from . import bench as bench_mod
from . import bounds as bounds_mod
from . import coherence as coh
from . import matgen, precondition, recovery, spectral
from .errors import DictcohError


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fail(exc):
    click.echo(f"error: {exc}", err=True)
    sys.exit(2)


_format_opt = click.option("--format", "fmt", type=click.Choice(["binary", "text"]),
                           default="binary", show_default=True)


@click.command()
@click.option("--ensemble", type=click.Choice(["gaussian", "bernoulli", "uniform-l1"]),
              required=True)
@click.option("--m", "m", type=int, required=True)
@click.option("--n", "n", type=int, required=True)
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_format_opt
def dictgen(ensemble, m, n, seed, out, fmt):
    """Generate a seeded random dictionary."""
    try:
        d = matgen.generate(ensemble, m, n, seed)
        matgen.save_matrix(d, out, fmt)
    except (DictcohError, OSError) as exc:
        _fail(exc)
    click.echo(f"wrote {d.ensemble} {m}x{n} seed={seed} to {out}")


@click.command("coherence")
@click.option("--in", "inp", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--profile", is_flag=True, help="Print pair-correlation quantiles.")
@click.option("--csv", "csv_out", type=click.Path(dir_okay=False))
def coherence_cmd(inp, profile, csv_out):
    """Mutual coherence and recovery bound of a stored dictionary."""
    try:
        rep = coh.mutual_coherence(matgen.load_matrix(inp), with_profile=profile)
    except (DictcohError, OSError) as exc:
        _fail(exc)
    click.echo(f"mu = {rep.mu!r}")
    click.echo(f"bound = {rep.bound!r}")
    click.echo(f"max pairs = {rep.max_pairs}")
    if profile:
        qs = [0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0]
        for q, v in zip(qs, np.quantile(rep.profile, qs)):
            click.echo(f"  q{q:<5} {v:.6f}")
    if csv_out:
        _write_csv(csv_out, ["mu", "bound", "pair_i", "pair_j"],
                   [[rep.mu, rep.bound, i, j] for i, j in rep.max_pairs])


@click.command()
@click.option("--in", "inp", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out-p", type=click.Path(dir_okay=False), required=True)
@click.option("--out-pa", type=click.Path(dir_okay=False), required=True)
@_format_opt
def whiten(inp, out_p, out_pa, fmt):
    """Whiten a dictionary: P = (A A^T)^(-1/2)."""
    try:
        pre, pa = precondition.whiten(matgen.load_matrix(inp))
        matgen.save_matrix(matgen.external(pre.p), out_p, fmt)
        matgen.save_matrix(pa, out_pa, fmt)
    except (DictcohError, OSError) as exc:
        _fail(exc)
    click.echo(f"mu(A)  = {pre.mu_before!r}  bound = {pre.bound_before:.6f}")
    click.echo(f"mu(PA) = {pre.mu_after!r}  bound = {pre.bound_after:.6f}")


@click.command()
@click.option("--in", "inp", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--csv", "csv_out", type=click.Path(dir_okay=False), required=True)
def wielandt(inp, csv_out):
    """Per-pair raw inner product, u2 and u3."""
    try:
        svd = spectral.svd_thin(matgen.load_matrix(inp))
    except (DictcohError, OSError) as exc:
        _fail(exc)
    if svd.rank_deficient:
        click.echo(f"warning: numerical rank {svd.rank} < m={svd.sigma.size}", err=True)
    w = spectral.wielandt_all(svd)
    _write_csv(csv_out, ["i", "j", "raw", "u2", "u3"],
               zip(w["i"], w["j"], w["raw"], w["u2"], w["u3"]))
    click.echo(f"wrote {w['i'].size} pairs; max u3 = {w['u3'].max():.6f}, "
               f"max u2 = {w['u2'].max():.6f}")


@click.command()
@click.option("--in", "inp", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out-p", type=click.Path(dir_okay=False), required=True)
@click.option("--out-pa", type=click.Path(dir_okay=False), required=True)
@click.option("--trace", type=click.Path(dir_okay=False), help="CSV of the eps search.")
@_format_opt
def perturb(inp, out_p, out_pa, trace, fmt):
    """Elementary perturbation P = I + eps E[m,1] that lowers mu."""
    try:
        a = matgen.load_matrix(inp)
        pre, rep = precondition.elementary_perturbation(a)
        matgen.save_matrix(matgen.external(pre.p), out_p, fmt)
        matgen.save_matrix(matgen.external(pre.apply(a)), out_pa, fmt)
    except (DictcohError, OSError) as exc:
        _fail(exc)
    click.echo(f"eps = {rep.eps!r} (safe limit {rep.safe_limit!r})")
    click.echo(f"mu(A)  = {rep.mu_before!r}")
    click.echo(f"mu(PA) = {rep.mu_after!r}")
    if trace:
        _write_csv(trace, ["eps", "mu"], rep.trace)


@click.command()
@click.option("--in", "inp", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--eps", type=float)
@click.option("--optimize", is_flag=True, help="Grid-search eps over [1e-4, 1e-1].")
@click.option("--literal", is_flag=True, help="Use the rank-one P = ((1-eps)/m) 11^T.")
def bez(inp, eps, optimize, literal):
    """BEZ baseline preconditioner for l1-normalized nonnegative dictionaries."""
    if (eps is None) == (not optimize):
        _fail("give exactly one of --eps or --optimize")
    try:
        d = matgen.load_matrix(inp)
        if optimize:
            if literal:
                _fail("--optimize applies to the default (non-literal) form only")
            eps, pre = precondition.bez_optimize(d)
        else:
            pre = precondition.bez(d, eps, literal=literal)
    except (DictcohError, OSError) as exc:
        _fail(exc)
    click.echo(f"eps = {eps!r}{' (literal)' if literal else ''}")
    click.echo(f"mu(D)  = {pre.mu_before!r}  bound = {pre.bound_before:.6f}")
    click.echo(f"mu(PD) = {pre.mu_after!r}  bound = {pre.bound_after:.6f}")


@click.command("bounds")
@click.option("--m", "m", type=int, required=True)
@click.option("--n", "n", type=int, required=True)
@click.option("--eps", type=float, required=True)
@click.option("--a", "a", type=float, default=0.5, show_default=True)
@click.option("--eta", type=float, default=0.5, show_default=True)
@click.option("--x", "x", type=float, default=1.0, show_default=True)
@click.option("--optimize-a", is_flag=True)
@click.option("--mc-trials", type=int, default=0)
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=0)
@click.option("--ensemble", type=click.Choice(["gaussian", "bernoulli"]), default="gaussian")
@click.option("--csv", "csv_out", type=click.Path(dir_okay=False), required=True)
def bounds_cmd(m, n, eps, a, eta, x, optimize_a, mc_trials, seed, ensemble, csv_out):
    """Evaluate the closed-form tail bounds, optionally against Monte Carlo."""
    try:
        q = bounds_mod.TailBoundQuery(m=m, n=n, eps=eps, a=a, eta=eta, x=x)
        rows = [
            ["chi2_lower_tail", bounds_mod.chi2_lower_tail_bound(m, x), ""],
            ["inner_product_tail", bounds_mod.inner_product_tail_bound(m, x), ""],
        ]
        if optimize_a:
            a, tail = bounds_mod.coherence_tail_bound_opt(m, n, eps, ensemble=ensemble)
        else:
            tail = bounds_mod.coherence_tail_bound(m, n, eps, q.a, ensemble=ensemble)
        rows.append(["coherence_tail", tail.raw, tail.clamped])
        rows.append(["a", a, ""])
        rows.append(["bernoulli_mu_one", bounds_mod.bernoulli_mu_equals_one_bound(m, n), ""])
        conc = bounds_mod.concentration_probability(m, eta)
        rows.append(["concentration", conc.raw, conc.clamped])
        printed = bounds_mod.concentration_probability(m, eta, form="printed")
        rows.append(["concentration_printed", printed.raw, printed.clamped])
        if mc_trials:
            freq, _ = bounds_mod.empirical_coherence_tail(m, n, [eps], mc_trials, seed,
                                                          ensemble=ensemble)
            rows.append(["empirical_coherence_tail", float(freq[0]), ""])
            est = bounds_mod.estimate_p2_p3(m, n, eps, mc_trials, seed, ensemble=ensemble)
            rows += [["p2_hat", est.p2_hat, est.se2], ["p3_hat", est.p3_hat, est.se3]]
    except DictcohError as exc:
        _fail(exc)
    _write_csv(csv_out, ["quantity", "raw", "clamped_or_se"], rows)
    for name, raw, extra in rows:
        click.echo(f"{name:26s} {raw!r:>24} {extra!r:>24}" if extra != "" else
                   f"{name:26s} {raw!r:>24}")


@click.command()
@click.option("--in", "inp", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--k", "k", type=int, required=True, help="Largest sparsity level.")
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=0)
@click.option("--whiten", "do_whiten", is_flag=True, help="Also run on (PA, Pb).")
@click.option("--csv", "csv_out", type=click.Path(dir_okay=False), required=True)
def recover(inp, k, trials, seed, do_whiten, csv_out):
    """OMP exact-recovery rates for k = 0..K."""
    try:
        a = matgen.load_matrix(inp)
        rows = recovery.recovery_sweep(a, k, trials, seed, whiten=do_whiten)
        k_a = recovery.guaranteed_k(a)
        k_pa = recovery.guaranteed_k(a, whiten=True) if do_whiten else None
    except (DictcohError, OSError) as exc:
        _fail(exc)
    header = ["k", "trials", "rate_a"] + (["rate_pa"] if do_whiten else [])
    _write_csv(csv_out, header, [[r[h] for h in header] for r in rows])
    click.echo(f"guaranteed k from mu(A): {k_a}")
    if do_whiten:
        click.echo(f"guaranteed k from mu(PA): {k_pa}")


@click.command("bench")
@click.option("--experiment", type=click.Choice(["fig1", "fig2", "fig3", "table1", "table2"]),
              required=True)
@click.option("--m-list", help="Comma-separated m values, or start:stop:step.")
@click.option("--trials", type=int)
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def bench_cmd(experiment, m_list, trials, seed, out):
    """Re-run one of the coherence experiments and write CSV."""
    kwargs = {"experiment": experiment, "seed": seed, "output": out}
    if m_list:
        kwargs["m_range"] = _parse_m_list(m_list)
    if trials is not None:
        kwargs["trials"] = trials
    elif experiment == "fig3":
        kwargs["trials"] = 100
    try:
        result = bench_mod.run(bench_mod.ExperimentConfig(**kwargs))
    except (DictcohError, ValueError, OSError) as exc:
        _fail(exc)
    click.echo(f"wrote {len(result.rows)} rows to {out}")
    if result.regenerated:
        click.echo(f"{result.regenerated} rank-deficient draws were regenerated")
    if result.violations:
        click.echo(f"{len(result.violations)} invariant violation(s):", err=True)
        for v in result.violations:
            click.echo(f"  {v}", err=True)
        sys.exit(1)


def _parse_m_list(text):
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",") if p.strip()]


@click.group()
def main():
    """Mutual coherence workbench for random overcomplete dictionaries."""


for _cmd in (dictgen, coherence_cmd, whiten, wielandt, perturb, bez, bounds_cmd, recover,
             bench_cmd):
    main.add_command(_cmd)


if __name__ == "__main__":
    main()
