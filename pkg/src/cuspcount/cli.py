"""Command-line entry point: ``cuspcount <subcommand>``.

Exit codes: 0 ok, 1 configuration error, 2 route failure, 3 resource refusal.
"""

from __future__ import annotations

import csv
import math
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import asymptotics, lab, laplace2d, plotting, profiles, schrodinger1d, transverse

EXIT_CONFIG, EXIT_ROUTE, EXIT_RESOURCE = 1, 2, 3


class RouteFailure(RuntimeError):
    pass


def _lambdas(values):
    out = []
    for v in values:
        out.extend(lab.parse_sweep(v))
    if not out:
        raise lab.ConfigError("at least one --lambda is required")
    return sorted(out)


def _profile(spec):
    try:
        return profiles.parse_profile(spec)
    except (ValueError, OSError) as exc:
        raise lab.ConfigError(str(exc)) from None


def _sigma(spec, s1=None, s2=None):
    if (s1 is None) != (s2 is None):
        raise lab.ConfigError("--sigma1 and --sigma2 must be given together")
    try:
        if s1 is not None:
            return profiles.BoundaryCoefficient.pair(profiles.parse_sigma(s1), profiles.parse_sigma(s2))
        return profiles.parse_sigma(spec)
    except ValueError as exc:
        raise lab.ConfigError(str(exc)) from None


def _emit(ctx, name, header, rows, figure=None):
    """CSV to stdout, plus ``<out>/<name>.csv`` and a figure when --out is set."""
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([lab._fmt(v) for v in r])
    out = ctx.obj.get("out")
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        with open(d / f"{name}.csv", "w", newline="") as fh:
            fw = csv.writer(fh, lineterminator="\n")
            fw.writerow(header)
            for r in rows:
                fw.writerow([lab._fmt(v) for v in r])
        if figure is not None:
            figure(d / f"{name}.png")


def _base_config(ctx, **overrides):
    o = dict(ctx.obj)
    cfg_path = o.pop("config", None)
    merged = {k: v for k, v in o.items() if k in ("out", "threads", "seed") and v is not None}
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return lab.load_config(cfg_path, merged)


def _global_options(fn):
    """Let the global flags also follow the subcommand name."""
    import functools

    @click.option("--out", "g_out", type=click.Path(file_okay=False), default=None, hidden=True)
    @click.option("--threads", "g_threads", type=int, default=None, hidden=True)
    @click.option("--seed", "g_seed", type=int, default=None, hidden=True)
    @click.option("--config", "g_config", type=click.Path(dir_okay=False, exists=True), default=None, hidden=True)
    @click.pass_context
    @functools.wraps(fn)
    def wrapper(ctx, g_out, g_threads, g_seed, g_config, **kw):
        for k, v in (("out", g_out), ("threads", g_threads), ("seed", g_seed), ("config", g_config)):
            if v is not None:
                ctx.obj[k] = v
        return ctx.invoke(fn, **kw)

    return wrapper


@click.group()
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--config", "config", type=click.Path(dir_okay=False, exists=True), default=None,
              help="Flat key=value configuration file; command-line flags win.")
@click.pass_context
def cli(ctx, out, threads, seed, config):
    """Eigenvalue counting on Robin cusp domains."""
    ctx.obj = {"out": out, "threads": threads, "seed": seed, "config": config}


@cli.command()
@_global_options
@click.option("--profile", required=True)
@click.option("--sigma", default="const:v=1", show_default=True)
@click.option("--lambda", "lams", multiple=True, required=True, help="Value or lo:hi:steps (log).")
@click.option("--bc", type=click.Choice(["dirichlet", "neumann"]), default="dirichlet", show_default=True)
@click.option("--mode", type=int, default=None, help="Single transverse mode k (0 is H_sigma).")
@click.option("--mode-sum", is_flag=True, help="Sum over all contributing modes.")
@click.option("--dirichlet-b", is_flag=True, help="Use the Dirichlet comparison modes pi^2 k^2/(4 f^2).")
@click.option("--resolution", type=float, default=10.0, show_default=True)
@click.option("--xmax", type=float, default=None)
@click.pass_context
def count1d(ctx, profile, sigma, lams, bc, mode, mode_sum, dirichlet_b, resolution, xmax):
    """Sturm counts of the reduced 1D operators."""
    prof = _profile(profile)
    sig = _sigma(sigma)
    lams = _lambdas(lams)
    rows = []
    for lam in lams:
        if mode_sum:
            r = schrodinger1d.mode_sum_count(prof, lam, sigma=sig, dirichlet=dirichlet_b, bc_left=bc,
                                             resolution=resolution, xmax=xmax)
        else:
            k = 0 if mode is None else mode
            q = (schrodinger1d.dirichlet_mode_potential(prof, k) if dirichlet_b
                 else schrodinger1d.mode_potential(prof, sig, k))
            grid = schrodinger1d.build_grid(prof.a, lam, q, resolution, xmax)
            r = schrodinger1d.count_below(schrodinger1d.operator_for(q, grid, bc), lam)
            r = schrodinger1d.CountResult(r.lam, r.count, r.method, r.grid, r.shift_applied, 1)
        rows.append([lam, r.count, r.grid.get("X"), r.grid.get("h"), r.modes_used, r.shift_applied])
    _emit(ctx, "count1d", ["lambda", "count", "X", "h", "modes_used", "shift_applied"], rows,
          lambda p: plotting.plot_series([(r[0], r[1] / r[0]) for r in rows], p, r"$N_\lambda/\lambda$", profile))


@cli.command()
@_global_options
@click.option("--profile", required=True)
@click.option("--sigma", default="const:v=1", show_default=True)
@click.option("--sigma1", default=None, help="Weight on the lower boundary (pair mode).")
@click.option("--sigma2", default=None, help="Weight on the upper boundary (pair mode).")
@click.option("--bc-top", type=click.Choice(["robin", "dirichlet", "neumann"]), default="robin", show_default=True)
@click.option("--bc-bottom", type=click.Choice(["robin", "dirichlet", "neumann"]), default="robin", show_default=True)
@click.option("--lambda", "lams", multiple=True, required=True)
@click.option("--nx", type=int, default=None, help="Uniform x cells (default: geometric grid).")
@click.option("--nt", type=int, default=None)
@click.option("--xmax", type=float, default=None)
@click.option("--resolution", type=float, default=10.0, show_default=True)
@click.option("--operator", type=click.Choice(["robin", "B"]), default="robin", show_default=True)
@click.pass_context
def count2d(ctx, profile, sigma, sigma1, sigma2, bc_top, bc_bottom, lams, nx, nt, xmax, resolution, operator):
    """Inertia counts of the mapped 2D pencil."""
    prof = _profile(profile)
    sig = _sigma(sigma, sigma1, sigma2)
    rows = []
    for lam in _lambdas(lams):
        if operator == "B" and xmax is None:
            raise lab.ConfigError("--operator B needs --xmax")
        mesh = laplace2d.default_mesh(prof, lam, sig, resolution=resolution, n_t=nt, xmax=xmax,
                                      budget=None if nx is not None else lab.MEMORY_BUDGET)
        if nx is not None:
            mesh = laplace2d.MappedMesh(np.linspace(mesh.a, mesh.X, nx + 1), mesh.t_nodes)
        lab._check_memory(mesh)
        if operator == "B":
            pencil = laplace2d.assemble_B(prof, mesh)
        else:
            pencil = laplace2d.assemble_robin(prof, sig, mesh, {"top": bc_top, "bottom": bc_bottom})
        r = laplace2d.count_below_2d(pencil, lam)
        rows.append([lam, r.count, mesh.n_x, mesh.n_t, mesh.X, r.grid["bandwidth"],
                     round(r.grid["factor_seconds"], 6)])
    _emit(ctx, "count2d", ["lambda", "count", "nx", "nt", "X", "bandwidth", "factor_seconds"], rows,
          lambda p: plotting.plot_series([(r[0], r[1] / r[0]) for r in rows], p, r"$N_\lambda/\lambda$", profile))


@cli.command("transverse")
@_global_options
@click.option("--profile", required=True)
@click.option("--sigma", default="const:v=1", show_default=True)
@click.option("--sigma1", default=None)
@click.option("--sigma2", default=None)
@click.option("--x", "xs", multiple=True, default=("2:1000:12",), show_default=True,
              help="Sample points: value or lo:hi:steps (log).")
@click.pass_context
def transverse_cmd(ctx, profile, sigma, sigma1, sigma2, xs):
    """Principal cross-section mode kappa, mu along the cusp."""
    prof = _profile(profile)
    sig = _sigma(sigma, sigma1, sigma2)
    pts = []
    for v in xs:
        pts.extend(lab.parse_sweep(v))
    rows, recs = [], []
    for x in sorted(pts):
        f = float(prof.eval_f(x))
        s1, s2 = (float(v) for v in sig.sides(x))
        m = transverse.solve_kappa(f, s1) if s1 == s2 else transverse.solve_nonsymmetric(f, s1, s2)
        sbar = 0.5 * (s1 + s2)
        ratio = m.mu * f / sbar if sbar > 0 else None
        rows.append([x, f, sbar, m.kappa, m.mu, ratio])
        recs.append({"x": x, "mu_f_over_sigma": ratio})
    _emit(ctx, "transverse", ["x", "f", "sigma", "kappa", "mu", "mu_f_over_sigma"], rows,
          lambda p: plotting.plot_transverse(recs, p))


@cli.command()
@_global_options
@click.option("--profile", required=True)
@click.option("--sigma", default="const:v=1", show_default=True)
@click.option("--lambda", "lams", multiple=True, required=True)
@click.option("--parts", is_flag=True, help="Append the provenance of each part.")
@click.pass_context
def predict(ctx, profile, sigma, lams, parts):
    """Closed-form / phase-space predictions."""
    prof = _profile(profile)
    sig = _sigma(sigma)
    header = ["lambda", "weyl_part", "hsigma_part", "superlinear_part", "total", "regime"]
    if parts:
        header += ["hsigma_source", "linear_coefficient"]
    rows = []
    for lam in _lambdas(lams):
        p = asymptotics.composite_prediction(prof, sig, lam)
        row = [lam, p.weyl_part, p.h_sigma_part, p.dirichlet_superlinear_part, p.total, p.regime]
        if parts:
            row += [p.provenance.get("h_sigma_part"), p.linear_coefficient]
        rows.append(row)
    _emit(ctx, "predict", header, rows,
          lambda p: plotting.plot_series([(r[0], r[4]) for r in rows], p, r"$N_\lambda$", profile, logy=True))


@cli.command()
@_global_options
@click.option("--profile", default=None)
@click.option("--sigma", default=None)
@click.option("--sigma1", default=None)
@click.option("--sigma2", default=None)
@click.option("--lambda", "lams", multiple=True)
@click.option("--routes", default=None, help="Comma list from count2d,modesum,predict.")
@click.option("--resolution", type=float, default=None)
@click.option("--nt", type=int, default=None)
@click.option("--xmax", type=float, default=None)
@click.option("--checks", default=None, help="Comma list from monotone,rank1.")
@click.pass_context
def compare(ctx, profile, sigma, sigma1, sigma2, lams, routes, resolution, nt, xmax, checks):
    """Full three-route comparison run (CSV, series, JSON summary, figure)."""
    cfg = _base_config(ctx, profile=profile, sigma=sigma, sigma1=sigma1, sigma2=sigma2,
                       lambdas=_lambdas(lams) if lams else None, routes=routes, resolution=resolution,
                       nt=nt, xmax=xmax, checks=checks)
    rows, summary = lab.run(cfg)
    click.echo(Path(cfg.out, "compare.csv").read_text(), nl=False)
    if summary["failures"]:
        for fail in summary["failures"]:
            click.echo(f"route failure: {fail}", err=True)
        raise RouteFailure("one or more routes failed")


@cli.command()
@_global_options
@click.option("--profile", default=None)
@click.option("--sigma", default=None)
@click.option("--lambda", "lams", multiple=True)
@click.option("--routes", default="count2d", show_default=True)
@click.option("--refinements", type=int, default=3, show_default=True)
@click.option("--xmax", type=float, default=None)
@click.option("--nt", type=int, default=None)
@click.option("--bc-top", default=None)
@click.option("--bc-bottom", default=None)
@click.option("--resolution", type=float, default=None)
@click.pass_context
def converge(ctx, profile, sigma, lams, routes, refinements, xmax, nt, bc_top, bc_bottom, resolution):
    """Refinement study: h halved (and X doubled) per level."""
    cfg = _base_config(ctx, profile=profile, sigma=sigma, lambdas=_lambdas(lams) if lams else None,
                       routes=routes, xmax=xmax, nt=nt, bc_top=bc_top, bc_bottom=bc_bottom,
                       resolution=resolution)
    table = lab.convergence_study(cfg, refinements)
    keys = ["lambda", "route", "level", "count", "delta"]
    rows = [[r[k] for k in keys] for r in table]
    ctx.obj["out"] = cfg.out
    _emit(ctx, "converge", keys, rows, lambda p: plotting.plot_convergence(table, p))


@cli.command()
@_global_options
@click.option("--profile", default=None)
@click.option("--sigma", default=None)
@click.option("--lambda", "lams", multiple=True)
@click.option("--eps", "epsilons", multiple=True, type=float, default=(0.05, 0.1, 0.2), show_default=True)
@click.option("--operator", type=click.Choice(["H", "B"]), default="H", show_default=True)
@click.option("--xmax", type=float, default=None)
@click.pass_context
def scalecheck(ctx, profile, sigma, lams, epsilons, operator, xmax):
    """Empirical O(eps) constant of N_lambda((1 +- eps) T) / N_lambda(T)."""
    cfg = _base_config(ctx, profile=profile, sigma=sigma, lambdas=_lambdas(lams) if lams else None,
                       xmax=xmax, routes="modesum")
    table = lab.scaling_sweep(cfg, epsilons, operator)
    keys = ["lambda", "eps", "N", "N_plus", "N_minus", "constant"]
    ctx.obj["out"] = cfg.out
    _emit(ctx, "scalecheck", keys, [[r[k] for k in keys] for r in table])


@cli.command()
@_global_options
@click.option("--profile", required=True)
@click.option("--sigma", default="const:v=1", show_default=True)
@click.option("--probes", default=None, help="Probe grid lo:hi:steps (log); default spans two decades.")
@click.pass_context
def audit(ctx, profile, sigma, probes):
    """Finite-sample audit of the standing assumptions."""
    prof = _profile(profile)
    sig = _sigma(sigma)
    grid = lab.parse_sweep(probes) if probes else None
    rep = profiles.audit_assumptions(prof, sig, grid)
    rows = [list(r) for r in rep.as_rows()]
    x0 = float(rep.checks[0].probes[1])
    lhs, rhs, ok = profiles.landau_check(prof, x0)
    rows.append([f"landau_at_{x0:g}", "holds" if ok else "fails", lhs - rhs])
    q = lambda x: profiles.eval_W(prof, sig, x)
    try:
        verdict = asymptotics.titchmarsh_applicable(q, rep.checks[0].probes)
    except (ValueError, FloatingPointError):
        verdict = "inconclusive"
    rows.append(["titchmarsh_applicable", verdict, math.nan])
    regime = profiles.classify_weyl_regime(prof)
    rows.append(["weyl_regime", regime.name, regime.a if regime.a is not None else math.nan])
    _emit(ctx, "audit", ["check", "verdict", "last_value"], rows)


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="cuspcount", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except (click.UsageError, click.BadParameter) as exc:
        exc.show()
        return EXIT_CONFIG
    except click.Abort:
        return EXIT_CONFIG
    except lab.ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except lab.ResourceRefusal as exc:
        click.echo(f"resource refusal: {exc}", err=True)
        return EXIT_RESOURCE
    except RouteFailure as exc:
        click.echo(str(exc), err=True)
        return EXIT_ROUTE
    except (ValueError, ArithmeticError) as exc:
        click.echo(f"route failure: {exc}", err=True)
        return EXIT_ROUTE
    return 0


if __name__ == "__main__":
    sys.exit(main())
