"""Experiment harness: lambda sweeps over the three counting routes."""

from __future__ import annotations

import csv
import json
import math
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import asymptotics, laplace2d, profiles, schrodinger1d

ROUTES = ("count2d", "modesum", "predict")
SCHEMA_VERSION = 1
MEMORY_BUDGET = 2 * 1024 ** 3


class ConfigError(ValueError):
    pass


ResourceRefusal = laplace2d.ResourceRefusal


def parse_sweep(text: str):
    """``lo:hi:steps`` (log spaced), ``lin:lo:hi:steps`` or a single value."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        spacing = "log"
        if parts[0] in ("log", "lin"):
            spacing, parts = parts[0], parts[1:]
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise ConfigError(f"malformed sweep {text!r}") from None
    if not hi > lo > 0:
        raise ConfigError("sweep needs hi > lo > 0")
    if steps < 1:
        raise ConfigError("sweep needs at least one step")
    if steps == 1:
        return [lo]
    pts = np.geomspace(lo, hi, steps) if spacing == "log" else np.linspace(lo, hi, steps)
    return [float(v) for v in pts]


@dataclass
class ExperimentConfig:
    profile: str = "power:alpha=2"
    sigma: Optional[str] = "const:v=1"
    sigma1: Optional[str] = None
    sigma2: Optional[str] = None
    lambdas: list = field(default_factory=list)
    routes: tuple = ("modesum", "predict")
    resolution: float = 10.0
    nt: Optional[int] = None
    xmax: Optional[float] = None
    bc_top: str = "robin"
    bc_bottom: str = "robin"
    checks: tuple = ()
    out: str = "lab_out"
    seed: int = 0
    threads: int = 1

    def validate(self) -> "ExperimentConfig":
        if not self.lambdas:
            raise ConfigError("lambda sweep is empty")
        if any(not lam > 0 for lam in self.lambdas):
            raise ConfigError("lambda values must be positive")
        if not self.routes:
            raise ConfigError("at least one route is required")
        bad = set(self.routes) - set(ROUTES)
        if bad:
            raise ConfigError(f"unknown routes {sorted(bad)}")
        if (self.sigma1 is None) != (self.sigma2 is None):
            raise ConfigError("sigma1 and sigma2 must be given together")
        try:
            self.resolve()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def resolve(self):
        prof = profiles.parse_profile(self.profile)
        if self.sigma1 is not None:
            sig = profiles.BoundaryCoefficient.pair(profiles.parse_sigma(self.sigma1),
                                                    profiles.parse_sigma(self.sigma2))
        else:
            sig = profiles.parse_sigma(self.sigma or "const:v=0")
        return prof, sig


_LISTS = {"routes", "checks"}


def _coerce(name, value):
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in types:
        raise ConfigError(f"unknown config key {name!r}")
    if name == "lambdas":
        out = []
        for chunk in str(value).split():
            out.extend(parse_sweep(chunk))
        return out
    if name in _LISTS:
        return tuple(v for v in str(value).replace(",", " ").split() if v)
    if name in ("resolution", "xmax"):
        return None if value in (None, "", "none") else float(value)
    if name in ("nt", "seed", "threads"):
        return None if value in (None, "", "none") else int(value)
    return value


def load_config(path=None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Flat ``key = value`` file plus overrides; overrides win."""
    values = {}
    if path is not None:
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line without '=': {raw!r}")
            k, v = line.split("=", 1)
            values[k.strip()] = v.strip()
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    cfg = ExperimentConfig()
    for k, v in values.items():
        setattr(cfg, k, v if k == "lambdas" and isinstance(v, list) else _coerce(k, v))
    return cfg


@dataclass
class ComparisonRow:
    lam: float
    values: dict
    ratios: dict
    meta: dict
    seconds: dict
    errors: dict


def _edge_bcs(cfg):
    return {"top": cfg.bc_top, "bottom": cfg.bc_bottom}


def _route_count2d(cfg, prof, sig, lam, refine=0, xscale=1.0):
    xmax = cfg.xmax
    if xmax is None:
        xmax = schrodinger1d.build_grid(prof.a, lam, lambda x: profiles.eval_W(prof, sig, x),
                                        cfg.resolution).X
        xmax = prof.a + xscale * (xmax - prof.a)
    mesh = laplace2d.default_mesh(prof, lam, sig, resolution=cfg.resolution, n_t=cfg.nt, xmax=xmax,
                                  budget=MEMORY_BUDGET / 8 ** refine)
    for _ in range(refine):
        mesh = mesh.refined()
    _check_memory(mesh)
    pencil = laplace2d.assemble_robin(prof, sig, mesh, _edge_bcs(cfg))
    r = laplace2d.count_below_2d(pencil, lam)
    return r.count, {"X": mesh.X, "nx": mesh.n_x, "nt": mesh.n_t, "bandwidth": r.grid["bandwidth"],
                     "shift": r.shift_applied}


def _route_modesum(cfg, prof, sig, lam, refine=0, xscale=1.0):
    xmax = cfg.xmax
    if xmax is not None and xscale != 1.0:
        xmax = prof.a + xscale * (xmax - prof.a)
    r = schrodinger1d.mode_sum_count(prof, lam, sigma=sig, resolution=cfg.resolution * 2 ** refine,
                                     xmax=xmax)
    return r.count, {"modes_used": r.modes_used, "shift": r.shift_applied}


def _route_predict(cfg, prof, sig, lam):
    p = asymptotics.composite_prediction(prof, sig, lam)
    return p.total, {"regime": p.regime}


def estimate_bytes(mesh: laplace2d.MappedMesh) -> int:
    return laplace2d.band_bytes(mesh.n_x, mesh.n_t)


def _check_memory(mesh, budget=None):
    laplace2d.check_budget(mesh.n_x, mesh.n_t, MEMORY_BUDGET if budget is None else budget)


def _one_row(cfg, prof, sig, lam) -> ComparisonRow:
    values, meta, secs, errs = {}, {}, {}, {}
    for route in cfg.routes:
        t0 = time.perf_counter()
        try:
            if route == "count2d":
                v, m = _route_count2d(cfg, prof, sig, lam)
            elif route == "modesum":
                v, m = _route_modesum(cfg, prof, sig, lam)
            else:
                v, m = _route_predict(cfg, prof, sig, lam)
            values[route] = v
            meta.update({f"{route}_{k}": val for k, val in m.items()})
        except ResourceRefusal:
            raise
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            errs[route] = f"{type(exc).__name__}: {exc}"
        secs[route] = time.perf_counter() - t0
    ratios = {}
    pred = values.get("predict")
    if pred is not None and pred > 0:
        for route in ("count2d", "modesum"):
            if route in values:
                ratios[route] = values[route] / pred
    return ComparisonRow(lam, values, ratios, meta, secs, errs)


def _map_ordered(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _run_checks(cfg, prof, sig, rows):
    out = {}
    rng = np.random.default_rng(cfg.seed)
    for name in cfg.checks:
        if name == "monotone":
            ok = True
            for route in ("count2d", "modesum"):
                seq = [r.values[route] for r in rows if route in r.values]
                ok &= all(b >= a for a, b in zip(seq, seq[1:]))
            out[name] = ok
        elif name == "rank1":
            lams = np.sort(rng.uniform(min(cfg.lambdas), max(cfg.lambdas), 20))
            q = lambda x: profiles.eval_W(prof, sig, x)
            out[name] = schrodinger1d.rank_one_check(q, lams, prof.a, cfg.resolution) == 0
        else:
            raise ConfigError(f"unknown check {name!r}")
    return out


def run(cfg: ExperimentConfig, write: bool = True):
    """Execute the enabled routes for every lambda; returns (rows, summary)."""
    cfg.validate()
    prof, sig = cfg.resolve()
    lams = sorted(cfg.lambdas)
    rows = _map_ordered(lambda lam: _one_row(cfg, prof, sig, lam), lams, cfg.threads)

    slopes = {}
    for route in cfg.routes:
        pts = [(r.lam, r.values[route]) for r in rows if r.values.get(route, 0) > 0]
        if len(pts) >= 2:
            slopes[route] = asymptotics.loglog_slope(*zip(*pts))
    summary = {
        "schema_version": SCHEMA_VERSION,
        "profile": cfg.profile,
        "sigma": cfg.sigma if cfg.sigma1 is None else [cfg.sigma1, cfg.sigma2],
        "regime": profiles.classify_weyl_regime(prof).name,
        "routes": list(cfg.routes),
        "lambdas": lams,
        "slopes": slopes,
        "checks": _run_checks(cfg, prof, sig, rows),
        "failures": [{"lambda": r.lam, "route": k, "error": v} for r in rows for k, v in r.errors.items()],
        "caveat": "H_sigma part assumes the scaling hypothesis on N_lambda; see titchmarsh_applicable",
    }
    if write:
        write_outputs(cfg, rows, summary)
    return rows, summary


def write_outputs(cfg, rows, summary):
    from . import plotting

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ratio_routes = [r for r in ("count2d", "modesum") if r in cfg.routes and "predict" in cfg.routes]
    meta_keys = sorted({k for r in rows for k in r.meta})
    header = ["lambda"] + list(cfg.routes) + [f"ratio_{r}" for r in ratio_routes] + meta_keys
    with open(out / "compare.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r.lam)] + [_fmt(r.values.get(k)) for k in cfg.routes]
                       + [_fmt(r.ratios.get(k)) for k in ratio_routes]
                       + [_fmt(r.meta.get(k)) for k in meta_keys])
    with open(out / "timings.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda"] + [f"seconds_{k}" for k in cfg.routes])
        for r in rows:
            w.writerow([_fmt(r.lam)] + [f"{r.seconds.get(k, 0.0):.6f}" for k in cfg.routes])
    for route in cfg.routes:
        write_series(out / f"series_{route}.csv", [(r.lam, r.values[route]) for r in rows if route in r.values])
    (out / "summary.json").write_text(dump_json(summary))
    plotting.plot_comparison(rows, cfg.routes, out / "compare.png", title=f"{cfg.profile}, sigma {summary['sigma']}")


def write_series(path, pairs):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "value"])
        for lam, v in pairs:
            w.writerow([_fmt(float(lam)), _fmt(v if isinstance(v, int) else float(v))])


_FLOAT_TAG = re.compile(r'"\\u0000F([^"]*)\\u0000"')


def _tag_floats(obj):
    if isinstance(obj, float):
        if math.isfinite(obj):
            return f"\0F{obj:.17g}\0"
        return f"\0F{'NaN' if math.isnan(obj) else ('Infinity' if obj > 0 else '-Infinity')}\0"
    if isinstance(obj, dict):
        return {k: _tag_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tag_floats(v) for v in obj]
    return obj


def dump_json(obj) -> str:
    """Sorted, indented JSON with every float written to 17 significant digits."""
    text = json.dumps(_tag_floats(obj), indent=2, sort_keys=True)
    return _FLOAT_TAG.sub(lambda m: m.group(1), text) + "\n"


def convergence_study(cfg: ExperimentConfig, refinements: int = 3, budget: Optional[int] = None):
    """Counts per refinement level (h halved and X doubled each level).

    A fixed ``xmax`` in the config is part of the problem and is never doubled.
    Returns a list of dicts, one per (lambda, route, level).
    """
    if refinements < 2:
        raise ConfigError("convergence study needs at least 2 levels")
    cfg.validate()
    prof, sig = cfg.resolve()
    routes = [r for r in cfg.routes if r in ("count2d", "modesum")]
    if not routes:
        raise ConfigError("convergence study needs count2d or modesum")
    if "count2d" in routes:
        lam = max(cfg.lambdas)
        xmax = cfg.xmax
        if xmax is None:
            xmax = schrodinger1d.build_grid(prof.a, lam, lambda x: profiles.eval_W(prof, sig, x),
                                            cfg.resolution).X
            xmax = prof.a + 2 ** (refinements - 1) * (xmax - prof.a)
        budget = MEMORY_BUDGET if budget is None else budget
        mesh = laplace2d.default_mesh(prof, lam, sig, resolution=cfg.resolution, n_t=cfg.nt, xmax=xmax,
                                      budget=budget / 8 ** (refinements - 1))
        for _ in range(refinements - 1):
            mesh = mesh.refined()
        _check_memory(mesh, budget)

    table = []
    for lam in sorted(cfg.lambdas):
        for route in routes:
            prev = None
            for level in range(refinements):
                xscale = 1.0 if cfg.xmax is not None else 2.0 ** level
                fn = _route_count2d if route == "count2d" else _route_modesum
                c, m = fn(cfg, prof, sig, lam, refine=level, xscale=xscale)
                table.append({"lambda": lam, "route": route, "level": level, "count": c,
                              "delta": None if prev is None else c - prev, **m})
                prev = c
    return table


def scaling_sweep(cfg: ExperimentConfig, epsilons, operator: str = "H"):
    """Empirical constant max |N_lambda((1 +- eps) T) / N_lambda(T) - 1| / eps.

    ``operator`` is ``H`` (1D operator with W_sigma) or ``B`` (Dirichlet mode sum).
    """
    eps = [float(e) for e in epsilons]
    if not eps or any(not 0 < e <= 0.5 for e in eps):
        raise ConfigError("epsilons must lie in (0, 1/2]")
    cfg.validate()
    prof, sig = cfg.resolve()
    lam_top = max(cfg.lambdas) / (1.0 - max(eps))
    rows = []
    if operator == "H":
        q = lambda x: profiles.eval_W(prof, sig, x)
        grid = schrodinger1d.build_grid(prof.a, lam_top, q, cfg.resolution, cfg.xmax)
        T = schrodinger1d.operator_for(q, grid)
        count = lambda lam: schrodinger1d.count_below(T, lam).count
    elif operator == "B":
        def count(lam):
            return schrodinger1d.mode_sum_count(prof, lam, dirichlet=True, resolution=cfg.resolution,
                                                xmax=cfg.xmax).count
    else:
        raise ConfigError("operator must be H or B")
    for lam in sorted(cfg.lambdas):
        n0 = count(lam)
        for e in eps:
            n_plus = count(lam / (1.0 + e))
            n_minus = count(lam / (1.0 - e))
            const = (max(abs(n_plus / n0 - 1.0), abs(n_minus / n0 - 1.0)) / e) if n0 > 0 else math.nan
            rows.append({"lambda": lam, "eps": e, "N": n0, "N_plus": n_plus, "N_minus": n_minus,
                         "constant": const})
    return rows
