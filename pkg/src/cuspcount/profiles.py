"""Cusp profiles f, Robin coefficients sigma and the effective potentials.

A cusp domain is ``{x > a, |y| < f(x)}``.  Profiles carry analytic first and
second derivatives so that the potentials

    V(x) = (1/4) (f'/f)^2 + (1/2) (f'/f)'
    W(x) = V(x) + sigma(x) / f(x)

can be evaluated without numerical differentiation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

Func = Callable[[np.ndarray], np.ndarray]

HOLDS = "holds"
FAILS = "fails"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CuspProfile:
    """Half-width f of the cusp together with f' and f''.

    ``kind`` is one of ``power``, ``exp``, ``const``, ``table`` or ``custom``;
    ``params`` holds the preset parameters (``alpha``, ``scale``, ``c``, ...).
    """

    f: Func
    f1: Func
    f2: Func
    kind: str
    params: dict = field(default_factory=dict)
    a: float = 1.0
    tail_integral_hint: Optional[float] = None
    label: str = ""

    def eval_f(self, x):
        return self.f(np.asarray(x, dtype=float))

    def eval_f1(self, x):
        return self.f1(np.asarray(x, dtype=float))

    def eval_f2(self, x):
        return self.f2(np.asarray(x, dtype=float))

    def volume(self) -> float:
        """|Omega| = 2 * int_a^inf f, ``inf`` when the tail diverges."""
        if self.tail_integral_hint is not None:
            return 2.0 * self.tail_integral_hint
        if self.kind == "power" or self.kind == "const":
            return math.inf
        tail = tail_integral(self, self.a)
        return 2.0 * tail


@dataclass(frozen=True)
class BoundaryCoefficient:
    """Robin weight sigma(x) >= 0, optionally a (lower, upper) pair.

    In pair mode ``sigma`` returns the symmetrised coefficient
    (sigma1 + sigma2) / 2 and ``sides`` returns both.
    """

    s: Func
    s1: Func
    s2: Func
    kind: str
    params: dict = field(default_factory=dict)
    lower: Optional["BoundaryCoefficient"] = None
    upper: Optional["BoundaryCoefficient"] = None
    label: str = ""

    @property
    def pair_mode(self) -> bool:
        return self.lower is not None

    def sigma(self, x):
        return self.s(np.asarray(x, dtype=float))

    def sigma1(self, x):
        return self.s1(np.asarray(x, dtype=float))

    def sigma2_deriv(self, x):
        return self.s2(np.asarray(x, dtype=float))

    def sides(self, x):
        """(sigma1(x), sigma2(x)); both equal sigma(x) outside pair mode."""
        if self.pair_mode:
            return self.lower.sigma(x), self.upper.sigma(x)
        v = self.sigma(x)
        return v, v

    @classmethod
    def pair(cls, lower: "BoundaryCoefficient", upper: "BoundaryCoefficient"):
        return cls(
            s=lambda x: 0.5 * (lower.s(x) + upper.s(x)),
            s1=lambda x: 0.5 * (lower.s1(x) + upper.s1(x)),
            s2=lambda x: 0.5 * (lower.s2(x) + upper.s2(x)),
            kind="pair",
            params={"lower": lower.label, "upper": upper.label},
            lower=lower,
            upper=upper,
            label=f"pair({lower.label};{upper.label})",
        )


# -- presets -----------------------------------------------------------------


def make_power_profile(alpha: float, scale: float = 1.0, a: float = 1.0) -> CuspProfile:
    """f(x) = scale * x**(-alpha)."""
    if not alpha > 0:
        raise ValueError(f"power profile needs alpha > 0, got {alpha}")
    if not scale > 0:
        raise ValueError(f"power profile needs scale > 0, got {scale}")
    al, c = float(alpha), float(scale)
    hint = c * a ** (1.0 - al) / (al - 1.0) if al > 1.0 else None
    return CuspProfile(
        f=lambda x: c * x ** (-al),
        f1=lambda x: -al * c * x ** (-al - 1.0),
        f2=lambda x: al * (al + 1.0) * c * x ** (-al - 2.0),
        kind="power",
        params={"alpha": al, "scale": c},
        a=a,
        tail_integral_hint=hint,
        label=f"power:alpha={al:g}" + (f",scale={c:g}" if c != 1.0 else ""),
    )


def make_exp_profile(c: float, scale: float = 1.0, a: float = 1.0) -> CuspProfile:
    """f(x) = scale * exp(-c x)."""
    if not c > 0:
        raise ValueError(f"exponential profile needs c > 0, got {c}")
    cc, s = float(c), float(scale)
    return CuspProfile(
        f=lambda x: s * np.exp(-cc * x),
        f1=lambda x: -cc * s * np.exp(-cc * x),
        f2=lambda x: cc * cc * s * np.exp(-cc * x),
        kind="exp",
        params={"c": cc, "scale": s},
        a=a,
        tail_integral_hint=s * math.exp(-cc * a) / cc,
        label=f"exp:c={cc:g}",
    )


def make_const_profile(v: float, a: float = 1.0) -> CuspProfile:
    """Degenerate strip f = v (a rectangle once truncated)."""
    if not v > 0:
        raise ValueError(f"constant profile needs v > 0, got {v}")
    vv = float(v)
    return CuspProfile(
        f=lambda x: np.full_like(x, vv, dtype=float),
        f1=lambda x: np.zeros_like(x, dtype=float),
        f2=lambda x: np.zeros_like(x, dtype=float),
        kind="const",
        params={"v": vv},
        a=a,
        label=f"const:v={vv:g}",
    )


def make_table_profile(xs: Sequence[float], fs: Sequence[float], a: Optional[float] = None) -> CuspProfile:
    """Sampled profile, monotone cubic (PCHIP) interpolation.

    Derivatives are those of the interpolant.  Evaluation outside the sampled
    range raises ``ValueError``.
    """
    xs = np.asarray(xs, dtype=float)
    fs = np.asarray(fs, dtype=float)
    if xs.ndim != 1 or xs.size < 4 or xs.shape != fs.shape:
        raise ValueError("table profile needs at least 4 (x, f) samples")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("table x values must be strictly increasing")
    if np.any(fs <= 0):
        raise ValueError("table f values must be positive")
    p = PchipInterpolator(xs, fs, extrapolate=False)
    d1, d2 = p.derivative(1), p.derivative(2)
    lo, hi = xs[0], xs[-1]

    def guard(g):
        def h(x):
            x = np.asarray(x, dtype=float)
            if np.any(x < lo) or np.any(x > hi):
                raise ValueError(f"table profile evaluated outside [{lo}, {hi}]")
            return g(x)

        return h

    return CuspProfile(
        f=guard(p),
        f1=guard(d1),
        f2=guard(d2),
        kind="table",
        params={"x_max": float(hi)},
        a=float(lo if a is None else a),
        label="table",
    )


def make_custom_profile(f: Func, f1: Func, f2: Func, a: float = 1.0, label: str = "custom",
                        tail_integral_hint: Optional[float] = None) -> CuspProfile:
    return CuspProfile(f=f, f1=f1, f2=f2, kind="custom", a=a, label=label,
                       tail_integral_hint=tail_integral_hint)


def make_const_sigma(v: float) -> BoundaryCoefficient:
    if v < 0:
        raise ValueError(f"sigma must be nonnegative, got {v}")
    vv = float(v)
    return BoundaryCoefficient(
        s=lambda x: np.full_like(x, vv, dtype=float),
        s1=lambda x: np.zeros_like(x, dtype=float),
        s2=lambda x: np.zeros_like(x, dtype=float),
        kind="const",
        params={"v": vv},
        label=f"const:v={vv:g}",
    )


def make_power_sigma(s: float, beta: float) -> BoundaryCoefficient:
    """sigma(x) = s * x**(-beta)."""
    if s < 0:
        raise ValueError(f"sigma scale must be nonnegative, got {s}")
    if beta < 0:
        raise ValueError(f"sigma exponent beta must be nonnegative, got {beta}")
    ss, b = float(s), float(beta)
    return BoundaryCoefficient(
        s=lambda x: ss * x ** (-b),
        s1=lambda x: -b * ss * x ** (-b - 1.0),
        s2=lambda x: b * (b + 1.0) * ss * x ** (-b - 2.0),
        kind="power",
        params={"s": ss, "beta": b},
        label=f"powersigma:s={ss:g},beta={b:g}",
    )


def _parse_params(body: str) -> dict:
    out = {}
    for item in filter(None, body.split(",")):
        if "=" not in item:
            raise ValueError(f"malformed preset parameter {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = float(v)
    return out


def parse_profile(spec: str) -> CuspProfile:
    """Resolve ``power:alpha=2``, ``exp:c=1``, ``const:v=1`` or ``table:<csv>``."""
    kind, _, body = spec.partition(":")
    kind = kind.strip()
    if kind == "table":
        return load_table_profile(body)
    try:
        p = _parse_params(body)
        if kind == "power":
            return make_power_profile(p.pop("alpha"), scale=p.pop("scale", 1.0), a=p.pop("a", 1.0))
        if kind == "exp":
            return make_exp_profile(p.pop("c"), scale=p.pop("scale", 1.0), a=p.pop("a", 1.0))
        if kind == "const":
            return make_const_profile(p.pop("v"), a=p.pop("a", 1.0))
    except KeyError as exc:
        raise ValueError(f"profile spec {spec!r} is missing parameter {exc}") from None
    raise ValueError(f"unknown profile spec {spec!r}")


def parse_sigma(spec: str) -> BoundaryCoefficient:
    """Resolve ``const:v=1`` or ``powersigma:s=1,beta=0.5``."""
    kind, _, body = spec.partition(":")
    try:
        p = _parse_params(body)
        if kind == "const":
            return make_const_sigma(p["v"])
        if kind == "powersigma":
            return make_power_sigma(p["s"], p.get("beta", 0.0))
    except KeyError as exc:
        raise ValueError(f"sigma spec {spec!r} is missing parameter {exc}") from None
    raise ValueError(f"unknown sigma spec {spec!r}")


def load_table_profile(path) -> CuspProfile:
    """Two-column CSV with header (x, f)."""
    xs, fs = [], []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if not row:
                continue
            xs.append(float(row[0]))
            fs.append(float(row[1]))
    return make_table_profile(xs, fs)


# -- potentials --------------------------------------------------------------


def eval_V(profile: CuspProfile, x):
    """V = (1/4)(f'/f)^2 + (1/2)(f''/f - (f'/f)^2)."""
    x = np.asarray(x, dtype=float)
    f = profile.eval_f(x)
    if np.any(f <= 0):
        raise ValueError("profile is not positive at the evaluation point")
    g = profile.eval_f1(x) / f
    v = 0.25 * g * g + 0.5 * (profile.eval_f2(x) / f - g * g)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite profile derivatives")
    return v[()] if v.ndim == 0 else v


def eval_W(profile: CuspProfile, sigma: BoundaryCoefficient, x):
    """W_sigma = V + sigma / f (pair mode uses the mean coefficient)."""
    x = np.asarray(x, dtype=float)
    w = eval_V(profile, x) + sigma.sigma(x) / profile.eval_f(x)
    return w[()] if np.ndim(w) == 0 else w


# -- assumption audit -------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    probes: np.ndarray
    values: np.ndarray
    verdict: str


@dataclass(frozen=True)
class AssumptionReport:
    checks: list
    # diagnostic only: not one of the standing assumptions
    neumann: Optional[Check] = None

    def verdict(self, name: str) -> str:
        for c in self.checks:
            if c.name == name:
                return c.verdict
        raise KeyError(name)

    def all_hold(self) -> bool:
        return all(c.verdict == HOLDS for c in self.checks)

    def as_rows(self):
        extra = [self.neumann] if self.neumann is not None else []
        return [(c.name, c.verdict, float(c.values[-1])) for c in self.checks + extra]


def _strict(v, sign):
    d = np.diff(v)
    return bool(np.all(sign * d > 0))


def _to_zero(v):
    tail = np.abs(np.asarray(v[-3:], dtype=float))
    if np.all(tail == 0.0) or _strict(tail, -1):
        return HOLDS
    if np.all(np.diff(tail) >= 0) and tail[-1] > 0:
        return FAILS
    return INCONCLUSIVE


def _to_infinity(v):
    tail = np.asarray(v[-3:], dtype=float)
    if _strict(tail, +1):
        return HOLDS
    if np.all(np.diff(tail) <= 0):
        return FAILS
    return INCONCLUSIVE


def _bounded(v):
    tail = np.abs(np.asarray(v[-3:], dtype=float))
    if not np.all(np.isfinite(tail)):
        return FAILS
    if np.all(np.diff(tail) <= 0):
        return HOLDS
    if _strict(tail, +1):
        return FAILS
    return INCONCLUSIVE


def _sign_tail(v, want_nonpositive=True):
    tail = np.asarray(v[-3:], dtype=float)
    ok = tail <= 0 if want_nonpositive else tail >= 0
    if np.all(ok):
        return HOLDS
    if not np.any(ok):
        return FAILS
    return INCONCLUSIVE


def audit_assumptions(profile: CuspProfile, sigma: BoundaryCoefficient, probe_grid=None) -> AssumptionReport:
    """Finite-sample audit of the standing assumptions on f and sigma.

    Each trend ("-> 0", "-> inf", "bounded") is read off the last three probe
    values.  Grids spanning less than two decades give ``inconclusive`` for
    every trend check.
    """
    if probe_grid is None:
        probe_grid = np.geomspace(profile.a + 1.0, 100.0 * (profile.a + 1.0), 12)
    x = np.asarray(probe_grid, dtype=float)
    if x.ndim != 1 or x.size < 8:
        raise ValueError("probe grid needs at least 8 points")
    if np.any(np.diff(x) <= 0):
        raise ValueError("probe grid must be strictly increasing")
    wide = x[-1] >= 100.0 * x[0]

    f = profile.eval_f(x)
    f1 = profile.eval_f1(x)
    f2 = profile.eval_f2(x)
    s = sigma.sigma(x)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        w = eval_V(profile, x) + s / f if np.all(f > 0) else np.full_like(x, np.nan)
    neu = np.array([neumann_discreteness_value(profile, xi) for xi in x])

    def trend(v):
        return v if wide else INCONCLUSIVE

    checks = [
        Check("f_positive", x, f, HOLDS if np.all(f > 0) else FAILS),
        Check("f_nonincreasing_tail", x, f1, trend(_sign_tail(f1))),
        Check("f_to_zero", x, f, trend(_to_zero(f))),
        Check("f2_to_zero", x, f2, trend(_to_zero(f2))),
        Check("sigma_nonnegative", x, s, HOLDS if np.all(s >= 0) else FAILS),
        Check("sigma_bounded", x, s, trend(_bounded(s))),
        Check("sigma1_bounded", x, sigma.sigma1(x), trend(_bounded(sigma.sigma1(x)))),
        Check("sigma2_bounded", x, sigma.sigma2_deriv(x), trend(_bounded(sigma.sigma2_deriv(x)))),
        Check("W_unbounded", x, w, trend(_to_infinity(w)) if np.all(np.isfinite(w)) else INCONCLUSIVE),
    ]
    neumann = Check("neumann_discrete", x, neu, trend(_to_zero(neu)) if np.all(np.isfinite(neu)) else FAILS)
    return AssumptionReport(checks, neumann)


def landau_check(profile: CuspProfile, x: float, tail_samples: int = 64):
    """Compare f'(x)^2 with 2 sup f * sup |f''| over [x, 1000 x].

    Returns ``(lhs, rhs, holds)``.
    """
    if tail_samples < 64:
        raise ValueError("landau_check needs at least 64 tail samples")
    s = np.geomspace(x, 1e3 * x, tail_samples)
    lhs = float(profile.eval_f1(x)) ** 2
    rhs = 2.0 * float(np.max(profile.eval_f(s))) * float(np.max(np.abs(profile.eval_f2(s))))
    return lhs, rhs, lhs <= rhs * (1.0 + 1e-9)


def tail_integral(profile: CuspProfile, x: float) -> float:
    """int_x^inf f, ``inf`` if the tail does not decay."""
    p = profile.params
    if profile.kind == "power":
        al, c = p["alpha"], p["scale"]
        return c * x ** (1.0 - al) / (al - 1.0) if al > 1.0 else math.inf
    if profile.kind == "exp":
        return p["scale"] * math.exp(-p["c"] * x) / p["c"]
    if profile.kind == "const":
        return math.inf
    # truncate where f < 1e-14 f(x)
    fx = float(profile.eval_f(x))
    end = x + 1.0
    while float(profile.eval_f(end)) >= 1e-14 * fx:
        end = x + 2.0 * (end - x)
        if end > 1e6:
            return math.inf
    val, _ = integrate.quad(lambda t: float(profile.eval_f(t)), x, end, limit=400)
    return val


def neumann_discreteness_value(profile: CuspProfile, x: float) -> float:
    """(int_a^x dt/f) * (int_x^inf f); tends to 0 iff the Neumann spectrum is discrete."""
    if not x > profile.a:
        raise ValueError("x must exceed the left endpoint")
    tail = tail_integral(profile, x)
    if math.isinf(tail):
        return math.inf
    if profile.kind == "exp":
        c, s = profile.params["c"], profile.params["scale"]
        head = (math.exp(c * x) - math.exp(c * profile.a)) / (c * s)
    else:
        head, _ = integrate.quad(lambda t: 1.0 / float(profile.eval_f(t)), profile.a, x, limit=400)
    return head * tail


@dataclass(frozen=True)
class Regime:
    name: str
    a: Optional[float] = None


def classify_weyl_regime(profile: CuspProfile) -> Regime:
    """weyl (x^2 f -> 0), linear (x^2 f -> a^2) or superlinear (x^2 f -> inf)."""
    if profile.kind == "power":
        al = profile.params["alpha"]
        if al > 2.0:
            return Regime("weyl")
        if al == 2.0:
            return Regime("linear", math.sqrt(profile.params["scale"]))
        return Regime("superlinear")
    if profile.kind == "exp":
        return Regime("weyl")
    if profile.kind == "const":
        return Regime("superlinear")
    return Regime(INCONCLUSIVE)
