"""Closed-form and phase-space predictions for N_lambda."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .profiles import (INCONCLUSIVE, BoundaryCoefficient, CuspProfile, classify_weyl_regime,
                       eval_W)

X_LIMIT = 1e6


# -- special functions ------------------------------------------------------


def beta_fn(a: float, b: float) -> float:
    """Euler beta B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)."""
    if not (a > 0 and b > 0):
        raise ValueError("beta_fn needs positive arguments")
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def _borwein_coeffs(n: int):
    # d_k from Borwein (1991), algorithm 2
    d = []
    acc = 0.0
    for i in range(n + 1):
        acc += n * math.factorial(n + i - 1) * 4.0 ** i / (math.factorial(n - i) * math.factorial(2 * i))
        d.append(acc)
    return d


_D = _borwein_coeffs(40)


def zeta_fn(s: float) -> float:
    """Riemann zeta for real s > 1 via the accelerated alternating eta series."""
    if not s > 1:
        raise ValueError("zeta_fn is defined here for s > 1 only")
    n = len(_D) - 1
    total = 0.0
    for k in range(n):
        total += (-1) ** k * (_D[k] - _D[n]) / (k + 1) ** s
    eta = -total / _D[n]
    return eta / (1.0 - 2.0 ** (1.0 - s))


# -- Weyl and phase-space counts --------------------------------------------


def weyl_term(volume: float, lam: float) -> float:
    """lambda |Omega| / (4 pi)."""
    if not math.isfinite(volume) or volume <= 0:
        raise ValueError("Weyl term needs a finite positive volume")
    return lam * volume / (4.0 * math.pi)


def _safe(q, x):
    # a potential that cannot be evaluated far out (f underflow) is treated as infinite
    try:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            v = float(q(x))
    except (ValueError, ZeroDivisionError, OverflowError):
        return math.inf
    return v if not math.isnan(v) else math.inf


def _last_crossing(q, a, lam):
    """Point x* where q rises through lam for the last time on a geometric scan."""
    step = 1e-3 * max(1.0, abs(a))
    xs = [a]
    while xs[-1] < X_LIMIT:
        xs.append(a + step)
        step *= 1.1
    xs = np.asarray(xs)
    vals = np.array([_safe(q, x) for x in xs])
    below = np.nonzero(vals < lam)[0]
    if below.size == 0:
        return None
    i = below[-1]
    if i == xs.size - 1:
        raise ValueError(f"potential stays below {lam:g} up to x = {X_LIMIT:g}")
    lo, hi = xs[i], xs[i + 1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(q(mid)) < lam:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * hi:
            break
    return lo


def titchmarsh_count(q: Callable, lam: float, a: float = 1.0) -> float:
    """(1/pi) int_a^{x*} sqrt((lam - q)_+) dx.

    The last tenth of the interval is integrated in u = sqrt(x* - x), which
    removes the square-root vanishing at the turning point.
    """
    if float(q(a)) >= lam:
        return 0.0
    xs = _last_crossing(q, a, lam)
    if xs is None or xs <= a:
        return 0.0

    def g(x):
        return math.sqrt(max(lam - float(q(x)), 0.0))

    cut = xs - 0.1 * (xs - a)
    head, _ = integrate.quad(g, a, cut, epsabs=0.0, epsrel=1e-11, limit=500)
    d = math.sqrt(xs - cut)
    tail, _ = integrate.quad(lambda u: 2.0 * u * g(xs - u * u), 0.0, d, epsabs=0.0, epsrel=1e-11, limit=500)
    return (head + tail) / math.pi


def _fd(q, x, order):
    h = 1e-4 * max(1.0, abs(x))
    if order == 1:
        return (float(q(x + h)) - float(q(x - h))) / (2 * h)
    return (float(q(x + h)) - 2 * float(q(x)) + float(q(x - h))) / (h * h)


def titchmarsh_applicable(q: Callable, probe_grid) -> str:
    """'convex', 'titchmarsh' or 'inconclusive' from the tail of the probe grid.

    Convexity (q' > 0, q'' >= 0) is tested first; otherwise the growth test
    q' > 0 with x^3 q' strictly increasing.
    """
    x = np.asarray(probe_grid, dtype=float)
    if x.size < 8:
        raise ValueError("probe grid needs at least 8 points")
    tail = x[-3:]
    d1 = np.array([_fd(q, t, 1) for t in tail])
    d2 = np.array([_fd(q, t, 2) for t in tail])
    scale = np.array([abs(float(q(t))) for t in tail]) + 1.0
    if not np.all(d1 > 1e-9 * scale):
        return INCONCLUSIVE
    if np.all(d2 >= 0):
        return "convex"
    if np.all(np.diff(tail ** 3 * d1) > 0):
        return "titchmarsh"
    return INCONCLUSIVE


# -- closed forms -------------------------------------------------------------


def hsigma_closed_form(alpha: float, beta: float, sigma0: float, lam: float) -> float:
    """Leading term of N_lambda(H_sigma) for f = x^-alpha, sigma = sigma0 x^-beta."""
    if not alpha > beta >= 0:
        raise ValueError("need alpha > beta >= 0")
    if not sigma0 > 0:
        raise ValueError("sigma0 must be positive")
    if lam <= 0:
        return 0.0
    g = alpha - beta
    coef = sigma0 ** (-1.0 / g) / (g * math.pi) * beta_fn(1.0 / g, 1.5)
    return coef * lam ** (0.5 + 1.0 / g)


def dirichlet_superlinear(alpha: float, lam: float) -> float:
    """Dirichlet counting term for f = x^-alpha with 0 < alpha <= 1."""
    if not 0 < alpha <= 1:
        raise ValueError("superlinear Dirichlet term needs 0 < alpha <= 1")
    if lam <= math.e:
        raise ValueError("lambda must exceed e")
    if alpha == 1.0:
        return lam * math.log(lam) / math.pi
    coef = (2.0 / math.pi) ** (1.0 / alpha) * zeta_fn(1.0 / alpha) * beta_fn(1.0 + 0.5 / alpha, 0.5) / math.pi
    return coef * lam ** (0.5 + 0.5 / alpha)


@dataclass(frozen=True)
class SpectralPrediction:
    lam: float
    weyl_part: float
    h_sigma_part: float
    dirichlet_superlinear_part: float
    regime: str
    provenance: dict = field(default_factory=dict)
    linear_coefficient: float | None = None

    @property
    def total(self) -> float:
        return self.weyl_part + self.h_sigma_part + self.dirichlet_superlinear_part


def _sigma_power(sigma: BoundaryCoefficient):
    """(sigma0, beta) when sigma = sigma0 x^-beta, else None."""
    if sigma.pair_mode:
        lo, up = sigma.lower, sigma.upper
        if lo.kind == up.kind == "const":
            return 0.5 * (lo.params["v"] + up.params["v"]), 0.0
        if lo.kind == up.kind == "power" and lo.params["beta"] == up.params["beta"]:
            return 0.5 * (lo.params["s"] + up.params["s"]), lo.params["beta"]
        return None
    if sigma.kind == "const":
        return sigma.params["v"], 0.0
    if sigma.kind == "power":
        return sigma.params["s"], sigma.params["beta"]
    return None


def composite_prediction(profile: CuspProfile, sigma: BoundaryCoefficient, lam: float) -> SpectralPrediction:
    """Weyl (or superlinear Dirichlet) part plus the H_sigma contribution."""
    regime = classify_weyl_regime(profile)
    vol = profile.volume()
    prov = {}
    sp = _sigma_power(sigma)
    closed = (profile.kind == "power" and profile.params["scale"] == 1.0 and profile.a == 1.0
              and sp is not None and sp[0] > 0)
    if closed and not profile.params["alpha"] > sp[1]:
        raise ValueError("W_sigma is not confining for beta >= alpha; the H_sigma part is undefined")

    if closed:
        h_part = hsigma_closed_form(profile.params["alpha"], sp[1], sp[0], lam)
        prov["h_sigma_part"] = "closed-form"
    else:
        h_part = titchmarsh_count(lambda x: eval_W(profile, sigma, x), lam, profile.a)
        prov["h_sigma_part"] = "titchmarsh"

    if math.isfinite(vol):
        weyl = weyl_term(vol, lam)
        sup = 0.0
        prov["weyl_part"] = "weyl"
    else:
        if profile.kind != "power" or profile.params["scale"] != 1.0:
            raise ValueError("infinite-volume prediction is only available for f = x^-alpha")
        weyl = 0.0
        sup = dirichlet_superlinear(profile.params["alpha"], lam)
        prov["dirichlet_superlinear_part"] = "closed-form"

    lin = None
    if regime.name == "linear" and sp is not None and sp[1] == 0.0 and sp[0] > 0:
        lin = vol / (4.0 * math.pi) + abs(regime.a) / (4.0 * math.sqrt(sp[0]))
    return SpectralPrediction(float(lam), weyl, h_part, sup, regime.name, prov, lin)


def dn_threshold_x(profile: CuspProfile, lam: float) -> float:
    """x_lambda with f(x_lambda) = pi / (4 sqrt(lambda)), f decreasing."""
    target = math.pi / (4.0 * math.sqrt(lam))
    a = profile.a
    if float(profile.eval_f(a)) <= target:
        raise ValueError("pi / (4 sqrt(lambda)) is not below f(a); lambda too small")
    lo, hi = a, a + 1.0
    while float(profile.eval_f(hi)) > target:
        lo, hi = hi, a + 2.0 * (hi - a)
        if hi > X_LIMIT:
            raise ValueError("f does not fall below pi / (4 sqrt(lambda))")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(profile.eval_f(mid)) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


def loglog_slope(lams, values) -> float:
    """Least-squares slope of log(values) against log(lams)."""
    x = np.log(np.asarray(lams, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
