"""Principal Robin eigenvalue of -d^2/dy^2 on the cross-section (-f, f).

The symmetric eigenfunction is cos(kappa y) with kappa the first root of
kappa * tan(kappa f) = sigma.  With unequal weights the eigenfunction is
cos(kappa y + phase); both boundary conditions reduce to

    arctan(sigma1 / kappa) + arctan(sigma2 / kappa) = 2 kappa f,

whose left side decreases and right side increases in kappa, so a single
bracketed root exists in (0, pi / (2 f)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# bisection runs to full double resolution unless a tolerance is given
REL_TOL = 0.0


@dataclass(frozen=True)
class TransverseMode:
    kappa: float
    mu: float
    phase: float
    f_val: float
    sigma_vals: tuple


def _bisect(g, lo, hi, rtol=REL_TOL, maxiter=400):
    """Root of an increasing function g on [lo, hi] with g(lo) <= 0 <= g(hi)."""
    glo = g(lo)
    if glo == 0.0:
        return lo
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = g(mid)
        if gm == 0.0:
            return mid
        if gm < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return 0.5 * (lo + hi)


def solve_kappa(f_val: float, sigma_val: float) -> TransverseMode:
    """First nonnegative root of kappa * tan(kappa f) - sigma."""
    if not f_val > 0:
        raise ValueError(f"f must be positive, got {f_val}")
    if sigma_val < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma_val}")
    if sigma_val == 0.0:
        return TransverseMode(0.0, 0.0, 0.0, f_val, (0.0, 0.0))
    f, s = float(f_val), float(sigma_val)
    # kappa tan(kappa f) = s  <=>  z tan z = s f  with z = kappa f
    sf = s * f
    z = _bisect(lambda z: z * math.tan(z) - sf, 0.0, 0.5 * math.pi * (1.0 - 1e-12))
    k = z / f
    return TransverseMode(k, k * k, 0.0, f, (s, s))


def mu_over_sigma_ratio(f_val: float, sigma_val: float) -> float:
    """mu f / sigma, in (0, 1] and -> 1 as sigma f -> 0."""
    if sigma_val <= 0:
        raise ValueError("sigma must be positive for the ratio")
    return solve_kappa(f_val, sigma_val).mu * f_val / sigma_val


def eval_v(mode: TransverseMode, y):
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > mode.f_val * (1.0 + 1e-14)):
        raise ValueError("y lies outside the cross-section")
    out = np.cos(mode.kappa * y + mode.phase)
    return out[()] if out.ndim == 0 else out


def solve_nonsymmetric(f_val: float, sigma1: float, sigma2: float) -> TransverseMode:
    """Principal mode for w'(-f) = sigma1 w(-f), w'(f) = -sigma2 w(f).

    ``sigma2 = inf`` is accepted and yields a Dirichlet condition at y = f.
    The phase satisfies kappa tan(kappa f - phase) = sigma1 and
    kappa tan(kappa f + phase) = sigma2.
    """
    if not f_val > 0:
        raise ValueError(f"f must be positive, got {f_val}")
    if sigma1 < 0 or sigma2 < 0:
        raise ValueError("sigma values must be nonnegative")
    f = float(f_val)
    s1, s2 = float(sigma1), float(sigma2)
    if s1 == 0.0 and s2 == 0.0:
        return TransverseMode(0.0, 0.0, 0.0, f, (s1, s2))

    # z = kappa f; arctan(s1 f / z) + arctan(s2 f / z) = 2 z
    a1, a2 = s1 * f, s2 * f

    def atan_ratio(a, z):
        return 0.5 * math.pi if math.isinf(a) else math.atan2(a, z)

    def g(z):
        return 2.0 * z - atan_ratio(a1, z) - atan_ratio(a2, z)

    z = _bisect(g, 0.0, 0.5 * math.pi)
    if not 0.0 < z < 0.5 * math.pi:
        raise RuntimeError(f"non-symmetric transverse solve failed, residual {g(z):.3e}")
    k = z / f
    phase = 0.5 * (atan_ratio(a2, z) - atan_ratio(a1, z))
    return TransverseMode(k, k * k, phase, f, (s1, s2))


def dn_lowest_mode(f_val: float) -> float:
    """pi^2 / (16 f^2): Neumann at one end, Dirichlet at the other, width 2f."""
    if not f_val > 0:
        raise ValueError(f"f must be positive, got {f_val}")
    return math.pi ** 2 / (16.0 * f_val * f_val)
