"""One-dimensional Schroedinger operators -d^2/dx^2 + q on (a, X).

Eigenvalues are counted exactly at the discrete level: the number of negative
pivots in the LDL^T factorisation of T - lambda I (Sturm sequence) equals the
number of eigenvalues of the tridiagonal matrix T below lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._kernels import sturm_count
from .profiles import BoundaryCoefficient, CuspProfile, eval_W

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
_BCS = (DIRICHLET, NEUMANN)
TINY_PIVOT = 1e-300
X_LIMIT = 1e6
SAFETY = 4.0


class ConfinementError(ValueError):
    """The potential never rises above the requested level."""


@dataclass(frozen=True)
class Grid1D:
    a: float
    X: float
    n: int

    @property
    def h(self) -> float:
        return (self.X - self.a) / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.a + self.h * np.arange(1, self.n + 1)

    def summary(self) -> dict:
        return {"a": self.a, "X": self.X, "n": self.n, "h": self.h}


@dataclass(frozen=True)
class TridiagonalOperator:
    diag: np.ndarray
    offdiag: np.ndarray
    bc_left: str
    bc_right: str
    h: float
    grid: Optional[Grid1D] = None

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass(frozen=True)
class CountResult:
    lam: float
    count: int
    method: str
    grid: dict = field(default_factory=dict)
    shift_applied: float = 0.0
    modes_used: int = 0


def _turning_point(q, a, level):
    """Smallest scanned x > a with q(x) >= level, refined by bisection."""
    step = 1e-3 * max(1.0, abs(a))
    prev = a
    x = a + step
    while x <= X_LIMIT:
        if float(q(x)) >= level:
            lo, hi = prev, x
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if float(q(mid)) >= level:
                    hi = mid
                else:
                    lo = mid
                if hi - lo <= 1e-12 * max(1.0, abs(hi)):
                    break
            return hi
        prev = x
        step *= 1.2
        x = a + step
    raise ConfinementError(f"potential does not confine: q < {level:g} up to x = {X_LIMIT:g}")


def build_grid(a: float, lambda_max: float, q: Callable, resolution: float = 10.0,
               xmax: Optional[float] = None) -> Grid1D:
    """Uniform grid on (a, X) resolving oscillations up to ``lambda_max``.

    X is twice the distance from ``a`` to the point where q first reaches
    4 * lambda_max, unless ``xmax`` is given.  The spacing obeys
    h <= 2 pi / (resolution * sqrt(lambda_max)).
    """
    if resolution < 10:
        raise ValueError("resolution must be at least 10 points per wavelength")
    if lambda_max <= 0:
        raise ValueError("lambda_max must be positive")
    hmax = 2.0 * math.pi / (resolution * math.sqrt(lambda_max))
    if xmax is None:
        xt = _turning_point(q, a, SAFETY * lambda_max)
        X = a + max(2.0 * (xt - a), 17.0 * hmax)
    else:
        if xmax <= a:
            raise ValueError("xmax must exceed a")
        X = float(xmax)
    n = max(16, math.ceil((X - a) / hmax) - 1)
    return Grid1D(float(a), float(X), int(n))


def assemble(q_vals, grid: Grid1D, bc_left: str = DIRICHLET, bc_right: str = DIRICHLET) -> TridiagonalOperator:
    """Second-order central stencil; Neumann ends by ghost-node reflection."""
    if bc_left not in _BCS or bc_right not in _BCS:
        raise ValueError(f"boundary condition must be one of {_BCS}")
    q_vals = np.asarray(q_vals, dtype=float)
    if q_vals.shape != (grid.n,):
        raise ValueError("potential samples do not match the grid")
    h = grid.h
    ih2 = 1.0 / (h * h)
    diag = 2.0 * ih2 + q_vals
    if bc_left == NEUMANN:
        diag[0] -= ih2
    if bc_right == NEUMANN:
        diag[-1] -= ih2
    off = np.full(grid.n - 1, -ih2)
    return TridiagonalOperator(diag, off, bc_left, bc_right, h, grid)


def operator_for(q: Callable, grid: Grid1D, bc_left: str = DIRICHLET, bc_right: str = DIRICHLET):
    return assemble(np.asarray(q(grid.nodes), dtype=float), grid, bc_left, bc_right)


def count_below(T: TridiagonalOperator, lam: float, method: str = "sturm") -> CountResult:
    """Number of eigenvalues of T strictly below ``lam``.

    A vanishing pivot means ``lam`` sits on an eigenvalue; it is then moved
    down by 1e-9 (1 + |lam|) so the eigenvalue is not counted.
    """
    shift = 0.0
    for _ in range(4):
        c, _ = sturm_count(T.diag, T.offdiag, lam - shift, TINY_PIVOT)
        if c >= 0:
            g = T.grid.summary() if T.grid is not None else {"h": T.h, "n": T.n}
            return CountResult(float(lam), int(c), method, g, shift)
        shift += 1e-9 * (1.0 + abs(lam))
    raise ArithmeticError(f"zero pivot persists near lambda = {lam}")


def eigenvalue_k(T: TridiagonalOperator, k: int) -> float:
    """k-th eigenvalue (1-based) by bisection on the Sturm count."""
    if not 1 <= k <= T.n:
        raise ValueError(f"k must lie in [1, {T.n}]")
    r = 2.0 * np.max(np.abs(T.offdiag)) if T.n > 1 else 0.0
    lo = float(np.min(T.diag)) - r
    hi = float(np.max(T.diag)) + r
    while True:
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-10 * (1.0 + abs(mid)) or mid in (lo, hi):
            return mid
        if count_below(T, mid).count >= k:
            hi = mid
        else:
            lo = mid


def mode_potential(profile: CuspProfile, sigma: BoundaryCoefficient, k: int) -> Callable:
    """W_sigma + k^2 pi^2 / (4 f^2); k = 0 gives W_sigma itself."""
    if k < 0:
        raise ValueError("mode index must be nonnegative")
    c = (k * math.pi) ** 2 / 4.0
    if k == 0:
        return lambda x: eval_W(profile, sigma, x)
    return lambda x: eval_W(profile, sigma, x) + c / profile.eval_f(x) ** 2


def dirichlet_mode_potential(profile: CuspProfile, k: int) -> Callable:
    """pi^2 k^2 / (4 f^2), the k-th mode of the Dirichlet comparison operator."""
    if k < 1:
        raise ValueError("Dirichlet modes start at k = 1")
    c = (k * math.pi) ** 2 / 4.0
    return lambda x: c / profile.eval_f(x) ** 2


def _scan(profile: CuspProfile, a: float, xmax: Optional[float]):
    hi = xmax if xmax is not None else a + 1e3
    return np.concatenate(([a], a + np.geomspace(1e-4, hi - a, 400)))


def mode_sum_count(profile: CuspProfile, lam: float, sigma: Optional[BoundaryCoefficient] = None,
                   dirichlet: bool = False, bc_left: str = DIRICHLET, a: Optional[float] = None,
                   resolution: float = 10.0, xmax: Optional[float] = None) -> CountResult:
    """Sum of mode counts for the separated operator.

    With ``dirichlet=True`` the modes k >= 1 carry pi^2 k^2 / (4 f^2)
    (the all-Dirichlet comparison operator B); otherwise modes k >= 0 carry
    W_sigma + k^2 pi^2 / (4 f^2).  Summation stops at the first k for which
    inf(base) + k^2 pi^2 / (4 sup f^2) exceeds ``lam``.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if not dirichlet and sigma is None:
        raise ValueError("sigma is required unless dirichlet=True")
    a = profile.a if a is None else a
    xs = _scan(profile, a, xmax)
    fsup = float(np.max(profile.eval_f(xs)))
    base_inf = 0.0 if dirichlet else float(np.min(eval_W(profile, sigma, xs)))
    total = 0
    k = 1 if dirichlet else 0
    used = 0
    first = None
    shift = 0.0
    while base_inf + (k * math.pi) ** 2 / (4.0 * fsup * fsup) <= lam:
        q = dirichlet_mode_potential(profile, k) if dirichlet else mode_potential(profile, sigma, k)
        grid = build_grid(a, lam, q, resolution, xmax)
        T = operator_for(q, grid, bc_left)
        r = count_below(T, lam)
        total += r.count
        shift = max(shift, r.shift_applied)
        used += 1
        if first is None:
            first = grid.summary()
        k += 1
    method = "modesum-dirichlet" if dirichlet else "modesum"
    return CountResult(float(lam), total, method, first or {}, shift, used)


def rank_one_check(q: Callable, lambda_sweep, a: float = 1.0, resolution: float = 10.0,
                   xmax: Optional[float] = None) -> int:
    """Largest distance of N^Neumann - N^Dirichlet from {0, 1} over the sweep."""
    lams = np.asarray(list(lambda_sweep), dtype=float)
    if lams.size == 0:
        raise ValueError("lambda sweep is empty")
    grid = build_grid(a, float(lams.max()), q, resolution, xmax)
    qv = np.asarray(q(grid.nodes), dtype=float)
    TD = assemble(qv, grid, DIRICHLET)
    TN = assemble(qv, grid, NEUMANN)
    worst = 0
    for lam in lams:
        d = count_below(TN, lam).count - count_below(TD, lam).count
        worst = max(worst, -d if d < 0 else max(0, d - 1))
    return worst


def scaled_count(T: TridiagonalOperator, lam: float, factor: float) -> int:
    """N_lambda(factor * T) = N_{lambda / factor}(T)."""
    return count_below(T, lam / factor).count
