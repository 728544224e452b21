"""Mapped bilinear finite elements for the Robin Laplacian on a truncated cusp.

The cusp {a < x < X, |y| < f(x)} is mapped onto the rectangle
(a, X) x (-1, 1) by t = y / f(x).  For U(x, t) = u(x, f(x) t) the chain rule
gives u_x = U_x - t (f'/f) U_t and u_y = U_t / f, so

    K[U] = int int ((U_x - t (f'/f) U_t)^2 + f^-2 U_t^2) f dx dt
           + int sigma1 U(x, -1)^2 dx + int sigma2 U(x, 1)^2 dx
    M[U] = int int U^2 f dx dt.

Eigenvalues of the pencil (K, M) below lambda are counted by the inertia of
K - lambda M (Sylvester), read off the pivots of a banded LDL^T without
pivoting.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from ._kernels import banded_ldlt_inertia, csr_to_lower_band
from .profiles import BoundaryCoefficient, CuspProfile, eval_W
from .schrodinger1d import CountResult, build_grid

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
ROBIN = "robin"
EDGES = ("left", "right", "bottom", "top")
ROBIN_EDGES = {"left": DIRICHLET, "right": DIRICHLET, "bottom": ROBIN, "top": ROBIN}

_G = np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)])


@dataclass(frozen=True)
class MappedMesh:
    x_nodes: np.ndarray
    t_nodes: np.ndarray

    def __post_init__(self):
        if self.n_x < 8 or self.n_t < 8:
            raise ValueError("mesh needs at least 8 cells in each direction")
        if np.any(np.diff(self.x_nodes) <= 0) or np.any(np.diff(self.t_nodes) <= 0):
            raise ValueError("mesh nodes must be strictly increasing")

    @property
    def n_x(self) -> int:
        return self.x_nodes.size - 1

    @property
    def n_t(self) -> int:
        return self.t_nodes.size - 1

    @property
    def a(self) -> float:
        return float(self.x_nodes[0])

    @property
    def X(self) -> float:
        return float(self.x_nodes[-1])

    def refined(self) -> "MappedMesh":
        """Bisect every cell in both directions."""
        return MappedMesh(_bisect_nodes(self.x_nodes), _bisect_nodes(self.t_nodes))

    def node_index(self, x_value: float) -> int:
        i = int(np.argmin(np.abs(self.x_nodes - x_value)))
        if abs(self.x_nodes[i] - x_value) > 1e-12 * max(1.0, abs(x_value)):
            raise ValueError(f"x = {x_value} is not a mesh node")
        return i

    def slice_x(self, i0: int, i1: int) -> "MappedMesh":
        return MappedMesh(self.x_nodes[i0:i1 + 1].copy(), self.t_nodes)


def _bisect_nodes(z):
    out = np.empty(2 * z.size - 1)
    out[0::2] = z
    out[1::2] = 0.5 * (z[:-1] + z[1:])
    return out


def _march(profile: CuspProfile, lo: float, hi: float, hmax: float, shrink: float):
    xs = [lo]
    x = lo
    while True:
        f = float(profile.eval_f(x))
        d = abs(float(profile.eval_f1(x)))
        step = hmax if d == 0.0 else min(hmax, shrink * f / d)
        if x + step >= hi - 0.25 * step:
            break
        x += step
        xs.append(x)
    xs.append(hi)
    return xs


def build_mesh(profile: CuspProfile, X: float, n_t: int, hmax: float, a: Optional[float] = None,
               shrink: float = 0.03, breakpoints: Sequence[float] = (), min_nx: int = 8) -> MappedMesh:
    """Geometric x-grid (f shrinks by at most ``shrink`` per cell) capped at ``hmax``.

    Every breakpoint becomes a mesh node.
    """
    a = profile.a if a is None else a
    if X <= a:
        raise ValueError("X must exceed a")
    cuts = [a] + sorted(float(b) for b in breakpoints) + [X]
    if any(not (a < b < X) for b in cuts[1:-1]):
        raise ValueError("breakpoints must lie strictly inside (a, X)")
    hmax = min(hmax, (X - a) / min_nx)
    xs = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        seg = _march(profile, lo, hi, hmax, shrink)
        xs.extend(seg if not xs else seg[1:])
    t = np.linspace(-1.0, 1.0, n_t + 1)
    return MappedMesh(np.asarray(xs), t)


class ResourceRefusal(RuntimeError):
    """A mesh would exceed the memory budget; the message carries the sizing."""


def band_bytes(n_x: int, n_t: int) -> int:
    """Rough footprint of the banded factorization (three band-sized arrays)."""
    n = (n_x + 1) * (n_t + 1)
    return 8 * n * (n_t + 3) * 3


def check_budget(n_x: int, n_t: int, budget: float) -> None:
    need = band_bytes(n_x, n_t)
    if need > budget:
        raise ResourceRefusal(
            f"mesh {n_x}x{n_t} needs ~{need / 2**20:.0f} MiB of band storage, "
            f"budget is {budget / 2**20:.0f} MiB")


def default_mesh(profile: CuspProfile, lam: float, sigma: Optional[BoundaryCoefficient] = None,
                 resolution: float = 10.0, n_t: Optional[int] = None, xmax: Optional[float] = None,
                 breakpoints: Sequence[float] = (), budget: Optional[float] = None) -> MappedMesh:
    """Mesh resolving lambda: hx <= 2 pi / (resolution sqrt(lambda)).

    The right end follows the 1D truncation rule applied to W_sigma; ``n_t``
    defaults to resolution * k_max / 2 where k_max = 2 f(a) sqrt(lambda) / pi
    counts the transverse modes below lambda.  With ``budget`` (bytes) an
    oversized mesh is refused before it is built.
    """
    if xmax is None:
        if sigma is None:
            raise ValueError("xmax is required without sigma")
        xmax = build_grid(profile.a, lam, lambda x: eval_W(profile, sigma, x), max(resolution, 10.0)).X
    if n_t is None:
        kmax = 2.0 * float(profile.eval_f(profile.a)) * math.sqrt(lam) / math.pi
        n_t = max(8, 2 * math.ceil(resolution * kmax / 4.0))
    hmax = 2.0 * math.pi / (resolution * math.sqrt(lam))
    if budget is not None:
        # the x-march never uses fewer than (X - a) / hmax cells
        check_budget(math.ceil((xmax - profile.a) / hmax), n_t, budget)
    return build_mesh(profile, xmax, n_t, hmax, breakpoints=breakpoints)


@dataclass(frozen=True)
class GeneralizedPencil:
    K: sp.csr_matrix
    M: sp.csr_matrix
    bcs: dict
    mesh: MappedMesh
    free: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def bandwidth(self) -> int:
        c = self.K.tocoo()
        return int(np.max(np.abs(c.row - c.col))) if c.nnz else 0


def _check_bcs(edge_bcs):
    bcs = dict(ROBIN_EDGES)
    bcs.update(edge_bcs or {})
    for e, v in bcs.items():
        if e not in EDGES or v not in (DIRICHLET, NEUMANN, ROBIN):
            raise ValueError(f"bad edge condition {e}={v}")
        if e in ("left", "right") and v == ROBIN:
            raise ValueError("Robin conditions are only supported on the curved edges")
    return bcs


def _assemble(profile: CuspProfile, mesh: MappedMesh, bcs: dict, sides=None, mapped: bool = True,
              extra_dirichlet_columns: Sequence[int] = ()):
    """Shared assembly loop; ``mapped=False`` drops the Jacobian and cross term (operator B)."""
    xn, tn = mesh.x_nodes, mesh.t_nodes
    nx, nt = mesh.n_x, mesh.n_t
    fvals = profile.eval_f(xn)
    if np.any(~(fvals > 0)):
        raise ValueError("profile is not positive on the mesh")
    hx = np.diff(xn)
    ht = np.diff(tn)
    # reference bilinear basis, local order (0,0), (1,0), (0,1), (1,1)
    K = np.zeros((nx, nt, 4, 4))
    M = np.zeros((nx, nt, 4, 4))
    area = hx[:, None] * ht[None, :]
    for xi in _G:
        xq = xn[:-1] + hx * xi
        fq = profile.eval_f(xq)
        if np.any(~(fq > 0)):
            raise ValueError("profile is not positive on the mesh")
        gq = profile.eval_f1(xq) / fq if mapped else np.zeros_like(fq)
        wq = fq if mapped else np.ones_like(fq)
        for eta in _G:
            tq = tn[:-1] + ht * eta
            N = np.array([(1 - xi) * (1 - eta), xi * (1 - eta), (1 - xi) * eta, xi * eta])
            dxi = np.array([-(1 - eta), 1 - eta, -eta, eta])
            deta = np.array([-(1 - xi), -xi, 1 - xi, xi])
            Dx = dxi[None, :] / hx[:, None]                     # (nx, 4)
            Dt = deta[None, :] / ht[:, None]                    # (nt, 4)
            G = Dx[:, None, :] - (tq[None, :, None] * gq[:, None, None]) * Dt[None, :, :]
            Tt = Dt[None, :, :] / fq[:, None, None]             # f^-1 U_t
            w = 0.25 * area * wq[:, None]                       # Gauss weight 1/4 on the unit cell
            K += w[..., None, None] * (G[..., :, None] * G[..., None, :] + Tt[..., :, None] * Tt[..., None, :])
            M += w[..., None, None] * (N[:, None] * N[None, :])[None, None]

    stride = nt + 1
    base = np.arange(nx)[:, None] * stride + np.arange(nt)[None, :]
    loc = np.stack([base, base + stride, base + 1, base + stride + 1], axis=-1)  # (nx, nt, 4)
    rows = np.broadcast_to(loc[..., :, None], K.shape).ravel()
    cols = np.broadcast_to(loc[..., None, :], K.shape).ravel()
    ntot = (nx + 1) * stride

    rr, cc, vv = [rows], [cols], [K.ravel()]
    if sides is not None:
        s_lo, s_up = sides
        for edge, j, s in (("bottom", 0, s_lo), ("top", nt, s_up)):
            if bcs[edge] != ROBIN:
                continue
            sv = np.asarray(s(xn), dtype=float)
            if np.any(sv < 0):
                raise ValueError("sigma must be nonnegative")
            node = np.arange(nx + 1) * stride + j
            # trapezoidal rule along each edge segment
            wts = np.zeros(nx + 1)
            wts[:-1] += 0.5 * hx
            wts[1:] += 0.5 * hx
            rr.append(node)
            cc.append(node)
            vv.append(wts * sv)
    Kg = sp.coo_matrix((np.concatenate(vv), (np.concatenate(rr), np.concatenate(cc))), shape=(ntot, ntot)).tocsr()
    Mg = sp.coo_matrix((M.ravel(), (rows, cols)), shape=(ntot, ntot)).tocsr()

    fixed = np.zeros((nx + 1, nt + 1), dtype=bool)
    if bcs["left"] == DIRICHLET:
        fixed[0, :] = True
    if bcs["right"] == DIRICHLET:
        fixed[-1, :] = True
    if bcs["bottom"] == DIRICHLET:
        fixed[:, 0] = True
    if bcs["top"] == DIRICHLET:
        fixed[:, -1] = True
    for i in extra_dirichlet_columns:
        fixed[i, :] = True
    free = np.nonzero(~fixed.ravel())[0]
    Kf = Kg[free][:, free].tocsr()
    Mf = Mg[free][:, free].tocsr()
    Kf.sort_indices()
    Mf.sort_indices()
    return GeneralizedPencil(Kf, Mf, dict(bcs), mesh, free)


def assemble_robin(profile: CuspProfile, sigma: BoundaryCoefficient, mesh: MappedMesh, edge_bcs=None,
                   extra_dirichlet_columns: Sequence[int] = ()) -> GeneralizedPencil:
    """Mapped Robin form; sigma1 acts on t = -1, sigma2 on t = +1 (pair mode)."""
    bcs = _check_bcs(edge_bcs)
    if sigma.pair_mode:
        sides = (sigma.lower.sigma, sigma.upper.sigma)
    else:
        sides = (sigma.sigma, sigma.sigma)
    return _assemble(profile, mesh, bcs, sides, True, extra_dirichlet_columns)


def assemble_B(profile: CuspProfile, mesh: MappedMesh) -> GeneralizedPencil:
    """int int U_x^2 + f^-2 U_t^2 dx dt with unit mass and Dirichlet on every edge."""
    bcs = {e: DIRICHLET for e in EDGES}
    return _assemble(profile, mesh, bcs, None, False)


def assemble_dn(profile: CuspProfile, mesh: MappedMesh, sigma_neumann_side: float = 0.0) -> GeneralizedPencil:
    """Dirichlet on the top edge; Neumann (or Robin weight ``sigma_neumann_side``) on the bottom."""
    s = float(sigma_neumann_side)
    if s < 0:
        raise ValueError("sigma must be nonnegative")
    const = lambda x: np.full_like(np.asarray(x, dtype=float), s)
    bcs = _check_bcs({"top": DIRICHLET, "bottom": ROBIN if s > 0 else NEUMANN})
    return _assemble(profile, mesh, bcs, (const, const), True)


def lower_band(A: sp.csr_matrix, bw: Optional[int] = None) -> np.ndarray:
    A = A.tocsr()
    if bw is None:
        c = A.tocoo()
        bw = int(np.max(np.abs(c.row - c.col))) if c.nnz else 0
    return csr_to_lower_band(A.indptr.astype(np.int64), A.indices.astype(np.int64),
                             A.data.astype(np.float64), A.shape[0], bw)


def inertia_below(K, M, lam: float, bw: Optional[int] = None, retries: int = 3):
    """(count, shift, seconds) for the pencil (K, M) at ``lam``."""
    shift = 0.0
    t0 = time.perf_counter()
    for _ in range(retries + 1):
        A = (K - (lam - shift) * M).tocsr()
        ab = lower_band(A, bw)
        scale = float(np.max(np.abs(ab[0]))) if ab.size else 1.0
        neg, brk = banded_ldlt_inertia(ab, 1e-14 * scale)
        if brk < 0:
            return int(neg), shift, time.perf_counter() - t0
        shift += 1e-9 * (1.0 + abs(lam))
    raise ArithmeticError(f"LDL^T breakdown at pivot {brk} after {retries} shifts (lambda = {lam})")


def count_below_2d(pencil: GeneralizedPencil, lam: float, method: str = "count2d") -> CountResult:
    """Number of pencil eigenvalues strictly below ``lam``."""
    bw = pencil.bandwidth
    neg, shift, secs = inertia_below(pencil.K, pencil.M, lam, bw)
    g = {"nx": pencil.mesh.n_x, "nt": pencil.mesh.n_t, "X": pencil.mesh.X, "bandwidth": bw,
         "unknowns": pencil.n, "factor_seconds": secs}
    return CountResult(float(lam), neg, method, g, shift)


def bracketing_check(profile: CuspProfile, sigma: BoundaryCoefficient, split_x: float, lam: float,
                     mesh: MappedMesh):
    """(lower, middle, upper) counts for Dirichlet / no / Neumann interface at ``split_x``."""
    if not mesh.a < split_x < mesh.X:
        raise ValueError("split_x must lie strictly inside the mesh")
    i = mesh.node_index(split_x)
    if i == 0 or i == mesh.n_x:
        raise ValueError("split_x must be an interior mesh node")
    middle = count_below_2d(assemble_robin(profile, sigma, mesh), lam).count
    lower = count_below_2d(assemble_robin(profile, sigma, mesh, extra_dirichlet_columns=[i]), lam).count
    left = _piece(profile, sigma, mesh, 0, i, {"right": NEUMANN})
    right = _piece(profile, sigma, mesh, i, mesh.n_x, {"left": NEUMANN})
    upper = sum(count_below_2d(p, lam).count for p in (left, right))
    return lower, middle, upper


def _piece(profile, sigma, mesh, i0, i1, bcs):
    xs = mesh.x_nodes[i0:i1 + 1]
    # thin pieces are allowed here: skip the 8-cell minimum
    sub = object.__new__(MappedMesh)
    object.__setattr__(sub, "x_nodes", xs.copy())
    object.__setattr__(sub, "t_nodes", mesh.t_nodes)
    return assemble_robin(profile, sigma, sub, bcs)


def dense_count(pencil: GeneralizedPencil, lam: float) -> int:
    """Reference count from the dense generalised eigenproblem."""
    from scipy.linalg import eigh

    w = eigh(pencil.K.toarray(), pencil.M.toarray(), eigvals_only=True)
    return int(np.sum(w < lam))
