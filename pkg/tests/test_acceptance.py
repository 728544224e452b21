"""Acceptance criteria AC-1 .. AC-11, one PASS/FAIL line each.

The report lines are collected in RESULTS and printed in the pytest terminal
summary (see conftest.py).
"""

import math
import sys
import time

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.linalg import eigh, eigvalsh_tridiagonal

from cuspcount import asymptotics as A
from cuspcount import lab
from cuspcount import laplace2d as L
from cuspcount import profiles as P
from cuspcount import schrodinger1d as S
from cuspcount import transverse as T

RESULTS = {}


def report(ac, ok, detail):
    line = f"{ac} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS[ac] = line
    assert ok, line


def test_ac01_transverse_solver():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    fs = rng.uniform(1e-6, 1.0, 10_000)
    ss = rng.uniform(0.0, 10.0, 10_000)
    worst_res, bound_viol = 0.0, 0
    for f, s in zip(fs, ss):
        m = T.solve_kappa(f, s)
        worst_res = max(worst_res, abs(m.kappa * math.tan(m.kappa * f) - s) / (1 + s))
        bound_viol += m.mu > s / f
    expansion = all(1 - T.solve_kappa(f, 1.0).mu * f <= f for f in (1e-1, 1e-2, 1e-3))
    secs = time.perf_counter() - t0
    ok = worst_res <= 1e-10 and bound_viol == 0 and expansion and secs < 1.0
    report("AC-1", ok, f"max scaled residual {worst_res:.2e}, bound violations {bound_viol}, "
                       f"expansion bound {expansion}, {secs:.2f} s")


def test_ac02_harmonic_oracle():
    t0 = time.perf_counter()
    q = lambda x: np.asarray(x, dtype=float) ** 2
    g = S.build_grid(0.0, 50.0, q)
    g = S.Grid1D(g.a, g.X, math.ceil((g.X - g.a) / 0.02) - 1)
    op = S.operator_for(q, g)
    n = S.count_below(op, 50.0).count
    eig = [float(S.eigenvalue_k(op, k)) for k in (1, 2, 3)]
    err = max(abs(e - x) for e, x in zip(eig, (3.0, 7.0, 11.0)))
    secs = time.perf_counter() - t0
    ok = g.h <= 0.02 and n == 12 and err <= 0.02 and secs < 1.0
    report("AC-2", ok, f"count {n}, eigenvalues {[round(e, 4) for e in eig]}, max error {err:.4f}, {secs:.2f} s")


def random_banded_pencil(rng, n, bw):
    offs = range(-bw, bw + 1)
    K = sp.diags([rng.normal(size=n - abs(k)) for k in offs], list(offs), format="csr")
    K = (K + K.T) * 0.5
    B = sp.diags([rng.normal(size=n - abs(k)) * 0.3 for k in offs], list(offs), format="csr")
    M = (B @ B.T + sp.identity(n) * 0.5).tocsr()
    return K, M


def test_ac03_inertia_vs_dense():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(50):
        n = int(rng.integers(10, 2500))
        g = S.Grid1D(0.0, 1.0, n)
        op = S.assemble(rng.uniform(-100, 1000, n), g, bc_left=rng.choice([S.DIRICHLET, S.NEUMANN]))
        w = np.linalg.eigvalsh(op.dense()) if n <= 600 else eigvalsh_tridiagonal(op.diag, op.offdiag)
        for lam in rng.uniform(w.min(), w.max(), 5):
            mismatches += S.count_below(op, lam).count != int(np.sum(w < lam))
    for i in range(10):
        n = int(rng.integers(200, 2501)) if i else 2500
        bw = int(rng.integers(1, 6))
        K, M = random_banded_pencil(rng, n, bw)
        w = eigh(K.toarray(), M.toarray(), eigvals_only=True)
        for lam in rng.uniform(w.min(), w.max(), 3):
            count = L.inertia_below(K, M, lam)[0]
            mismatches += count != int(np.sum(w < lam))
    secs = time.perf_counter() - t0
    ok = mismatches == 0 and secs < 60
    report("AC-3", ok, f"50 tridiagonal + 10 banded pencils, {mismatches} mismatches, {secs:.1f} s")


def test_ac04_rectangle():
    t0 = time.perf_counter()
    counts = []
    for n in (16, 32, 64):
        mesh = L.MappedMesh(np.linspace(1.0, 2.0, n + 1), np.linspace(-1.0, 1.0, n + 1))
        pen = L.assemble_robin(P.make_const_profile(1.0), P.make_const_sigma(0.0), mesh,
                               {"top": "dirichlet", "bottom": "dirichlet", "left": "dirichlet",
                                "right": "dirichlet"})
        counts.append(L.count_below_2d(pen, 30.0).count)
    secs = time.perf_counter() - t0
    ok = counts == [2, 2, 2] and secs < 10
    report("AC-4", ok, f"counts on 16/32/64 meshes {counts}, {secs:.2f} s")


def test_ac05_hsigma_coefficient():
    t0 = time.perf_counter()
    p, s = P.make_power_profile(2), P.make_const_sigma(1.0)
    q = lambda x: P.eval_W(p, s, x)
    ratios = []
    for lam in (500.0, 1000.0, 2000.0):
        ratios.append(S.count_below(S.operator_for(q, S.build_grid(1.0, lam, q)), lam).count / lam)
    tm = A.titchmarsh_count(q, 2000.0, 1.0)
    tm_err = abs(tm / (ratios[-1] * 2000.0) - 1)
    secs = time.perf_counter() - t0
    increasing = ratios[0] < ratios[1] < ratios[2] <= 0.25 + 1e-12
    rel = abs(ratios[-1] / 0.25 - 1)
    ok = increasing and rel <= 0.08 and tm_err <= 0.03 and secs < 30
    report("AC-5", ok, f"N/lambda {[round(r, 4) for r in ratios]} (target 0.25, off {rel:.1%} at 2000), "
                       f"titchmarsh vs count1d {tm_err:.2%}, {secs:.1f} s")


def test_ac06_modesum_equals_B():
    t0 = time.perf_counter()
    p, lam = P.make_power_profile(2), 100.0
    ms = S.mode_sum_count(p, lam, dirichlet=True, xmax=20.0).count
    mesh = L.default_mesh(p, lam, xmax=20.0)
    counts = []
    for _ in range(3):
        counts.append(L.count_below_2d(L.assemble_B(p, mesh), lam).count)
        mesh = mesh.refined()
    secs = time.perf_counter() - t0
    ok = abs(counts[0] - ms) <= 0.02 * ms and counts[-1] == ms and secs < 300
    report("AC-6", ok, f"mode sum {ms}, count2d base/refined/refined {counts}, {secs:.1f} s")


def test_ac07_composite_asymptotic():
    t0 = time.perf_counter()
    c = lab.ExperimentConfig(profile="power:alpha=3", sigma="const:v=1", lambdas=[100.0, 200.0, 500.0],
                             routes=("count2d", "predict"), out="unused")
    rows, _ = lab.run(c, write=False)
    ratios = [r.ratios["count2d"] for r in rows]
    secs = time.perf_counter() - t0
    in_band = all(0.8 <= r <= 1.2 for r in ratios)
    toward = all(abs(b - 1) < abs(a - 1) for a, b in zip(ratios, ratios[1:]))
    ok = in_band and toward and secs < 1200
    report("AC-7", ok, f"count2d/prediction {[round(r, 3) for r in ratios]}, "
                       f"in [0.8, 1.2]: {in_band}, monotone toward 1: {toward}, {secs:.1f} s")


def test_ac08_bracketing_grid():
    t0 = time.perf_counter()
    cases, bad = 0, []
    for alpha in (2.0, 3.0):
        p = P.make_power_profile(alpha)
        for sig in (P.make_const_sigma(1.0), P.make_power_sigma(2.0, 0.5)):
            for split in (2.0, 4.0):
                for lam in (30.0, 60.0, 120.0):
                    mesh = L.default_mesh(p, lam, sig, resolution=8, breakpoints=[split])
                    lo, mid, up = L.bracketing_check(p, sig, split, lam, mesh)
                    cases += 1
                    if not lo <= mid <= up:
                        bad.append((alpha, split, lam, lo, mid, up))
    secs = time.perf_counter() - t0
    ok = cases == 24 and not bad and secs < 600
    report("AC-8", ok, f"{cases} cases, {len(bad)} ordering violations, {secs:.1f} s")


def test_ac09_rank_one():
    t0 = time.perf_counter()
    sweep = np.geomspace(10.0, 5000.0, 100)
    p2, p3, s = P.make_power_profile(2), P.make_power_profile(3), P.make_const_sigma(1.0)
    potentials = {
        "harmonic": (lambda x: np.asarray(x, dtype=float) ** 2, 0.0),
        "W(x^-2)": (lambda x: P.eval_W(p2, s, x), 1.0),
        "W(x^-3)": (lambda x: P.eval_W(p3, s, x), 1.0),
    }
    worst = {k: S.rank_one_check(q, sweep, a=a) for k, (q, a) in potentials.items()}
    secs = time.perf_counter() - t0
    ok = all(v == 0 for v in worst.values()) and secs < 30
    report("AC-9", ok, f"max deviation per potential {worst}, {secs:.1f} s")


def test_ac10_special_functions():
    e1 = abs(A.beta_fn(0.5, 1.5) - math.pi / 2)
    e2 = abs(A.zeta_fn(2.0) - math.pi ** 2 / 6)
    e3 = abs(A.beta_fn(2.0, 1.5) - 4 / 15)
    ok = e1 <= 1e-12 and e2 <= 1e-10 and e3 <= 1e-12
    report("AC-10", ok, f"errors B(1/2,3/2) {e1:.1e}, zeta(2) {e2:.1e}, B(2,3/2) {e3:.1e}")


def test_ac11_superlinear_structure():
    p = P.make_power_profile(0.5)
    s = P.make_const_sigma(1.0)
    lams = np.geomspace(1e2, 1e6, 9)
    parts = [A.composite_prediction(p, s, lam).dirichlet_superlinear_part for lam in lams]
    slope = A.loglog_slope(lams, parts)
    ident = max(abs(A.dirichlet_superlinear(1.0, lam) / (lam * math.log(lam) / math.pi) - 1)
                for lam in (10.0, 1e3, 1e5))
    ok = abs(slope / 1.5 - 1) <= 0.01 and ident <= 1e-12
    report("AC-11", ok, f"slope {slope:.5f} (target 1.5), alpha=1 identity error {ident:.1e}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
