import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspcount import profiles as P
from cuspcount import schrodinger1d as S

harmonic = lambda x: np.asarray(x, dtype=float) ** 2


def harmonic_op(lam_max=50.0, h=0.02):
    g = S.build_grid(0.0, lam_max, harmonic)
    n = math.ceil((g.X - g.a) / h) - 1
    return S.operator_for(harmonic, S.Grid1D(g.a, g.X, n))


def test_build_grid_harmonic():
    g = S.build_grid(0.0, 50.0, harmonic)
    assert g.X >= 2 * math.sqrt(200) - 1e-9
    assert g.h <= 2 * math.pi / (10 * math.sqrt(50)) + 1e-15
    assert g.n >= 16


def test_build_grid_rejects_bounded_potential():
    flat = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    with pytest.raises(S.ConfinementError, match="does not confine"):
        S.build_grid(1.0, 10.0, flat)


def test_build_grid_resolution_floor():
    with pytest.raises(ValueError):
        S.build_grid(0.0, 10.0, harmonic, resolution=5)


def test_assemble_three_point_spectrum():
    g = S.Grid1D(0.0, 4.0, 3)
    T = S.assemble(np.zeros(3), g)
    assert T.diag == pytest.approx([2, 2, 2])
    assert T.offdiag == pytest.approx([-1, -1])
    w = np.linalg.eigvalsh(T.dense())
    assert w == pytest.approx([2 - math.sqrt(2), 2, 2 + math.sqrt(2)])


def test_assemble_neumann_and_potential():
    g = S.Grid1D(0.0, 1.0, 19)
    T = S.assemble(np.zeros(19), g, bc_left=S.NEUMANN)
    assert T.diag[0] == pytest.approx(1 / g.h ** 2)
    assert T.diag[-1] == pytest.approx(2 / g.h ** 2)
    T2 = S.operator_for(harmonic, g)
    assert T2.diag == pytest.approx(2 / g.h ** 2 + g.nodes ** 2)


def test_harmonic_count_and_eigenvalues():
    T = harmonic_op()
    assert T.h <= 0.02
    assert S.count_below(T, 50.0).count == 12
    assert S.count_below(T, 2.0).count == 0
    for k, exact in [(1, 3.0), (2, 7.0), (3, 11.0)]:
        assert S.eigenvalue_k(T, k) == pytest.approx(exact, abs=0.02)


def test_count_at_exact_discrete_eigenvalue_is_strict():
    T = harmonic_op()
    e1 = S.eigenvalue_k(T, 1)
    # strictly "less than": sitting on the first eigenvalue counts nothing
    assert S.count_below(T, e1).count in (0, 1)
    assert S.count_below(T, e1 - 1e-6).count == 0
    # the discrete ground state sits just below 3, so either answer is admissible
    assert S.count_below(T, 3.0).count in (0, 1)


def test_zero_pivot_triggers_shift():
    # T - 1 I has a zero leading pivot
    g = S.Grid1D(0.0, 4.0, 3)
    T = S.TridiagonalOperator(np.array([1.0, 5.0, 5.0]), np.array([-1.0, -1.0]), "dirichlet", "dirichlet", 1.0, g)
    r = S.count_below(T, 1.0)
    assert r.shift_applied > 0
    assert r.count == int(np.sum(np.linalg.eigvalsh(T.dense()) < 1.0))


def test_box_eigenvalue():
    L = 3.0
    flat = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    g = S.Grid1D(0.0, L, 599)
    T = S.operator_for(flat, g)
    assert S.eigenvalue_k(T, 1) == pytest.approx(math.pi ** 2 / L ** 2, rel=1e-4)


@pytest.mark.parametrize("seed", range(10))
def test_count_matches_dense_random(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(16, 200))
    g = S.Grid1D(0.0, 1.0, n)
    T = S.assemble(rng.uniform(-50, 500, n), g, bc_left=rng.choice([S.DIRICHLET, S.NEUMANN]))
    w = np.linalg.eigvalsh(T.dense())
    for lam in rng.uniform(w.min() - 10, w.max() + 10, 20):
        assert S.count_below(T, lam).count == int(np.sum(w < lam))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 400.0), st.floats(0.0, 400.0))
def test_count_monotone(l1, l2):
    T = harmonic_op(400.0, 0.05)
    lo, hi = sorted((l1, l2))
    assert S.count_below(T, lo).count <= S.count_below(T, hi).count


@pytest.mark.parametrize("h,X", [(0.05, 20.0), (0.03, 25.0), (0.01, 40.0)])
def test_harmonic_grid_convergence(h, X):
    n = math.ceil(X / h) - 1
    T = S.operator_for(harmonic, S.Grid1D(0.0, X, n))
    assert S.count_below(T, 50.0).count == 12


def test_mode_potentials():
    p = P.make_power_profile(2)
    s = P.make_const_sigma(1.0)
    x = np.geomspace(1, 20, 30)
    assert np.array_equal(S.mode_potential(p, s, 0)(x), P.eval_W(p, s, x))
    assert S.mode_potential(p, s, 1)(1.0) == pytest.approx(P.eval_W(p, s, 1.0) + math.pi ** 2 / 4)
    infs = [float(np.min(S.mode_potential(p, s, k)(x))) for k in range(6)]
    assert all(infs[k] >= infs[0] + k * k * math.pi ** 2 / 4 - 1e-9 for k in range(6))
    p1 = P.make_power_profile(1)
    assert S.dirichlet_mode_potential(p1, 1)(2.0) == pytest.approx(math.pi ** 2)
    c = P.make_const_profile(0.5)
    assert S.dirichlet_mode_potential(c, 1)(x) == pytest.approx(np.full(30, math.pi ** 2))
    assert S.dirichlet_mode_potential(p, 2)(x) == pytest.approx(4 * S.dirichlet_mode_potential(p, 1)(x))
    with pytest.raises(ValueError):
        S.dirichlet_mode_potential(p, 0)


def test_dirichlet_modesum_on_strip_matches_discrete_lattice():
    c, a, X, lam = 0.7, 1.0, 4.0, 120.0
    prof = P.make_const_profile(c)
    r = S.mode_sum_count(prof, lam, dirichlet=True, xmax=X)
    g = S.build_grid(a, lam, lambda x: x, 10.0, X)
    h, n = g.h, g.n
    # exact spectrum of the discrete Dirichlet Laplacian on n interior points
    fd = 4 / h ** 2 * np.sin(np.arange(1, n + 1) * math.pi / (2 * (n + 1))) ** 2
    expected = sum(int(np.sum(fd + (k * math.pi) ** 2 / (4 * c * c) < lam)) for k in range(1, 50))
    assert r.count == expected
    cont = sum(1 for m in range(1, 200) for k in range(1, 200)
               if (m * math.pi / (X - a)) ** 2 + (k * math.pi / (2 * c)) ** 2 < lam)
    assert abs(r.count - cont) <= 1


def test_modesum_below_ground_state_is_zero():
    p = P.make_power_profile(2)
    s = P.make_const_sigma(1.0)
    r = S.mode_sum_count(p, 1.0, sigma=s)
    assert r.count == 0


def test_rank_one_examples():
    assert S.rank_one_check(harmonic, [10.0, 50.0, 200.0], a=0.0) == 0
    assert S.rank_one_check(harmonic, [0.5], a=0.0) == 0
    p = P.make_power_profile(2)
    s = P.make_const_sigma(1.0)
    W = lambda x: P.eval_W(p, s, x)
    assert S.rank_one_check(W, np.geomspace(20, 2000, 30), a=1.0) == 0


def test_left_endpoint_independence_trend():
    p = P.make_power_profile(2)
    s = P.make_const_sigma(1.0)
    W = lambda x: P.eval_W(p, s, x)
    gaps = []
    for lam in (1e2, 1e3, 1e4):
        n1 = S.count_below(S.operator_for(W, S.build_grid(1.0, lam, W)), lam).count
        n3 = S.count_below(S.operator_for(W, S.build_grid(3.0, lam, W)), lam).count
        gaps.append(abs(n1 / n3 - 1))
        assert abs(n1 - n3) <= 3 * math.sqrt(lam)
    assert gaps[0] > gaps[1] > gaps[2]


def test_scaled_count():
    T = harmonic_op()
    assert S.scaled_count(T, 50.0, 1.0) == 12
    assert S.scaled_count(T, 100.0, 2.0) == 12
