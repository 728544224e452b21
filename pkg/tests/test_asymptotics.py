import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspcount import asymptotics as A
from cuspcount import profiles as P
from cuspcount import schrodinger1d as S


def test_beta_values():
    assert A.beta_fn(0.5, 1.5) == pytest.approx(math.pi / 2, abs=1e-12)
    assert A.beta_fn(2.0, 1.5) == pytest.approx(4 / 15, abs=1e-12)
    assert A.beta_fn(1.0, 1.0) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        A.beta_fn(0.0, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 20.0), st.floats(0.05, 20.0))
def test_beta_against_mpmath(a, b):
    assert A.beta_fn(a, b) == pytest.approx(float(mpmath.beta(a, b)), rel=1e-12)


def test_zeta_values():
    assert A.zeta_fn(2.0) == pytest.approx(math.pi ** 2 / 6, abs=1e-10)
    assert A.zeta_fn(4.0) == pytest.approx(math.pi ** 4 / 90, abs=1e-10)
    for s in (1.1, 1.5, 3.0, 7.5):
        assert A.zeta_fn(s) == pytest.approx(float(mpmath.zeta(s)), abs=1e-10)
    with pytest.raises(ValueError):
        A.zeta_fn(1.0)


def test_weyl_term():
    assert A.weyl_term(P.make_power_profile(2).volume(), 4 * math.pi) == pytest.approx(2.0)
    assert A.weyl_term(2.0, 0.0) == 0.0
    assert A.weyl_term(P.make_power_profile(3).volume(), 500.0) == pytest.approx(500 / (4 * math.pi))
    with pytest.raises(ValueError):
        A.weyl_term(math.inf, 10.0)


def test_titchmarsh_harmonic():
    q = lambda x: np.asarray(x, dtype=float) ** 2
    assert A.titchmarsh_count(q, 100.0, a=0.0) == pytest.approx(25.0, rel=1e-7)
    assert A.titchmarsh_count(q, 0.0, a=0.0) == 0.0
    assert A.titchmarsh_count(lambda x: 5.0 + 0 * np.asarray(x), 4.0, a=1.0) == 0.0


def test_titchmarsh_harmonic_scaling():
    q = lambda x: np.asarray(x, dtype=float) ** 2
    c = 3.0
    base = A.titchmarsh_count(q, 40.0, a=0.0)
    scaled = A.titchmarsh_count(lambda x: c * c * q(x), c * c * 40.0, a=0.0)
    assert scaled == pytest.approx(c * base, rel=1e-6)


def test_titchmarsh_cusp_potential():
    p = P.make_power_profile(2)
    s = P.make_const_sigma(1.0)
    v = A.titchmarsh_count(lambda x: P.eval_W(p, s, x), 2000.0, 1.0) / 2000.0
    assert 0.23 <= v <= 0.25


def test_titchmarsh_monotone_in_lambda():
    p = P.make_power_profile(2)
    s = P.make_const_sigma(1.0)
    q = lambda x: P.eval_W(p, s, x)
    vals = [A.titchmarsh_count(q, lam, 1.0) for lam in np.geomspace(1.0, 5000.0, 25)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[0] == 0.0


def test_titchmarsh_applicable_verdicts():
    grid = np.geomspace(2.0, 200.0, 12)
    assert A.titchmarsh_applicable(lambda x: x ** 2 + 2 * x ** -2.0, grid) == "convex"
    # concave increasing power: only the growth test applies
    assert A.titchmarsh_applicable(lambda x: x ** 0.5, grid) == "titchmarsh"
    assert A.titchmarsh_applicable(lambda x: 3.0 + 0 * x, grid) == "inconclusive"
    with pytest.raises(ValueError):
        A.titchmarsh_applicable(lambda x: x, grid[:5])


def test_hsigma_closed_form():
    assert A.hsigma_closed_form(2, 0, 1.0, 1.0) == pytest.approx(0.25)
    assert A.hsigma_closed_form(2, 0, 1.0, 800.0) == pytest.approx(200.0)
    assert A.hsigma_closed_form(1, 0.5, 1.0, 3.0) == pytest.approx(8 / (15 * math.pi) * 3.0 ** 2.5)
    assert A.hsigma_closed_form(2, 0, 1.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        A.hsigma_closed_form(1, 1, 1.0, 10.0)
    with pytest.raises(ValueError):
        A.hsigma_closed_form(2, 0, 0.0, 10.0)


def test_hsigma_closed_form_vs_titchmarsh():
    p = P.make_power_profile(2)
    s = P.make_const_sigma(1.0)
    t = A.titchmarsh_count(lambda x: P.eval_W(p, s, x), 2000.0, 1.0)
    assert t / A.hsigma_closed_form(2, 0, 1.0, 2000.0) == pytest.approx(1.0, abs=0.05)


def test_dirichlet_superlinear_formula():
    assert A.dirichlet_superlinear(1.0, math.e ** 2) == pytest.approx(2 * math.e ** 2 / math.pi)
    lam = 100.0
    coef = (1 / math.pi) * (2 / math.pi) ** 2 * (math.pi ** 2 / 6) * (4 / 3)
    assert A.dirichlet_superlinear(0.5, lam) == pytest.approx(coef * lam ** 1.5, rel=1e-12)
    assert 0 < A.dirichlet_superlinear(1.0, math.e * 1.001) < 1.0
    with pytest.raises(ValueError):
        A.dirichlet_superlinear(1.5, 100.0)
    with pytest.raises(ValueError):
        A.dirichlet_superlinear(0.5, 2.0)


def test_dirichlet_superlinear_against_phase_space_mode_sum():
    # Titchmarsh count of each transverse mode pi^2 k^2 x / 4 on (0, inf); term k scales as k^-2
    lam = 400.0
    term = lambda k: A.titchmarsh_count(lambda x: (math.pi * k) ** 2 / 4 * np.asarray(x, dtype=float), lam, a=0.0)
    t1 = term(1)
    for k in (2, 3, 5):
        assert term(k) * k * k == pytest.approx(t1, rel=1e-8)
    total = t1 * math.pi ** 2 / 6
    # the stated formula carries twice the single-horn phase-space volume
    assert A.dirichlet_superlinear(0.5, lam) / total == pytest.approx(2.0, rel=1e-8)


def test_dirichlet_superlinear_slope():
    lams = np.geomspace(1e2, 1e5, 10)
    vals = [A.dirichlet_superlinear(0.5, lam) for lam in lams]
    assert A.loglog_slope(lams, vals) == pytest.approx(1.5, rel=1e-3)


def test_composite_examples():
    p2 = P.make_power_profile(2)
    s = P.make_const_sigma(1.0)
    pr = A.composite_prediction(p2, s, 1000.0)
    assert pr.total / 1000.0 == pytest.approx(1 / (2 * math.pi) + 0.25, rel=1e-12)
    assert pr.regime == "linear"
    assert pr.linear_coefficient == pytest.approx(1 / (2 * math.pi) + 0.25)
    assert pr.total == pr.weyl_part + pr.h_sigma_part + pr.dirichlet_superlinear_part

    p3 = P.make_power_profile(3)
    r = [A.composite_prediction(p3, s, lam) for lam in (1e2, 1e4, 1e6)]
    assert all(x.regime == "weyl" for x in r)
    ratios = [x.h_sigma_part / x.lam for x in r]
    assert ratios[0] > ratios[1] > ratios[2]

    p1 = P.make_power_profile(1)
    pr = A.composite_prediction(p1, P.make_power_sigma(1.0, 0.5), 1e4)
    assert pr.dirichlet_superlinear_part > 0 and pr.weyl_part == 0
    assert pr.h_sigma_part > 100 * pr.dirichlet_superlinear_part


def test_composite_non_power_uses_titchmarsh():
    pr = A.composite_prediction(P.make_exp_profile(1.0), P.make_const_sigma(1.0), 500.0)
    assert pr.provenance["h_sigma_part"] == "titchmarsh"
    assert pr.weyl_part == pytest.approx(500 * 2 * math.exp(-1) / (4 * math.pi))


def test_composite_rejects_nonconfining():
    with pytest.raises(ValueError):
        A.composite_prediction(P.make_power_profile(1), P.make_power_sigma(1.0, 2.0), 100.0)


def test_dn_threshold():
    p = P.make_power_profile(2)
    lam = math.pi ** 2
    x = A.dn_threshold_x(p, lam)
    # f(x) = pi / (4 pi) = 1/4 at x = 2
    assert x == pytest.approx(2.0, rel=1e-12)
    for lam in (10.0, 100.0, 1e4):
        x = A.dn_threshold_x(p, lam)
        assert float(p.eval_f(x)) * 4 * math.sqrt(lam) / math.pi == pytest.approx(1.0, abs=1e-10)
    xs = [A.dn_threshold_x(p, lam) for lam in (10.0, 20.0, 40.0, 80.0)]
    assert all(b > a for a, b in zip(xs, xs[1:]))
    xf = [x * float(p.eval_f(x)) for x in (A.dn_threshold_x(p, 10.0 ** k) for k in range(1, 6))]
    assert all(b < a for a, b in zip(xf, xf[1:]))
    with pytest.raises(ValueError):
        A.dn_threshold_x(p, 0.1)


def test_loglog_slope_power_law():
    lams = np.geomspace(10, 1e4, 7)
    assert A.loglog_slope(lams, 3.0 * lams ** 2.5) == pytest.approx(2.5, rel=1e-12)


def test_titchmarsh_matches_count1d_at_large_lambda():
    p = P.make_power_profile(2)
    s = P.make_const_sigma(1.0)
    q = lambda x: P.eval_W(p, s, x)
    lam = 2000.0
    n = S.count_below(S.operator_for(q, S.build_grid(1.0, lam, q)), lam).count
    assert A.titchmarsh_count(q, lam, 1.0) == pytest.approx(n, rel=0.03)
