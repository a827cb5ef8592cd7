import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from grauert_lab import asymptotic_predictors as ap

vec2 = st.lists(st.floats(-3, 3), min_size=2, max_size=2).map(np.array)
vec4 = st.lists(st.floats(-2, 2), min_size=4, max_size=4).map(np.array)


def test_psi2_examples():
    assert ap.psi2([1.0, 0.0], [0.0, 1.0]) == pytest.approx(-1 - 1j)


@settings(max_examples=50, deadline=None)
@given(vec4, vec4, st.floats(0.1, 3))
def test_psi2_properties(u, v, s):
    assert ap.psi2(u, u) == pytest.approx(0, abs=1e-12)
    assert ap.psi2(u, v).real <= 1e-12
    assert ap.psi2(s * u, s * v) == pytest.approx(s * s * ap.psi2(u, v), rel=1e-10, abs=1e-10)


def test_psi2_unitary_invariance():
    rng = np.random.default_rng(0)
    n = 2
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, _ = np.linalg.qr(A)
    # real 2n x 2n form of Q acting on (Re, Im) pairs
    M = np.zeros((2 * n, 2 * n))
    M[0::2, 0::2] = Q.real
    M[0::2, 1::2] = -Q.imag
    M[1::2, 0::2] = Q.imag
    M[1::2, 1::2] = Q.real
    for _ in range(10):
        u, v = rng.standard_normal(4), rng.standard_normal(4)
        assert ap.psi2(M @ u, M @ v) == pytest.approx(ap.psi2(u, v), abs=1e-12)


def test_Psi2_reduces_to_psi2():
    rng = np.random.default_rng(1)
    v1, v2 = rng.standard_normal(2), rng.standard_normal(2)
    assert ap.Psi2(0.3, v1, -0.1, v2, 0.0, np.zeros(2), 0.5) == pytest.approx(ap.psi2(v1, v2), abs=1e-14)
    assert ap.Psi2(0.3, v1, -0.1, v1, 0.0, np.zeros(2), 0.5) == pytest.approx(0, abs=1e-14)


def test_leading_terms():
    z = np.zeros(2)
    lam, tau = 1e4, 0.5
    assert ap.szego_leading_term(0, z, 0, z, lam, tau, 2) == pytest.approx(
        lam / (2 * math.pi * tau) / math.sqrt(2 * math.pi))
    assert ap.poisson_leading_term(0, z, 0, z, lam, tau, 2) == pytest.approx(
        math.sqrt(0.5) / math.sqrt(2 * math.pi) / math.pi * 100)
    s = ap.szego_leading_term(0, z, 0, z, lam, tau, 2)
    p = ap.poisson_leading_term(0, z, 0, z, lam, tau, 2)
    assert s / p == pytest.approx(math.sqrt(lam / tau))
    v1, v2 = np.array([0.3, -0.2]), np.array([0.1, 0.5])
    a = ap.szego_leading_term(0.2, v1, -0.1, v2, 900.0, tau, 2)
    b = ap.szego_leading_term(-0.1, v2, 0.2, v1, 900.0, tau, 2)
    assert a == pytest.approx(b.conjugate())
    assert abs(ap.szego_leading_term(-0.2, v1, 0.1, v2, 900.0, tau, 2)) == pytest.approx(abs(a))
    prof_s = a / ap.szego_leading_term(0, z, 0, z, 900.0, tau, 2)
    prof_p = ap.poisson_leading_term(0.2, v1, -0.1, v2, 900.0, tau, 2) / ap.poisson_leading_term(
        0, z, 0, z, 900.0, tau, 2)
    assert prof_s == pytest.approx(prof_p)


def test_weyl_prediction():
    w = ap.weyl_prediction("szego", 2 * math.pi, 0.5, 2)
    assert w.value == pytest.approx(0.25 * 4.0)
    assert w.remainder_exponent == 1.0
    lams = np.linspace(10, 1000, 20)
    vals = [ap.weyl_prediction("poisson", l, 0.5, 2).value for l in lams]
    assert np.all(np.diff(vals) > 0)
    p = ap.weyl_prediction("poisson", 100.0, 0.5, 2).value
    assert p == pytest.approx((1 / (2 * math.pi) ** 2) * (100 / 0.5) ** 0.5 * 100 / 1.5)
    with pytest.raises(ValueError):
        ap.weyl_prediction("other", 1.0, 0.5, 2)


def test_upsilon_at_critical_point():
    for tau in (0.5, 1.0, 2.0):
        p = ap.critical_point(0.3, -0.4, tau)
        val, grad, hess = ap.upsilon_phase(p)
        assert np.max(np.abs(grad)) <= 1e-15
        assert val == pytest.approx(0.7 / tau)
        assert np.linalg.det(hess) == pytest.approx(tau**2)
        assert hess @ ap.hessian_inverse_displayed(tau) == pytest.approx(np.eye(4), abs=1e-14)


def test_find_critical_point_examples():
    p = ap.find_critical_point(0.0, 0.0, 1.0, ap.PhasePoint(0.1, 0.9, 0.1, 1.1))
    assert p.vector() == pytest.approx([0, 1, 0, 1], abs=1e-12)
    q = ap.find_critical_point(0.2, -0.1, 0.5)
    assert q.vector() == pytest.approx([-0.6, 2, 0.2, 2], abs=1e-12)


def test_exact_stationary_data():
    sd = ap.exact_stationary_data()
    tau = sp.Symbol("tau", positive=True)
    assert sp.simplify(sd.det - tau**2) == 0
    assert sd.signature == 0
    assert sd.inverse_matches and sd.third_derivatives_vanish


def test_s_quadratic_examples():
    z2 = np.zeros(2)
    assert ap.s_quadratic(z2, 0, 0, 0, 0, 0, z2, 0, z2, 0.5) == 0
    rng = np.random.default_rng(2)
    uvec, v1, v2 = (rng.standard_normal(2) for _ in range(3))
    t, th, t1, t2, s = 0.3, -0.2, 0.1, 0.4, 1.7
    base = ap.s_quadratic(uvec, t, 1.5, th, 2.5, t1, v1, t2, v2, 0.5)
    scaled = ap.s_quadratic(s * uvec, s * t, 1.5, s * th, 2.5, s * t1, s * v1, s * t2, s * v2, 0.5)
    assert scaled == pytest.approx(s * s * base)


def test_s_quadratic_real_part_nonpositive():
    rng = np.random.default_rng(3)
    tau = 0.5
    for _ in range(2000):
        u, v = rng.uniform(1 / (2 * tau), 2 / tau, 2)
        args = rng.standard_normal(9)
        S = ap.s_quadratic(args[0:2], args[2], v, args[3], u, args[4], args[5:7], args[8], args[7:9], tau)
        assert S.real <= 1e-12


def test_s_critical_paths_agree():
    rng = np.random.default_rng(4)
    for _ in range(20):
        tau = rng.uniform(0.3, 2)
        t1, t2 = rng.uniform(-1, 1, 2)
        v1, v2, uvec, A = (rng.standard_normal(2) for _ in range(4))
        a = rng.standard_normal()
        P = ap.find_critical_point(t1, t2, tau)
        sq = ap.s_quadratic(uvec, P.t, P.v, P.theta, P.u, t1, v1, t2, v2, tau, a, A)
        assert ap.s_critical(t1, v1, t2, v2, uvec, tau, a, A) == pytest.approx(sq, rel=1e-12, abs=1e-12)
    z = np.zeros(2)
    assert ap.s_critical(0.0, z, 0.0, z, z, 0.5) == 0


@pytest.mark.parametrize("d", [2, 3])
def test_gaussian_identity(d):
    n = 2 * d - 2
    z = np.zeros(n)
    num, closed, rel = ap.gaussian_integral_check(0.0, z, 0.0, z, 0.5)
    assert closed == pytest.approx((0.5 * math.pi) ** (d - 1))
    assert rel <= 1e-8
    rng = np.random.default_rng(d)
    _, _, rel = ap.gaussian_integral_check(0.2, rng.standard_normal(n), -0.3, rng.standard_normal(n), 0.5,
                                           0.4, rng.standard_normal(n))
    assert rel <= 1e-8


def test_gaussian_identity_example_point():
    _, _, rel = ap.gaussian_integral_check(0.0, np.array([0.3, 0.0]), 0.0, np.array([0.0, 0.4]), 0.5)
    assert rel <= 1e-8


def test_gaussian_quadrature_budget():
    with pytest.raises(ap.QuadratureBudgetError):
        ap.gaussian_integral_check(0.0, np.zeros(4), 0.0, np.ones(4), 0.5, max_points=10)


def test_leading_symbol_identity():
    s, res = ap.leading_symbol_identity(2 * math.pi, 1)
    assert s == pytest.approx(1.0) and res <= 1e-15
    s, res = ap.leading_symbol_identity(0.5, 2)
    assert s == pytest.approx(0.5 / (4 * math.pi**2)) and res <= 1e-15


def test_hermitian_data_validation():
    with pytest.raises(ValueError):
        ap.HermitianData(1, np.diag([1.0, -1.0]), np.array([[0.0, -1.0], [1.0, 0.0]]))
    with pytest.raises(ValueError):
        ap.psi2([1.0, 0.0], [1.0, 0.0, 0.0, 0.0])


def test_expected_remainder_metadata():
    assert ap.EXPECTED_REMAINDER_EXPONENT == {"diagonal": -1.0, "off_diagonal": -0.5}
