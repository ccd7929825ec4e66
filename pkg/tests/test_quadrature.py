import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavestab import asymptotics as A
from wavestab.model import Params, Poly, SystemSpec, profile
from wavestab.portrait import OrbitData, classify_portrait, orbit_roots
from wavestab.quadrature import (action_gradient, adaptive_gl, boussinesq_momentum, momentum_at_speed,
                                 momentum_derivatives, reduced_R, theta_and_grad,
                                 theta_and_grad_soliton_regime)

from instances import EK, HARMONIC, KDV, ek_portrait, kdv_portrait


def _harmonic_orbit(mu):
    d = np.sqrt(2 * mu)
    return OrbitData(v1=None, v2=1 - d, v3=1 + d, rho=None, delta=d, m=1.0, h_s=np.nan)


def test_adaptive_gl_polynomial_and_sqrt():
    est, _ = adaptive_gl(lambda x: x**7, 0.0, 1.0)
    assert est == pytest.approx(1 / 8, rel=1e-14)
    est, _ = adaptive_gl(lambda x: np.sqrt(x), 0.0, 1.0)
    assert est == pytest.approx(2 / 3, rel=1e-9)


@pytest.mark.parametrize("mu", [0.1, 0.01, 1.3])
def test_quadratic_well_is_a_circle(mu):
    ag = theta_and_grad(HARMONIC, Params(mu, (0.0,), 0.0), _harmonic_orbit(mu))
    assert ag.theta == pytest.approx(2 * np.pi * mu, rel=1e-12)
    assert ag.period == pytest.approx(2 * np.pi, rel=1e-12)
    assert ag.grad[0] == pytest.approx(ag.period, rel=1e-14)


def test_quadratic_well_is_isochronous():
    h = 1e-4
    lo = theta_and_grad(HARMONIC, Params(0.5 - h, (0.0,), 0.0), _harmonic_orbit(0.5 - h)).period
    hi = theta_and_grad(HARMONIC, Params(0.5 + h, (0.0,), 0.0), _harmonic_orbit(0.5 + h)).period
    assert abs(hi - lo) / (2 * h) < 1e-8


def test_reduced_R_examples():
    assert reduced_R(KDV, 0.0, 1.0, 2.0, 0.0, (0.5,)) == pytest.approx(0.5, rel=1e-15)
    assert reduced_R(KDV, 1.0, 1.0, 1.0, 0.0, (0.5,)) == pytest.approx(0.5, rel=1e-15)
    for vwz in ((0.0, 1.0, 2.0), (-3.0, 0.5, 0.5), (2.0, 2.0, 2.0)):
        assert reduced_R(HARMONIC, *vwz, 0.0, (0.0,)) == pytest.approx(0.5, rel=1e-15)


def test_kdv_action_against_trapezoid():
    pt = kdv_portrait()
    p = Params(0.0, (0.5,), 0.0)
    o = orbit_roots(KDV, p, pt)
    v = np.linspace(o.v2, o.v3, 1_000_001)
    W = profile(KDV, 0.0, (0.5,)).W
    y = np.sqrt(np.maximum(2.0 * (0.0 - W(v)), 0.0))
    brute = 2.0 * np.trapezoid(y, v)
    assert action_gradient(KDV, p, o).theta == pytest.approx(brute, rel=1e-6)


@pytest.mark.parametrize("name", ["kdv", "ek"])
def test_two_parametrizations_agree_at_rho_0_2(name):
    sys, pt = (KDV, kdv_portrait()) if name == "kdv" else (EK, ek_portrait())
    mu = A.mu_for_rho(sys, pt.c, pt.lam, pt, 0.2)
    p = Params(mu, pt.lam, pt.c)
    o = orbit_roots(sys, p, pt)
    a, b = theta_and_grad(sys, p, o), theta_and_grad_soliton_regime(sys, p, o)
    assert b.theta == pytest.approx(a.theta, rel=1e-8)
    np.testing.assert_allclose(b.grad, a.grad, rtol=1e-8)


def test_soliton_period_log_growth():
    pt = kdv_portrait()
    for e in (1e-4, 1e-6, 1e-8):
        Xi = action_gradient(KDV, Params(pt.mu_s - e, (0.5,), 0.0), portrait=pt).period
        assert abs(Xi + np.log(e)) < 10


@settings(max_examples=15, deadline=None)
@given(t=st.floats(0.05, 0.95))
def test_period_is_positive_and_matches_grad(t):
    pt = ek_portrait()
    mu = pt.mu_0 + t * (pt.mu_s - pt.mu_0)
    ag = action_gradient(EK, Params(mu, pt.lam, pt.c), portrait=pt)
    assert ag.period > 0 and ag.grad[0] == ag.period


def test_boussinesq_momentum_kdv_and_scaling():
    pt = kdv_portrait()
    assert boussinesq_momentum(KDV, 0.0, (0.5,), pt) == pytest.approx(24 / 5, rel=1e-12)
    kdv4 = SystemSpec(N=1, b=1.0, f=KDV.f, kappa=Poly((4.0,)))
    pt4 = classify_portrait(kdv4, 0.0, (0.5,))
    assert boussinesq_momentum(kdv4, 0.0, (0.5,), pt4) == pytest.approx(48 / 5, rel=1e-12)


def test_momentum_derivative_oracles():
    r = momentum_derivatives(KDV, 0.0, (-1.0,), "both")
    assert r.M == pytest.approx(24 / 5, rel=1e-12)
    assert abs(r.d2M_integral - r.d2M_fd) / max(1.0, abs(r.d2M_fd)) <= 1e-4
    assert r.dM == pytest.approx(r.dM_fd, rel=1e-6)
    assert r.d2M == pytest.approx(18.0, rel=1e-8)


def test_ek_momentum_agreement():
    pt = ek_portrait()
    r = momentum_derivatives(EK, pt.c, A.endstate(EK, pt.c, pt.lam, pt.v_s), "both")
    assert r.agreement <= 1e-4
    assert r.dM == pytest.approx(r.dM_fd, rel=1e-6)
    # the endstate is held fixed, so M at c reproduces the portrait's own momentum
    assert momentum_at_speed(EK, pt.c, pt.v_s, 0.5) == pytest.approx(r.M, rel=1e-12)


def test_conjugate_point_gradient_consistency():
    pt = kdv_portrait()
    co = A.limit_coeffs(KDV, 0.0, (0.5,), pt, "soliton")
    assert co.p == pytest.approx(2 / 3)
    prof = profile(KDV, 0.0, (0.5,))
    Vsup = prof.grad_components(pt.v_sup, 0)[0]
    # exact: grad v^s = -grad Z(v^s) / Z_v(v^s) = p_s V^s since Z_v = -W_v
    exact = Vsup / float(prof.W(pt.v_sup, 1))
    np.testing.assert_allclose(co.p * Vsup, exact, rtol=1e-15)
    e = 1e-6
    o_p = orbit_roots(KDV, Params(pt.mu_s - e, (0.5,), 0.0), pt)
    assert (pt.v_sup - o_p.v3) / e == pytest.approx(co.p, rel=1e-5)
