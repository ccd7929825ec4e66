"""Acceptance criteria, one marked test (or group) per criterion.

Run under pytest for a PASS/FAIL line per criterion in the terminal summary,
or directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad

from wavestab import asymlib as L
from wavestab import asymptotics as A
from wavestab import constant_states as CS
from wavestab.algebra import build_S, verify_orthogonality
from wavestab.model import Params, params_for_state
from wavestab.portrait import classify_portrait, orbit_roots
from wavestab.quadrature import action_gradient, boussinesq_momentum, momentum_derivatives
from wavestab.stability import STABLE, UNSTABLE, stability_verdict

from instances import KDV, QUARTIC_C, QUARTIC_S, instance, quartic_ek, random_instances

BOTH = ["kdv", "ek"]
GRID = [(mu, c) for mu in (-0.1, 0.0, 0.1) for c in (-0.1, 0.0, 0.1)]


def _theta(x):
    return action_gradient(KDV, Params.from_vector(x)).theta


def _richardson_grad(x, i):
    h = 1e-4 * max(1.0, abs(x[i]))
    e = np.eye(x.size)[i] * h
    d1 = (_theta(x + e) - _theta(x - e)) / (2 * h)
    d2 = (_theta(x + 2 * e) - _theta(x - 2 * e)) / (4 * h)
    return (4 * d1 - d2) / 3


@pytest.mark.criterion(1, "gradient of the action matches finite differences (rel 1e-6)")
@pytest.mark.parametrize("mu, c", GRID)
def test_c01_gradient_identity(mu, c):
    x = np.array([mu, 0.5, c])
    grad = action_gradient(KDV, Params.from_vector(x)).grad
    for i in range(3):
        assert abs(_richardson_grad(x, i) - grad[i]) <= 1e-6 * abs(grad[i])


@pytest.mark.criterion(2, "d_mu Theta equals the period (rel 1e-7)")
@pytest.mark.parametrize("mu, c", GRID)
def test_c02_mu_derivative_is_period(mu, c):
    p = Params(mu, (0.5,), c)
    ag = action_gradient(KDV, p)
    o = orbit_roots(KDV, p, classify_portrait(KDV, c, (0.5,)))
    # independent period: mu - W = (v - v1)(v - v2)(v3 - v) / 6 for the cubic potential
    Xi, _ = quad(lambda v: np.sqrt(12.0 / (v - o.v1)), o.v2, o.v3, weight="alg", wvar=(-0.5, -0.5),
                 epsabs=0.0, epsrel=1e-13)
    assert ag.grad[0] == pytest.approx(Xi, rel=1e-7)
    assert _richardson_grad(p.vector(), 0) == pytest.approx(Xi, rel=1e-7)


@pytest.mark.criterion(3, "harmonic period: bounded slope, extrapolated limit 2 pi (1e-8)")
def test_c03_harmonic_period():
    sys, c, lam, pt = instance("kdv")
    Xi0 = 2 * np.pi
    eps = [1e-2, 1e-3, 1e-4, 1e-5]
    Xi = [action_gradient(sys, Params(pt.mu_0 + e, lam, c), portrait=pt).period for e in eps]
    slope = [abs(x - Xi0) / e for x, e in zip(Xi, eps)]
    assert max(slope) < 2.0 and max(slope) / min(slope) < 1.1
    extrapolated = (10 * Xi[3] - Xi[2]) / 9
    assert abs(extrapolated - Xi0) <= 1e-8


@pytest.mark.criterion(4, "harmonic action: Theta / (mu - mu0) within 1% of the period at 1e-3")
def test_c04_harmonic_action():
    sys, c, lam, pt = instance("kdv")
    e = 1e-3
    theta = action_gradient(sys, Params(pt.mu_0 + e, lam, c), portrait=pt).theta
    assert theta / e == pytest.approx(2 * np.pi, rel=1e-2)


def _harmonic_ratios(name):
    sys, c, lam, pt = instance(name)
    res = []
    for d in 0.1 * 0.5 ** np.arange(5):
        mu = A.mu_for_delta(sys, c, lam, pt, d)
        res.append(A.compare_hessian(sys, Params(mu, lam, c), "harmonic", pt)["residual"])
    return np.array(res[1:]) / np.array(res[:-1])


@pytest.mark.criterion(5, "harmonic Hessian residual ratio in [0.25, 0.75] per delta halving")
@pytest.mark.parametrize("name", BOTH)
def test_c05_harmonic_hessian_first_order(name):
    ratios = _harmonic_ratios(name)
    assert np.all((ratios >= 0.25) & (ratios <= 0.75)), f"halving ratios {ratios}"


@pytest.mark.criterion(6, "small amplitude: n = N, stable, minor signs (+, sign a0, -, - [, +])")
@pytest.mark.parametrize("name", BOTH)
def test_c06_small_amplitude(name):
    sys, c, lam, pt = instance(name)
    seq = A.sigma0_sequence(sys, c, lam, pt)
    alpha = A.harmonic_hessian_prediction(sys, c, lam, pt).alpha
    expect = (1, int(np.sign(alpha)), -1, -1) + ((1,) if sys.N == 2 else ())
    assert seq.signs == expect
    for d in (1e-2, 1e-3):
        rep = stability_verdict(sys, Params(A.mu_for_delta(sys, c, lam, pt, d), lam, c), pt)
        assert rep.signature == sys.N and rep.verdict == STABLE


@pytest.mark.criterion(7, "soliton limit: Theta - M - log term <= 1e-4 at 1e-6; M = 24/5 (1e-9)")
@pytest.mark.parametrize("name", BOTH)
def test_c07_soliton_action(name):
    sys, c, lam, pt = instance(name)
    M = boussinesq_momentum(sys, c, lam, pt)
    if name == "kdv":
        assert abs(M - 24 / 5) <= 1e-9
    a_s = A.limit_coeffs(sys, c, lam, pt, "soliton").a
    e = 1e-6
    theta = action_gradient(sys, Params(pt.mu_s - e, lam, c), portrait=pt).theta
    log_term = a_s * np.sqrt(float(sys.kappa(pt.v_s)) / 2) * e * np.log(e)
    assert abs(theta - M - log_term) <= 1e-4


@pytest.mark.criterion(8, "soliton leading block ratio within 2% of 1 at rho = 1e-3")
@pytest.mark.parametrize("name", BOTH)
def test_c08_leading_block(name):
    sys, c, lam, pt = instance(name)
    mu = A.mu_for_rho(sys, c, lam, pt, 1e-3)
    r = A.compare_hessian(sys, Params(mu, lam, c), "soliton", pt, M2=0.0)
    assert r["leading_ratio"] == pytest.approx(1.0, abs=0.02)


@pytest.mark.criterion(9, "S.H.S -> M'' (decreasing error, <= 5% at rho 1e-3), M'' integral ~ FD (1e-4)")
@pytest.mark.parametrize("name", BOTH)
def test_c09_scalar_identity(name):
    sys, c, lam, pt = instance(name)
    mom = momentum_derivatives(sys, c, A.endstate(sys, c, lam, pt.v_s), "both")
    assert abs(mom.d2M_integral - mom.d2M_fd) <= 1e-4 * abs(mom.d2M_fd)
    M2 = mom.d2M_fd
    errs = []
    for rho in (1e-1, 1e-2, 1e-3):
        mu = A.mu_for_rho(sys, c, lam, pt, rho)
        errs.append(A.compare_hessian(sys, Params(mu, lam, c), "soliton", pt, M2=M2)["SHS_error"])
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 0.05 * abs(M2)


def first_negative_quartic():
    """Fixed-order sweep of the quartic family; first point with M'' < 0 by the FD oracle."""
    for s in QUARTIC_S:
        sys = quartic_ek(s)
        for c in QUARTIC_C:
            if momentum_derivatives(sys, c, (0.0, 0.0), "finite_difference").d2M < 0:
                return sys, c
    raise AssertionError("no negative M'' in the quartic family")


@pytest.mark.criterion(10, "soliton verdicts follow sign M'': KdV n = N, quartic M''<0 n = N + 1")
def test_c10_verdicts_follow_M2():
    sys, c, lam, pt = instance("kdv")
    assert momentum_derivatives(sys, c, (pt.v_s,), "finite_difference").d2M > 0
    for rho in (1e-2, 1e-3):
        rep = stability_verdict(sys, Params(A.mu_for_rho(sys, c, lam, pt, rho), lam, c), pt)
        assert rep.signature == sys.N and rep.verdict == STABLE
    qsys, qc = first_negative_quartic()
    p = params_for_state(qsys, 0.0, 0.0, qc)
    qpt = classify_portrait(qsys, qc, p.lam)
    for rho in (1e-2, 1e-3):
        rep = stability_verdict(qsys, Params(A.mu_for_rho(qsys, qc, p.lam, qpt, rho), p.lam, qc), qpt)
        assert rep.signature == qsys.N + 1 and rep.verdict == UNSTABLE


@pytest.mark.criterion(11, "frame orthogonality residuals <= 1e-12 on 20 random systems")
def test_c11_orthogonality():
    for sys, c, lam, pt in random_instances(11, 20):
        for which in ("harmonic", "soliton"):
            assert verify_orthogonality(A.frame_vectors(sys, c, lam, pt, which), build_S(sys))["max"] <= 1e-12


@pytest.mark.criterion(12, "R permutation symmetry <= 1e-12 on 100 random triples")
@pytest.mark.parametrize("name", BOTH)
def test_c12_R_symmetry(name):
    sys, c, lam, _ = instance(name)
    lo, hi = sys.domain
    triples = np.random.default_rng(12).uniform(lo, hi, size=(100, 3))
    assert L.symmetry_check_R(sys, triples, c, lam) <= 1e-12


@pytest.mark.criterion(13, "log-series coefficients, G remainder, exact H, root ladder O(eps^2)")
def test_c13_log_series():
    ln4 = np.log(4.0)
    one, x = L.SmoothFn.polynomial([1.0]), L.SmoothFn.polynomial([0.0, 1.0])
    G1, Gx = L.G_expansion(one), L.G_expansion(x)
    np.testing.assert_allclose(G1.a, [-1, 0, 0], atol=1e-14)
    np.testing.assert_allclose(G1.b, [ln4, 0.5, -3 / 16], atol=1e-12)
    np.testing.assert_allclose(Gx.a, [0, 0.5, 0], atol=1e-14)
    np.testing.assert_allclose(Gx.b, [1, 0.5 - 0.5 * ln4, -3 / 8], atol=1e-12)
    rhos = [1e-1, 1e-2, 1e-3, 1e-4]
    for g, G in ((one, G1), (x, Gx)):
        q = [abs(L.G_numeric(g, r) - G(r)) / (r**3 * abs(np.log(r))) for r in rhos]
        assert max(q) < 1.0
    for r in rhos:
        assert L.H_numeric(one, r) == pytest.approx(float(L.H_exact_unit(r)), rel=1e-12)
    eps = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    lad = L.root_ladder(L.Poly((0.0, 0.0, 0.5, 1.0 / 6.0)), eps)
    q = lad["err_z"] / eps**2
    assert q.max() < 1.0 and q.max() / q.min() < 2.0


@pytest.mark.criterion(14, "constant states: threshold = harmonic period, predicate iff, kernel 2")
@pytest.mark.parametrize("name", BOTH)
def test_c14_constant_states(name):
    sys, c, lam, pt = instance(name)
    U = A.endstate(sys, c, lam, pt.v_0)
    rep = CS.coperiodic_threshold(sys, U, c, lam)
    Xi0 = A.harmonic_hessian_prediction(sys, c, lam, pt).Xi0
    assert abs(rep.Xi_star - Xi0) <= 1e-10 * Xi0
    assert rep.kernel_dim_at_Xi_star == 2
    for f in (0.5, 0.99, 0.9999, 1.0001, 1.01, 3.0):
        Xi = f * rep.Xi_star
        _, lowest = CS.mode_nullity(sys, U, c, Xi, 64)
        assert rep.coperiodic_stable(Xi) == (lowest >= 0.0)


@pytest.mark.criterion(15, "determinant signs near both limits")
@pytest.mark.parametrize("name", BOTH + ["quartic"])
def test_c15_determinant_signs(name):
    if name == "quartic":
        sys, c = first_negative_quartic()
        lam = params_for_state(sys, 0.0, 0.0, c).lam
        pt = classify_portrait(sys, c, lam)
    else:
        sys, c, lam, pt = instance(name)
        mu = A.mu_for_delta(sys, c, lam, pt, 1e-2)
        det = stability_verdict(sys, Params(mu, lam, c), pt).det
        assert np.sign(det) == (-1 if sys.N == 1 else 1)
    M2 = momentum_derivatives(sys, c, A.endstate(sys, c, lam, pt.v_s), "finite_difference").d2M
    mu = A.mu_for_rho(sys, c, lam, pt, 1e-3)
    det = stability_verdict(sys, Params(mu, lam, c), pt).det
    assert np.sign(M2 * det) == (-1 if sys.N == 1 else 1)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
