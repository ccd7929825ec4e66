import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wavestab.model import Params
from wavestab.quadrature import action_gradient
from wavestab.stability import (DEGENERATE, INCONCLUSIVE, STABLE, UNSTABLE, hessian_action,
                                negative_signature, stability_verdict, verdict_from)

from instances import KDV, kdv_portrait


def test_signature_examples():
    assert negative_signature(np.diag([1.0, -1.0, 2.0])).n == 1
    r = negative_signature(np.diag([0.0, 1.0, 1.0]), tol_eig=1e-8)
    assert r.degenerate


def test_verdict_table():
    assert verdict_from(1, 1, False) == STABLE
    assert verdict_from(2, 1, False) == UNSTABLE
    assert verdict_from(3, 1, False) == INCONCLUSIVE
    assert verdict_from(4, 2, False) == INCONCLUSIVE
    assert verdict_from(1, 1, True) == DEGENERATE


@settings(max_examples=60, deadline=None)
@given(arrays(float, (4, 4), elements=st.floats(-10, 10)))
def test_signature_matches_eigen_count(M):
    H = M + M.T
    ev = np.linalg.eigvalsh(H)
    if np.min(np.abs(ev)) < 1e-3 * max(1.0, np.max(np.abs(ev))):
        return
    r = negative_signature(H)
    assert r.n == r.n_eig == int(np.sum(ev < 0))
    if r.sylvester_n is not None:
        assert r.sylvester_n == r.n


def test_signature_with_stiff_leading_entry():
    # the (0,0) entry dwarfs an O(1) indefinite block, as near the soliton limit
    rng = np.random.default_rng(1)
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    B = Q @ np.diag([2.0, -0.5, 1.0]) @ Q.T
    H = np.zeros((4, 4))
    H[0, 0] = 1e10
    H[1:, 1:] = B
    H[0, 1:] = H[1:, 0] = rng.normal(size=3)
    assert negative_signature(H).n == 1


def test_kdv_hessian_against_second_differences_of_theta():
    pt = kdv_portrait()
    p = Params(0.0, (0.5,), 0.0)
    H = hessian_action(KDV, p, pt)
    x0, h = p.vector(), 1e-4
    th = lambda x: action_gradient(KDV, Params.from_vector(x), portrait=None).theta
    B = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            ei, ej = np.eye(3)[i] * h, np.eye(3)[j] * h
            B[i, j] = (th(x0 + ei + ej) - th(x0 + ei - ej) - th(x0 - ei + ej) + th(x0 - ei - ej)) / (4 * h * h)
    assert np.linalg.norm(H - B) / np.linalg.norm(B) < 1e-3
    assert H[0, 0] == pytest.approx(B[0, 0], rel=1e-3)


def test_hessian_is_symmetric_and_mu_entry_is_period_slope():
    pt = kdv_portrait()
    H = hessian_action(KDV, Params(0.1, (0.5,), 0.0), pt)
    np.testing.assert_array_equal(H, H.T)
    h = 1e-5
    dXi = (action_gradient(KDV, Params(0.1 + h, (0.5,), 0.0), portrait=pt).period
           - action_gradient(KDV, Params(0.1 - h, (0.5,), 0.0), portrait=pt).period) / (2 * h)
    assert H[0, 0] == pytest.approx(dXi, rel=1e-6)


@pytest.mark.parametrize("gap_side", ["center", "saddle"])
def test_kdv_verdicts_near_both_limits(gap_side):
    pt = kdv_portrait()
    mu = pt.mu_0 + 1e-3 if gap_side == "center" else pt.mu_s - 1e-3
    rep = stability_verdict(KDV, Params(mu, (0.5,), 0.0), pt)
    assert rep.signature == 1
    assert rep.verdict == STABLE
    assert rep.asymmetry < 1e-4


def test_thread_count_does_not_change_the_hessian(monkeypatch):
    pt = kdv_portrait()
    p = Params(0.05, (0.5,), 0.0)
    monkeypatch.setenv("WAVESTAB_THREADS", "1")
    H1 = hessian_action(KDV, p, pt)
    monkeypatch.setenv("WAVESTAB_THREADS", "3")
    H3 = hessian_action(KDV, p, pt)
    np.testing.assert_array_equal(H1, H3)
