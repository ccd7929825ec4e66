"""Desingularized quadrature for the action, its gradient and the solitary-wave momentum.

Two parametrizations of the orbit segment [v2, v3] are provided:

* theta-form: v = v2 + (1 + sin theta)(v3 - v2)/2 with Z = (v3 - v)(v - v2) R(v, v2, v3);
  good away from the homoclinic limit.
* sigma-form: v = v2 + sigma (v3 - v2) with Z = (v - v1)(v - v2)(v3 - v) Rc(v, v1, v2, v3),
  where Rc is the third divided difference of W.  The 1/sqrt(sigma(sigma+rho)) kernel is
  removed by sigma = rho sinh^2(t/2) on [0, 1/2] and the right endpoint by sigma = 1 - s^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import AssumptionViolation, PortraitLost, WavestabError
from .model import Params, Profile, SystemSpec, params_for_state, profile
from .portrait import OrbitData, PhasePortrait, classify_portrait, orbit_roots

RTOL = 1e-10
MAX_PANELS = 2**14
ORDER = 16
R_SWITCH = 1e-4
SIGMA_REGIME_RHO = 0.5


@dataclass(frozen=True)
class ActionGradient:
    theta: float
    grad: np.ndarray
    period: float


@dataclass(frozen=True)
class MomentumReport:
    M: float
    dM: float
    d2M: float
    method: str
    d2M_integral: float | None = None
    d2M_fd: float | None = None
    dM_fd: float | None = None
    agreement: float | None = None


@lru_cache(maxsize=8)
def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


def adaptive_gl(fun: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                rtol: float = RTOL, max_panels: int = MAX_PANELS, order: int = ORDER,
                min_panels: int = 2):
    """Composite Gauss-Legendre with panel doubling.

    ``fun`` maps a 1-D array of abscissae to an array of shape (k, m) or (m,).
    Stops once successive estimates agree to ``rtol`` (componentwise, with a
    floor of 1e-14 times the largest component) or ``max_panels`` is reached.
    Returns (estimate, panels).
    """
    x0, w0 = _gl(order)

    def estimate(n):
        edges = np.linspace(a, b, n + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
        w = (half[:, None] * w0[None, :]).ravel()
        return np.atleast_2d(fun(x)) @ w

    n = min_panels
    prev = estimate(n)
    while True:
        n *= 2
        cur = estimate(n)
        scale = np.max(np.abs(cur))
        tol = rtol * np.maximum(np.abs(cur), 1e-4 * scale) + 1e-300
        if np.all(np.abs(cur - prev) <= tol) or n >= max_panels:
            break
        prev = cur
    out = cur if cur.size > 1 else cur[0]
    return out, n


def _pairwise_min(v, w, z):
    return np.minimum(np.minimum(np.abs(v - w), np.abs(w - z)), np.abs(z - v))


def _R_tensor(prof: Profile, v, w, z, n: int = 32):
    x, wt = _gl(n)
    t = 0.5 * (x + 1.0)
    wt = 0.5 * wt
    T, S = np.meshgrid(t, t, indexing="ij")
    Wt = np.outer(wt, wt)
    pts = w + T * (z - w) + T * S * (v - z)
    return float(np.sum(Wt * T * prof.W(pts, 2)))


def reduced_R(sys: SystemSpec, v: float, w: float, z: float, c: float, lam) -> float:
    """R(v, w, z): second divided difference of W, or its double-integral form at close nodes."""
    sys.check_domain(np.array([v, w, z]))
    prof = profile(sys, c, lam)
    scale = max(1.0, abs(v), abs(w), abs(z))
    if _pairwise_min(v, w, z) > R_SWITCH * scale:
        return float(prof.W.dd(v, w, z))
    return _R_tensor(prof, v, w, z)


def _grad_rows(prof: Profile, v: np.ndarray) -> np.ndarray:
    return np.asarray(prof.grad_components(v, 0)[0])


def theta_and_grad(sys: SystemSpec, params: Params, orbit: OrbitData) -> ActionGradient:
    """Theta and grad Theta on the theta-grid."""
    prof = profile(sys, params.c, params.lam)
    v2, v3 = orbit.v2, orbit.v3
    L = v3 - v2

    def integrand(th):
        V = v2 + 0.5 * (1.0 + np.sin(th)) * L
        R = prof.W.dd(V, v2, v3)
        if np.any(R <= 0.0):
            raise AssumptionViolation("R <= 0 on [v2, v3]: Z is not single-signed")
        kap = sys.kappa(V)
        th_part = L * L * np.sqrt(0.5 * kap * R) * np.cos(th) ** 2
        gr = np.sqrt(2.0 * kap / R) * _grad_rows(prof, V)
        return np.vstack([th_part, gr])

    val, _ = adaptive_gl(integrand, -0.5 * np.pi, 0.5 * np.pi)
    return ActionGradient(theta=float(val[0]), grad=np.array(val[1:]), period=float(val[1]))


def theta_and_grad_soliton_regime(sys: SystemSpec, params: Params, orbit: OrbitData) -> ActionGradient:
    """Theta and grad Theta in sigma, with both endpoint singularities removed exactly."""
    if orbit.v1 is None or orbit.rho is None:
        raise AssumptionViolation("soliton-regime quadrature needs v1")
    prof = profile(sys, params.c, params.lam)
    v1, v2, v3 = orbit.v1, orbit.v2, orbit.v3
    rho = orbit.rho
    L = v3 - v2

    def pieces(sig):
        V = v2 + sig * L
        Rc = prof.W.dd(V, v1, v2, v3)
        if np.any(Rc <= 0.0):
            raise AssumptionViolation("factorized potential changes sign on [v2, v3]")
        return V, Rc, sys.kappa(V)

    def left(t):
        sh = np.sinh(0.5 * t)
        sig = rho * sh * sh
        V, Rc, kap = pieces(sig)
        th_part = 2.0 * L * L * np.sqrt(2.0 * kap * L * (1.0 - sig) * Rc) * sig * (sig + rho)
        gr = np.sqrt(2.0 * kap / (L * (1.0 - sig) * Rc)) * _grad_rows(prof, V)
        return np.vstack([th_part, gr])

    def right(s):
        sig = 1.0 - s * s
        V, Rc, kap = pieces(sig)
        root = np.sqrt(sig * (sig + rho))
        th_part = 4.0 * L * L * np.sqrt(2.0 * kap * L * Rc) * s * s * root
        gr = 2.0 * np.sqrt(2.0 * kap / (L * Rc)) / root * _grad_rows(prof, V)
        return np.vstack([th_part, gr])

    t_half = 2.0 * np.arcsinh(np.sqrt(0.5 / rho))
    a, _ = adaptive_gl(left, 0.0, t_half)
    b, _ = adaptive_gl(right, 0.0, np.sqrt(0.5))
    val = a + b
    return ActionGradient(theta=float(val[0]), grad=np.array(val[1:]), period=float(val[1]))


def action_gradient(sys: SystemSpec, params: Params, orbit: OrbitData | None = None,
                    portrait: PhasePortrait | None = None) -> ActionGradient:
    """Dispatch to the sigma-form when rho < 1/2, else the theta-form."""
    if orbit is None:
        if portrait is None:
            portrait = classify_portrait(sys, params.c, params.lam)
        orbit = orbit_roots(sys, params, portrait)
    if orbit.rho is not None and orbit.rho < SIGMA_REGIME_RHO:
        return theta_and_grad_soliton_regime(sys, params, orbit)
    return theta_and_grad(sys, params, orbit)


def boussinesq_momentum(sys: SystemSpec, c: float, lam, portrait: PhasePortrait) -> float:
    """Action of the limiting solitary wave, 2 h^2 int sqrt(2 kappa |R|) sigma dsigma."""
    prof = profile(sys, c, lam)
    v_s, v_sup = portrait.v_s, portrait.v_sup
    h = v_sup - v_s

    def rc(V):
        out = prof.W.dd(V, v_s, v_s, v_sup)
        if np.any(out <= 0.0):
            raise AssumptionViolation("homoclinic potential changes sign")
        return out

    def left(sig):
        V = v_s + sig * h
        return 2.0 * h * h * np.sqrt(2.0 * sys.kappa(V) * h * (1.0 - sig) * rc(V)) * sig

    def right(s):
        sig = 1.0 - s * s
        V = v_s + sig * h
        return 4.0 * h * h * np.sqrt(2.0 * sys.kappa(V) * h * rc(V)) * sig * s * s

    a, _ = adaptive_gl(left, 0.0, 0.5)
    b, _ = adaptive_gl(right, 0.0, np.sqrt(0.5))
    return float(a + b)


def _endstate_portrait(sys: SystemSpec, c: float, v_s: float, u_s: float | None):
    pars = params_for_state(sys, v_s, u_s, c)
    try:
        pt = classify_portrait(sys, c, pars.lam)
    except WavestabError as exc:
        raise PortraitLost(f"portrait lost at c={c}: {exc.reason}") from exc
    if abs(pt.v_s - v_s) > 1e-8 * max(1.0, abs(v_s)):
        raise PortraitLost(f"saddle moved away from the endstate at c={c}")
    return pars, pt


def momentum_at_speed(sys: SystemSpec, c: float, v_s: float, u_s: float | None = None) -> float:
    """M(c) at fixed endstate U_s."""
    pars, pt = _endstate_portrait(sys, c, v_s, u_s)
    return boussinesq_momentum(sys, c, pars.lam, pt)


def _psi(prof: Profile, v, v_s: float, b: float):
    """S_s . grad Z(v) / (v - v_s)^2 and its v-derivative."""
    if prof.g is None:
        z = np.zeros_like(np.asarray(v, dtype=float))
        return z - 0.5 / b, z
    return -prof.g.dd(v, v_s) / b, -prof.g.dd(v, v, v_s) / b


def momentum_integrals(sys: SystemSpec, c: float, lam, portrait: PhasePortrait):
    """(d_c M, d_c^2 M) from the sigma-integrals at fixed endstate."""
    prof = profile(sys, c, lam)
    b = sys.b
    v_s, v_sup = portrait.v_s, portrait.v_sup
    h = v_sup - v_s
    psi_sup, _ = _psi(prof, np.array([v_sup]), v_s, b)
    G = h * h * float(psi_sup[0]) / float(prof.W(v_sup, 1))  # grad v^s . S_s

    def terms(sig, one_minus):
        V = v_s + sig * h
        d = sig * h
        rc = prof.W.dd(V, v_s, v_s, v_sup)
        R = -h * one_minus * rc
        kap = sys.kappa(V)
        Y = np.sqrt(2.0 * kap / (h * one_minus * rc))
        psi, psi_v = _psi(prof, V, v_s, b)
        R_v = prof.W.dd(V, V, v_s, v_s)
        d1 = -Y * h * d * psi
        B = h * d * psi * psi - R_v * d * d * psi * G
        rest = (0.5 * sys.kappa(V, 1) / kap) * d * d * psi * G + (2.0 * d * psi + d * d * psi_v) * G
        if sys.N == 2:
            rest = rest - h * d / (b * b * sys.tau(V))
        d2 = Y * (0.5 * B / R + rest)
        return np.vstack([d1, d2])

    left = lambda sig: terms(sig, 1.0 - sig)
    right = lambda s: 2.0 * s * terms(1.0 - s * s, s * s)
    a, _ = adaptive_gl(left, 0.0, 0.5)
    bb, _ = adaptive_gl(right, 0.0, np.sqrt(0.5))
    val = a + bb
    return float(val[0]), float(val[1])


def _fd_momentum(sys, c, v_s, u_s, h0=None, rtol=1e-8, max_halvings=8):
    """Richardson-extrapolated central differences of M(c)."""
    h = h0 if h0 is not None else 1e-2 * max(1.0, abs(c))
    M0 = momentum_at_speed(sys, c, v_s, u_s)

    def diffs(step):
        mp = momentum_at_speed(sys, c + step, v_s, u_s)
        mm = momentum_at_speed(sys, c - step, v_s, u_s)
        return (mp - mm) / (2 * step), (mp - 2 * M0 + mm) / step**2

    d1a, d2a = diffs(h)
    best = None
    for _ in range(max_halvings):
        h *= 0.5
        d1b, d2b = diffs(h)
        r1 = (4 * d1b - d1a) / 3
        r2 = (4 * d2b - d2a) / 3
        if best is not None and abs(r2 - best[1]) <= rtol * max(1.0, abs(r2)):
            return M0, r1, r2
        best = (r1, r2)
        d1a, d2a = d1b, d2b
    return M0, best[0], best[1]


def momentum_derivatives(sys: SystemSpec, c: float, v_s_state, method: str = "both") -> MomentumReport:
    """M, d_c M and d_c^2 M at fixed endstate (v_s[, u_s])."""
    if method not in ("integral", "finite_difference", "both"):
        raise ValueError(f"unknown method {method!r}")
    v_s = float(v_s_state[0])
    u_s = float(v_s_state[1]) if sys.N == 2 else None
    pars, pt = _endstate_portrait(sys, c, v_s, u_s)
    M = boussinesq_momentum(sys, c, pars.lam, pt)
    d2_int = d2_fd = d1_fd = None
    d1 = None
    if method in ("integral", "both"):
        d1, d2_int = momentum_integrals(sys, c, pars.lam, pt)
    if method in ("finite_difference", "both"):
        try:
            _, d1_fd, d2_fd = _fd_momentum(sys, c, v_s, u_s)
        except PortraitLost:
            if method == "finite_difference":
                raise
    if method == "finite_difference":
        return MomentumReport(M=M, dM=d1_fd, d2M=d2_fd, method=method, d2M_fd=d2_fd, dM_fd=d1_fd)
    agreement = None
    if d2_fd is not None:
        agreement = abs(d2_int - d2_fd) / max(1.0, abs(d2_fd))
    return MomentumReport(M=M, dM=d1, d2M=d2_int, method=method if d2_fd is not None else "integral",
                          d2M_integral=d2_int, d2M_fd=d2_fd, dM_fd=d1_fd, agreement=agreement)
