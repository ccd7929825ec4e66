"""Limit coefficients, asymptotic frames and predicted Hessians in the harmonic and soliton limits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import basis_P, build_S
from .errors import DegenerateAlpha0, DegenerateSlaving, UsageError
from .model import Params, SystemSpec, T_vector, profile
from .portrait import PhasePortrait, orbit_roots
from .quadrature import momentum_derivatives

HARMONIC = "harmonic"
SOLITON = "soliton"


@dataclass(frozen=True)
class LimitCoeffs:
    a: float
    b: float
    cc: float
    p: float | None
    which: str


@dataclass(frozen=True)
class YPartials:
    """Values of Y and ratios Y_*/Y at a coincident node (v*, v*, v*)."""

    Y: float
    v: float
    z: float
    vv: float
    zz: float
    wz: float


@dataclass
class AsymFrame:
    which: str
    point: float
    coeffs: LimitCoeffs
    V: np.ndarray
    W: np.ndarray
    Z: np.ndarray
    T: np.ndarray
    Vsup: np.ndarray | None = None
    S: np.ndarray | None = None
    alpha: float | None = None
    beta: float | None = None
    Xi0: float | None = None
    Ypoint: float | None = None
    predicted_H: dict | np.ndarray | None = field(default=None)


def _which(which: str) -> str:
    if which not in (HARMONIC, SOLITON):
        raise UsageError("which must be 'harmonic' or 'soliton'")
    return which


def limit_coeffs(sys: SystemSpec, c: float, lam, portrait: PhasePortrait, which: str) -> LimitCoeffs:
    prof = profile(sys, c, lam)
    v = portrait.v_0 if _which(which) == HARMONIC else portrait.v_s
    _, _, W2, W3, W4 = (float(x) for x in prof.W.derivs(v, 4))
    k = 1.0 / (6.0 * np.sqrt(2.0))
    num = 5.0 / 3.0 * W3 * W3 - W2 * W4
    if which == HARMONIC:
        return LimitCoeffs(a=np.sqrt(2.0 / W2), b=-W3 / (3.0 * W2 * W2),
                           cc=k * num / W2**3.5, p=None, which=which)
    p = 1.0 / float(prof.W(portrait.v_sup, 1))
    return LimitCoeffs(a=np.sqrt(-2.0 / W2), b=W3 / (3.0 * W2 * W2),
                       cc=k * num / (-W2) ** 3.5, p=p, which=which)


def y_partials(sys: SystemSpec, c: float, lam, v: float) -> YPartials:
    """Y = sqrt(2 kappa(v) / |R(v, w, z)|) and its partials at v = w = z.

    At coincident nodes R = W''/2, R_v = R_w = R_z = W'''/6,
    R_vv = R_zz = W''''/12 and R_wz = W''''/24.
    """
    prof = profile(sys, c, lam)
    _, _, W2, W3, W4 = (float(x) for x in prof.W.derivs(v, 4))
    k0, k1, k2 = (float(x) for x in sys.kappa.derivs(v, 2))
    R, R1, Rvv, Rwz = W2 / 2.0, W3 / 6.0, W4 / 12.0, W4 / 24.0
    lv = 0.5 * k1 / k0 - 0.5 * R1 / R
    lz = -0.5 * R1 / R
    lvv = 0.5 * (k2 / k0 - (k1 / k0) ** 2) - 0.5 * (Rvv / R - (R1 / R) ** 2)
    lzz = -0.5 * (Rvv / R - (R1 / R) ** 2)
    lwz = -0.5 * (Rwz / R - (R1 / R) ** 2)
    return YPartials(Y=np.sqrt(2.0 * k0 / abs(R)), v=lv, z=lz, vv=lvv + lv * lv,
                     zz=lzz + lz * lz, wz=lwz + lz * lz)


def alpha_beta(coeffs: LimitCoeffs, yp: YPartials) -> tuple[float, float]:
    """alpha and beta from their definition through Y-partials."""
    a2 = coeffs.a**2
    alpha = coeffs.b * (yp.v + 2.0 * yp.z) + a2 * (0.25 * yp.vv + yp.zz - yp.wz)
    beta = coeffs.b + 0.5 * a2 * yp.v
    return alpha, beta


def alpha0_closed_form(sys: SystemSpec, coeffs: LimitCoeffs, v0: float) -> float:
    """alpha_0 in terms of (a0, b0, c0) and kappa.

    The (kappa_v / kappa)^2 term is needed whenever kappa_v does not vanish at the center;
    dropping it gives an O(1) mismatch with the Y-partial definition.
    """
    k0, k1, k2 = (float(x) for x in sys.kappa.derivs(v0, 2))
    a, b, cc = coeffs.a, coeffs.b, coeffs.cc
    r = k1 / k0
    return 1.5 * cc / a + 0.75 * b * r + a * a / 8.0 * k2 / k0 - a * a / 16.0 * r * r


def frame_vectors(sys: SystemSpec, c: float, lam, portrait: PhasePortrait, which: str) -> AsymFrame:
    prof = profile(sys, c, lam)
    v = portrait.v_0 if _which(which) == HARMONIC else portrait.v_s
    V, W, Z = (np.asarray(r, dtype=float) for r in prof.grad_components(v, 2))
    T = np.asarray(T_vector(sys, v), dtype=float)
    frame = AsymFrame(which=which, point=v, coeffs=limit_coeffs(sys, c, lam, portrait, which),
                      V=V, W=W, Z=Z, T=T)
    if which == SOLITON:
        frame.Vsup = np.asarray(prof.grad_components(portrait.v_sup, 0)[0], dtype=float)
        frame.S = build_S(sys).S @ V
    return frame


def _core_block(frame: AsymFrame, alpha: float, beta: float, t_sign: float) -> np.ndarray:
    V, W, Z, T = frame.V, frame.W, frame.Z, frame.T
    a2 = frame.coeffs.a**2
    return (alpha * np.outer(V, V) + beta * (np.outer(V, W) + np.outer(W, V))
            + 0.5 * a2 * np.outer(W, W) + t_sign * np.outer(T, T)
            + 0.25 * a2 * (np.outer(V, Z) + np.outer(Z, V)))


def harmonic_hessian_prediction(sys: SystemSpec, c: float, lam, portrait: PhasePortrait) -> AsymFrame:
    frame = frame_vectors(sys, c, lam, portrait, HARMONIC)
    yp = y_partials(sys, c, lam, portrait.v_0)
    frame.alpha = alpha0_closed_form(sys, frame.coeffs, portrait.v_0)
    frame.beta = frame.coeffs.b + 0.5 * frame.coeffs.a**2 * yp.v
    frame.Ypoint = yp.Y
    frame.Xi0 = np.pi * frame.coeffs.a * np.sqrt(2.0 * float(sys.kappa(portrait.v_0)))
    frame.predicted_H = np.pi * yp.Y * _core_block(frame, frame.alpha, frame.beta, -1.0)
    return frame


def endstate(sys: SystemSpec, c: float, lam, v_s: float) -> tuple:
    prof = profile(sys, c, lam)
    return (v_s,) if sys.N == 1 else (v_s, float(prof.g(v_s)))


def soliton_hessian_prediction(sys: SystemSpec, c: float, lam, portrait: PhasePortrait,
                               rho: float | None = None, M2: float | None = None,
                               momentum_method: str = "finite_difference") -> AsymFrame:
    """Blocks of the soliton-limit expansion.

    predicted_H holds 'singular' (to be multiplied by (1 + rho)/rho^2), 'log' (to be
    multiplied by ln rho), 'M2' and, when rho is given, 'total' = the sum of both blocks.
    """
    frame = frame_vectors(sys, c, lam, portrait, SOLITON)
    yp = y_partials(sys, c, lam, portrait.v_s)
    frame.alpha, frame.beta = alpha_beta(frame.coeffs, yp)
    frame.Ypoint = yp.Y
    h_s = portrait.v_sup - portrait.v_s
    a2 = frame.coeffs.a**2
    if M2 is None:
        M2 = momentum_derivatives(sys, c, endstate(sys, c, lam, portrait.v_s), momentum_method).d2M
    blocks = {
        "singular": yp.Y * 2.0 * a2 / h_s**2 * np.outer(frame.V, frame.V),
        "log": yp.Y * _core_block(frame, frame.alpha, frame.beta, 1.0),
        "M2": M2,
    }
    if rho is not None:
        blocks["total"] = blocks["singular"] * (1.0 + rho) / rho**2 + blocks["log"] * np.log(rho)
    frame.predicted_H = blocks
    return frame


def compare_hessian(sys: SystemSpec, params: Params, which: str, portrait: PhasePortrait | None = None,
                    M2: float | None = None) -> dict:
    """Numerical Hessian against the predicted expansion."""
    from .portrait import classify_portrait
    from .stability import hessian_action

    if portrait is None:
        portrait = classify_portrait(sys, params.c, params.lam)
    orbit = orbit_roots(sys, params, portrait)
    H = hessian_action(sys, params, portrait)
    if _which(which) == HARMONIC:
        frame = harmonic_hessian_prediction(sys, params.c, params.lam, portrait)
        Hp = frame.predicted_H
        return {"which": which, "delta": orbit.delta, "H_num": H, "H_pred": Hp,
                "residual": np.linalg.norm(H - Hp, 2) / np.linalg.norm(Hp, 2)}
    rho = orbit.rho
    frame = soliton_hessian_prediction(sys, params.c, params.lam, portrait, rho=rho, M2=M2)
    blocks = frame.predicted_H
    rest = H - blocks["total"]
    SHS = float(frame.S @ H @ frame.S)
    lead = blocks["singular"][0, 0] * (1.0 + rho) / rho**2
    return {"which": which, "rho": rho, "H_num": H, "residual_matrix": rest,
            "E_res_E": float(rest[0, 0]), "SHS": SHS, "M2": blocks["M2"],
            "SHS_error": abs(SHS - blocks["M2"]),
            "SingularS": float(frame.S @ blocks["singular"] @ frame.S),
            "leading_ratio": float(H[0, 0]) / lead}


@dataclass(frozen=True)
class SigmaSequence:
    Sigma0: np.ndarray
    Sigma0_numeric: np.ndarray
    signs: tuple
    n: int


def sigma0_matrix(sys: SystemSpec, frame: AsymFrame) -> np.ndarray:
    """Explicit congruence matrix in the basis P0 = (E, S V0, [S T0,] S W0)."""
    M = build_S(sys).S
    W, Z, T = frame.W, frame.Z, frame.T
    g0 = frame.coeffs.a**2 / 4.0
    al, be = frame.alpha, frame.beta
    wsw = float(W @ M @ W)
    wsz = float(W @ M @ Z)
    if sys.N == 1:
        return np.array([
            [al, -g0 * wsw, be * wsw + g0 * wsz],
            [-g0 * wsw, 0.0, 0.0],
            [be * wsw + g0 * wsz, 0.0, 2 * g0 * wsw**2],
        ])
    tsw = float(T @ M @ W)
    return np.array([
        [al, -g0 * wsw, be * tsw, be * wsw + g0 * wsz],
        [-g0 * wsw, 0.0, 0.0, 0.0],
        [be * tsw, 0.0, 2 * g0 * tsw**2, 2 * g0 * tsw * wsw],
        [be * wsw + g0 * wsz, 0.0, 2 * g0 * tsw * wsw, 2 * g0 * wsw**2 - tsw**2],
    ])


def minor_signs(A: np.ndarray) -> tuple:
    out = [1]
    for k in range(1, A.shape[0] + 1):
        out.append(int(np.sign(np.linalg.det(A[:k, :k]))))
    return tuple(out)


def sign_changes(signs) -> int:
    return int(sum(1 for x, y in zip(signs[:-1], signs[1:]) if x * y < 0))


def sigma0_sequence(sys: SystemSpec, c: float, lam, portrait: PhasePortrait,
                    tol: float = 1e-12) -> SigmaSequence:
    frame = harmonic_hessian_prediction(sys, c, lam, portrait)
    if abs(frame.alpha) <= tol:
        raise DegenerateAlpha0("alpha_0 vanishes")
    if sys.N == 2 and abs(frame.W[2]) <= tol:
        raise DegenerateSlaving("g_v vanishes at the center")
    Sig = sigma0_matrix(sys, frame)
    P, congr = basis_P(frame, build_S(sys), HARMONIC)
    Sig_num = congr(frame.predicted_H) / (np.pi * frame.Ypoint)
    signs = minor_signs(Sig)
    return SigmaSequence(Sigma0=Sig, Sigma0_numeric=Sig_num, signs=signs, n=sign_changes(signs))


def soliton_sigma(sys: SystemSpec, frame: AsymFrame, H: np.ndarray) -> np.ndarray:
    """P_s^T H P_s / Y_0^s for a numerical Hessian."""
    _, congr = basis_P(frame, build_S(sys), SOLITON)
    return congr(H) / frame.Ypoint


def _slope(x, y) -> float:
    x, y = np.log(np.asarray(x)), np.log(np.maximum(np.asarray(y), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def root_expansion_check(sys: SystemSpec, params: Params, portrait: PhasePortrait, which: str,
                         exponents=None) -> dict:
    """Truncated root expansions against exact roots over eps = 10^-k.

    Returns per-quantity residual lists together with fitted log-log slopes
    and the expected orders.
    """
    c, lam = params.c, params.lam
    co = limit_coeffs(sys, c, lam, portrait, which)
    a, b, cc = co.a, co.b, co.cc
    if exponents is None:
        exponents = range(2, 7) if which == HARMONIC else range(2, 9)
    eps = np.array([10.0 ** (-k) for k in exponents])
    res: dict[str, list] = {}

    def add(key, val):
        res.setdefault(key, []).append(abs(val))

    for e in eps:
        if which == HARMONIC:
            orb = orbit_roots(sys, Params(portrait.mu_0 + e, lam, c), portrait)
            v0 = portrait.v_0
            r = np.sqrt(e)
            add("v2", orb.v2 - (v0 - a * r + b * e - cc * e * r))
            add("v3", orb.v3 - (v0 + a * r + b * e + cc * e * r))
            add("m", orb.m - v0 - b * e)
            add("delta", orb.delta - a * r)
        else:
            orb = orbit_roots(sys, Params(portrait.mu_s - e, lam, c), portrait)
            vs = portrait.v_s
            r = np.sqrt(e)
            add("v2", orb.v2 - (vs + a * r + b * e))
            if orb.v1 is not None:
                add("v1", orb.v1 - (vs - a * r + b * e))
                h_s = portrait.v_sup - vs
                add("mu_rho", e - h_s**2 / (4 * a * a) * (orb.rho**2 - orb.rho**3))
            add("v3", orb.v3 - (portrait.v_sup - co.p * e))
    expected = ({"v2": 2.0, "v3": 2.0, "m": 2.0, "delta": 1.5} if which == HARMONIC
                else {"v2": 1.5, "v1": 1.5, "v3": 2.0, "mu_rho": 2.0})
    return {"which": which, "eps": eps, "residuals": res,
            "slopes": {k: _slope(eps, v) for k, v in res.items()}, "expected": expected,
            "coeffs": co}


def mu_for_delta(sys: SystemSpec, c: float, lam, portrait: PhasePortrait, delta: float) -> float:
    """Level mu whose orbit has half-amplitude delta (harmonic side)."""
    from scipy.optimize import brentq

    def f(t):
        e = np.exp(t)
        return orbit_roots(sys, Params(portrait.mu_0 + e, lam, c), portrait).delta - delta

    gap = portrait.mu_s - portrait.mu_0
    t = brentq(f, np.log(gap) - 28.0, np.log(0.5 * gap), xtol=1e-12, maxiter=200)
    return portrait.mu_0 + np.exp(t)


def mu_for_rho(sys: SystemSpec, c: float, lam, portrait: PhasePortrait, rho: float) -> float:
    """Level mu whose orbit has the given rho (soliton side)."""
    from scipy.optimize import brentq

    def f(t):
        o = orbit_roots(sys, Params(portrait.mu_s - np.exp(t), lam, c), portrait)
        if o.rho is None:
            raise UsageError("v1 is unavailable at this level")
        return np.log(o.rho) - np.log(rho)

    gap = portrait.mu_s - portrait.mu_0
    t = brentq(f, np.log(gap) - 28.0, np.log(0.5 * gap), xtol=1e-12, maxiter=200)
    return portrait.mu_s - np.exp(t)
