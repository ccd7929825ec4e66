"""Action Hessian, negative signature and the co-periodic stability verdict."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import PerturbationLeavesWindow, WavestabError
from .model import Params, SystemSpec, profile
from .portrait import PhasePortrait, classify_portrait, orbit_roots
from .quadrature import action_gradient

STABLE = "CoPeriodicOrbitallyStable"
UNSTABLE = "SpectrallyUnstable"
INCONCLUSIVE = "Inconclusive"
DEGENERATE = "Degenerate"

WINDOW_FRACTION = 0.05
ASYMMETRY_TOL = 1e-4
MAX_RETRIES = 5


@dataclass(frozen=True)
class SignatureResult:
    n: int
    degenerate: bool
    eigenvalues: np.ndarray
    tol: float
    minors: np.ndarray
    sylvester_n: int | None
    n_eig: int = 0
    schur_eigenvalues: np.ndarray | None = None

    @property
    def consistent(self) -> bool:
        return self.n == self.n_eig and (self.sylvester_n is None or self.sylvester_n == self.n)


@dataclass(frozen=True)
class HessianReport:
    H: np.ndarray
    d2mu: float
    det: float
    signature: int
    eigenvalues: np.ndarray
    step_used: np.ndarray
    verdict: str
    asymmetry: float = 0.0
    sylvester: int | None = None
    theta: float | None = None
    grad: np.ndarray | None = field(default=None)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("WAVESTAB_THREADS", "1")))
    except ValueError:
        return 1


def _grad_at(sys: SystemSpec, x: np.ndarray) -> np.ndarray:
    p = Params.from_vector(x)
    pt = classify_portrait(sys, p.c, p.lam)
    return action_gradient(sys, p, orbit_roots(sys, p, pt)).grad


def default_steps(sys: SystemSpec, params: Params, portrait: PhasePortrait,
                  fraction: float = WINDOW_FRACTION) -> np.ndarray:
    """h_i = max(1e-5, 1e-4 |p_i|), shrunk so the perturbed mu stays inside its window.

    To first order, moving p_i by h changes mu - mu_0 by h V0_i and mu_s - mu by
    -h Vs_i, with V0, Vs the values of grad Z at the center and at the saddle.
    """
    x = params.vector()
    h = np.maximum(1e-5, 1e-4 * np.abs(x))
    prof = profile(sys, params.c, params.lam)
    V0 = prof.grad_components(portrait.v_0)[0]
    Vs = prof.grad_components(portrait.v_s)[0]
    gap0 = params.mu - portrait.mu_0
    gaps = portrait.mu_s - params.mu
    with np.errstate(divide="ignore"):
        lim0 = np.where(np.abs(V0) > 0, fraction * gap0 / np.abs(V0), np.inf)
        lims = np.where(np.abs(Vs) > 0, fraction * gaps / np.abs(Vs), np.inf)
    return np.minimum(h, np.minimum(lim0, lims))


def hessian_action(sys: SystemSpec, params: Params, portrait: PhasePortrait | None = None,
                   steps: np.ndarray | None = None, details: bool = False):
    """Central differences of grad Theta, symmetrized, with step halving on asymmetry."""
    if portrait is None:
        portrait = classify_portrait(sys, params.c, params.lam)
    x0 = params.vector()
    n = x0.size
    h = default_steps(sys, params, portrait) if steps is None else np.asarray(steps, float)
    last = None
    for _ in range(MAX_RETRIES + 1):
        pts = []
        for i in range(n):
            for sgn in (1.0, -1.0):
                x = x0.copy()
                x[i] += sgn * h[i]
                pts.append(x)
        try:
            workers = _threads()
            if workers > 1:
                with ThreadPoolExecutor(workers) as ex:
                    grads = list(ex.map(lambda x: _grad_at(sys, x), pts))
            else:
                grads = [_grad_at(sys, x) for x in pts]
        except WavestabError as exc:
            last = exc
            h = 0.5 * h
            continue
        A = np.empty((n, n))
        for i in range(n):
            A[:, i] = (grads[2 * i] - grads[2 * i + 1]) / (2.0 * h[i])
        norm = np.linalg.norm(A, 2)
        asym = np.linalg.norm(A - A.T, 2) / norm if norm > 0 else 0.0
        H = 0.5 * (A + A.T)
        if asym < ASYMMETRY_TOL:
            return (H, h, asym) if details else H
        last = (H, h, asym)
        h = 0.5 * h
    if isinstance(last, tuple):
        return last if details else last[0]
    raise PerturbationLeavesWindow(f"finite-difference stencil cannot stay in the window: {last}")


def negative_signature(H: np.ndarray, tol_eig: float | None = None) -> SignatureResult:
    """Negative inertia index of a symmetric matrix.

    Near the soliton limit the (mu, mu) entry blows up like rho^-2 while the
    other eigenvalues stay O(1), so a tolerance relative to the full spectrum
    would swamp them.  When the leading entry is clearly nonzero the count uses
    inertia additivity, n(H) = [H_00 < 0] + n(H / H_00), with the relative
    tolerance applied to the Schur complement.  The plain eigenvalue count and
    Sylvester's rule are kept as cross-checks.
    """
    H = 0.5 * (np.asarray(H, float) + np.asarray(H, float).T)
    ev = np.linalg.eigvalsh(H)
    norm = np.max(np.abs(ev)) if ev.size else 0.0
    rel = 1e-7 if tol_eig is None else float(tol_eig)
    tol = rel * norm
    n_eig = int(np.sum(ev < -tol))
    k = H.shape[0]
    schur_ev = None
    if k > 1 and abs(H[0, 0]) > tol:
        h = H[1:, 0]
        C = H[1:, 1:] - np.outer(h, h) / H[0, 0]
        schur_ev = np.linalg.eigvalsh(0.5 * (C + C.T))
        ctol = rel * max(np.max(np.abs(schur_ev)), 1e-300)
        n = int(H[0, 0] < 0) + int(np.sum(schur_ev < -ctol))
        degenerate = bool(np.any(np.abs(schur_ev) <= ctol))
    else:
        n = n_eig
        degenerate = bool(np.any(np.abs(ev) <= tol))
    minors = np.array([np.linalg.det(H[: j + 1, : j + 1]) for j in range(k)])
    scale = max(norm, 1e-300)
    usable = all(abs(m) > tol * scale**j for j, m in enumerate(minors))
    syl = None
    if usable:
        seq = np.concatenate([[1.0], np.sign(minors)])
        syl = int(np.sum(seq[1:] * seq[:-1] < 0))
    return SignatureResult(n=n, degenerate=degenerate, eigenvalues=ev, tol=tol, minors=minors,
                           sylvester_n=syl, n_eig=n_eig, schur_eigenvalues=schur_ev)


def verdict_from(signature: int, N: int, degenerate: bool) -> str:
    if degenerate:
        return DEGENERATE
    k = signature - N
    if k == 0:
        return STABLE
    if k % 2 != 0:
        return UNSTABLE
    return INCONCLUSIVE


def stability_verdict(sys: SystemSpec, params: Params, portrait: PhasePortrait | None = None) -> HessianReport:
    if portrait is None:
        portrait = classify_portrait(sys, params.c, params.lam)
    orbit = orbit_roots(sys, params, portrait)
    ag = action_gradient(sys, params, orbit)
    H, h, asym = hessian_action(sys, params, portrait, details=True)
    sig = negative_signature(H)
    d2mu = float(H[0, 0])
    degenerate = sig.degenerate or abs(d2mu) <= sig.tol
    return HessianReport(H=H, d2mu=d2mu, det=float(np.linalg.det(H)), signature=sig.n,
                         eigenvalues=sig.eigenvalues, step_used=h,
                         verdict=verdict_from(sig.n, sys.N, degenerate), asymmetry=asym,
                         sylvester=sig.sylvester_n, theta=ag.theta, grad=ag.grad)
