"""Spectra of constant states and the co-periodic threshold period."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolation, UsageError
from .model import SystemSpec, profile

KERNEL_RTOL = 1e-10
MAX_MODE = 64


def _state(sys: SystemSpec, Ustar) -> tuple[float, float]:
    U = np.atleast_1d(np.asarray(Ustar, dtype=float))
    if U.size != sys.N:
        raise UsageError(f"state must have {sys.N} components")
    sys.check_domain(U[0])
    return float(U[0]), (float(U[1]) if sys.N == 2 else 0.0)


def _blocks(sys: SystemSpec, v: float, u: float, c: float):
    """Entries (p, m, t) of the symbols: p(xi) = f'' + kappa xi^2 [+ tau'' u^2 / 2], m = c/b [+ tau' u], t = tau."""
    f2 = float(sys.f(v, 2))
    kap = float(sys.kappa(v))
    if sys.N == 1:
        return f2, kap, c / sys.b, 1.0
    t0, t1, t2 = (float(x) for x in sys.tau.derivs(v, 2))
    return f2 + 0.5 * t2 * u * u, kap, c / sys.b + t1 * u, t0


def A_symbol(sys: SystemSpec, Ustar, xi: float, c: float) -> np.ndarray:
    v, u = _state(sys, Ustar)
    p0, kap, m, t = _blocks(sys, v, u, c)
    if sys.N == 1:
        return np.array([[p0 + m + kap * xi * xi]])
    return np.array([[m, t], [p0 + kap * xi * xi, m]])


def Sigma_star(sys: SystemSpec, Ustar, xi: float, c: float) -> np.ndarray:
    """Symmetric symbol of the second variation at a constant state."""
    v, u = _state(sys, Ustar)
    p0, kap, m, t = _blocks(sys, v, u, c)
    if sys.N == 1:
        return np.array([[p0 + m + kap * xi * xi]])
    return np.array([[p0 + kap * xi * xi, m], [m, t]])


def dispersion_relation(sys: SystemSpec, Ustar, xi: float, c: float = 0.0) -> np.ndarray:
    """Values z with e^{z t + i xi x} solving the linearization; z = i xi b sigma for N = 2."""
    A = A_symbol(sys, Ustar, xi, c)
    if sys.N == 1:
        return np.array([1j * xi * A[0, 0]])
    sig = np.linalg.eigvals(A.astype(complex))
    return 1j * xi * sys.b * np.sort_complex(sig)


def is_hyperbolic(sys: SystemSpec, Ustar) -> bool:
    """Real characteristic speeds of the dispersionless system (always true for N = 1)."""
    if sys.N == 1:
        return True
    v, u = _state(sys, Ustar)
    p0, _, _, t = _blocks(sys, v, u, 0.0)
    return p0 * t >= 0.0


def W_vv_at(sys: SystemSpec, Ustar, c: float) -> float:
    """Second derivative of the profile potential at a critical state, from the symbol."""
    v, u = _state(sys, Ustar)
    p0, _, m, t = _blocks(sys, v, u, c)
    if sys.N == 1:
        return -(p0 + m)
    return -(p0 - m * m / t)


@dataclass(frozen=True)
class ConstantStateReport:
    hyperbolic: bool
    spectrally_stable_localized: bool
    Xi_star: float | None
    kernel_dim_at_Xi_star: int

    def coperiodic_stable(self, Xi: float) -> bool:
        return self.Xi_star is not None and Xi <= self.Xi_star


def mode_nullity(sys: SystemSpec, Ustar, c: float, Xi: float, max_mode: int = MAX_MODE) -> tuple[int, float]:
    """Total nullity of Sigma*(2 pi l / Xi) over 0 < |l| <= max_mode, and the least eigenvalue seen."""
    dim = 0
    lowest = np.inf
    for l in range(1, max_mode + 1):
        ev = np.linalg.eigvalsh(Sigma_star(sys, Ustar, 2 * np.pi * l / Xi, c))
        scale = max(1.0, np.max(np.abs(ev)))
        dim += 2 * int(np.sum(np.abs(ev) <= KERNEL_RTOL * scale))  # modes l and -l
        lowest = min(lowest, float(ev[0]))
    return dim, lowest


def coperiodic_threshold(sys: SystemSpec, Ustar, c: float, lam=None) -> ConstantStateReport:
    """Xi* = 2 pi sqrt(kappa / W_vv); periodic perturbations of period Xi are nonnegative iff Xi <= Xi*."""
    v, _ = _state(sys, Ustar)
    Wvv = W_vv_at(sys, Ustar, c)
    if lam is not None:
        prof = profile(sys, c, lam)
        Wv = float(prof.W(v, 1))
        if abs(Wv) > 1e-8 * max(1.0, abs(Wvv)):
            raise AssumptionViolation("state is not critical for the given (c, lambda)")
    hyp = is_hyperbolic(sys, Ustar)
    if Wvv <= 0.0:
        return ConstantStateReport(hyp, hyp, None, 0)
    Xi_star = 2.0 * np.pi * np.sqrt(float(sys.kappa(v)) / Wvv)
    kdim, _ = mode_nullity(sys, Ustar, c, Xi_star)
    return ConstantStateReport(hyp, hyp, float(Xi_star), kdim)
