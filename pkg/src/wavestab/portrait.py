"""Phase-portrait skeleton (saddle, center, conjugate point) and orbit roots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import (MuOutOfRange, NoCenter, NoConjugate, NoSaddle, PatternViolation,
                     RootBracketFailure)
from .model import Params, Profile, SystemSpec, profile

GRID_POINTS = 2048
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class PhasePortrait:
    v_s: float
    v_0: float
    v_sup: float
    mu_0: float
    mu_s: float
    c: float
    lam: tuple

    def as_dict(self) -> dict:
        return {"v_s": self.v_s, "v_0": self.v_0, "v_sup": self.v_sup,
                "mu_0": self.mu_0, "mu_s": self.mu_s, "c": self.c, "lambda": list(self.lam)}


@dataclass(frozen=True)
class OrbitData:
    v1: float | None
    v2: float
    v3: float
    rho: float | None
    delta: float
    m: float
    h_s: float


def shifted_level(prof: Profile, v, v_star: float, mu_star: float, mu: float):
    """W(v) - mu written around the critical point v_star (where W = mu_star).

    Uses W(v) - W(v*) = (v - v*)^2 W[v, v*, v*] + W'(v*)(v - v*), which keeps
    full relative accuracy for v near v_star.
    """
    d = np.asarray(v, dtype=float) - v_star
    return d * d * prof.W.dd(v, v_star, v_star) + prof.W(v_star, 1) * d + (mu_star - mu)


def _polish(fun, dfun, x, a, b, iters=30):
    """Newton steps that must stay inside [a, b] and reduce |fun|."""
    fx = abs(fun(x))
    for _ in range(iters):
        d = dfun(x)
        if d == 0.0 or fx == 0.0:
            break
        y = x - fun(x) / d
        if not (min(a, b) <= y <= max(a, b)):
            break
        fy = abs(fun(y))
        if fy >= fx:
            break
        x, fx = y, fy
    return x


def _solve(fun, dfun, a, b):
    fa, fb = fun(a), fun(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise RootBracketFailure(f"no sign change on [{a}, {b}]")
    scale = max(1.0, abs(a), abs(b))
    x = brentq(fun, a, b, xtol=2 * _EPS * scale, rtol=4 * _EPS, maxiter=500)
    return _polish(fun, dfun, x, a, b)


def critical_points(prof: Profile) -> list[float]:
    lo, hi = prof.sys.domain
    grid = np.linspace(lo, hi, GRID_POINTS)
    wv = prof.W(grid, 1)
    out = []
    dW = lambda v: float(prof.W(v, 1))
    d2W = lambda v: float(prof.W(v, 2))
    for i in range(GRID_POINTS - 1):
        if wv[i] == 0.0:
            out.append(float(grid[i]))
        elif wv[i] * wv[i + 1] < 0.0:
            out.append(float(_solve(dW, d2W, grid[i], grid[i + 1])))
    if wv[-1] == 0.0:
        out.append(float(grid[-1]))
    return out


def classify_portrait(sys: SystemSpec, c: float, lam) -> PhasePortrait:
    """Locate v_s < v_0 < v^s following the saddle/center/conjugate pattern."""
    prof = profile(sys, c, lam)
    crit = critical_points(prof)
    kinds = [float(prof.W(v, 2)) for v in crit]
    saddles = [v for v, k in zip(crit, kinds) if k < 0.0]
    centers = [v for v, k in zip(crit, kinds) if k > 0.0]
    if not saddles:
        raise NoSaddle("W has no nondegenerate local maximum in the domain")
    if not centers:
        raise NoCenter("W has no nondegenerate local minimum in the domain")
    pair = None
    for i in range(len(crit) - 1):
        if kinds[i] < 0.0 < kinds[i + 1]:
            pair = i
            break
    if pair is None:
        raise PatternViolation("no saddle immediately left of a center")
    v_s, v_0 = crit[pair], crit[pair + 1]
    mu_s, mu_0 = float(prof.W(v_s)), float(prof.W(v_0))
    if not mu_0 < mu_s:
        raise PatternViolation("center level not below saddle level")

    lo, hi = sys.domain
    grid = np.linspace(lo, hi, GRID_POINTS)
    right = grid[grid > v_0]
    F = lambda v: shifted_level(prof, v, v_s, mu_s, mu_s)
    vals = F(right)
    hit = np.nonzero(vals >= 0.0)[0]
    if hit.size == 0:
        if any(v > v_0 for v in crit):
            raise PatternViolation("another critical point precedes the conjugate point")
        raise NoConjugate("W never re-attains the saddle level right of the center")
    j = int(hit[0])
    right_end = float(right[j])
    if any(v_0 < v < right_end for v in crit):
        raise PatternViolation("a critical point interleaves before the conjugate point")
    left_end = float(right[j - 1]) if j > 0 else v_0
    v_sup = _solve(lambda v: float(F(v)), lambda v: float(prof.W(v, 1)), left_end, right_end)

    # sampled Table-1 sign pattern
    inner = np.linspace(v_s, v_0, 66)[1:-1]
    outer = np.linspace(v_0, v_sup, 66)[1:]
    if np.any(prof.W(inner, 1) >= 0.0) or np.any(prof.W(outer, 1) <= 0.0):
        raise PatternViolation("W_v sign pattern violated between critical points")
    return PhasePortrait(v_s=float(v_s), v_0=float(v_0), v_sup=float(v_sup), mu_0=mu_0,
                         mu_s=mu_s, c=float(c), lam=tuple(float(x) for x in np.atleast_1d(lam)))


def orbit_roots(sys: SystemSpec, params: Params, portrait: PhasePortrait) -> OrbitData:
    """Roots v1 < v_s < v2 < v_0 < v3 < v^s of Z(.; mu) = 0."""
    mu = params.mu
    pt = portrait
    if not pt.mu_0 < mu < pt.mu_s:
        raise MuOutOfRange(f"mu={mu} outside ({pt.mu_0}, {pt.mu_s})")
    prof = profile(sys, params.c, params.lam)
    dW = lambda v: float(prof.W(v, 1))
    near_center = (mu - pt.mu_0) <= (pt.mu_s - mu)

    def level(v_star, mu_star):
        return lambda v: float(shifted_level(prof, v, v_star, mu_star, mu))

    around_center = level(pt.v_0, pt.mu_0)
    around_saddle = level(pt.v_s, pt.mu_s)
    v2 = _solve(around_center if near_center else around_saddle, dW, pt.v_s, pt.v_0)
    v3 = _solve(around_center if near_center else around_saddle, dW, pt.v_0, pt.v_sup)

    lo = sys.domain[0]
    grid = np.linspace(lo, pt.v_s, GRID_POINTS // 2)[:-1][::-1]
    v1 = None
    prev = pt.v_s
    for x in grid:
        if around_saddle(x) < 0.0:
            v1 = _solve(around_saddle, dW, float(x), float(prev))
            break
        prev = x
    rho = (v2 - v1) / (v3 - v2) if v1 is not None else None
    return OrbitData(v1=v1, v2=v2, v3=v3, rho=rho, delta=0.5 * (v3 - v2),
                     m=0.5 * (v2 + v3), h_s=pt.v_sup - pt.v_s)
