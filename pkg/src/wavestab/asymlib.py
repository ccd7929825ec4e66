"""Elementary asymptotics: root expansions near a minimum and log-series of three singular integrals.

For smooth g, f, h on [0, 1) the integrals

    G(rho) = int_0^1 g(x) dx / sqrt(x (x + rho))
    F(rho) = int_0^1 f(x) sqrt(x (x + rho)) dx
    H(rho) = int_0^1 h(x) dx / sqrt(x (x + rho)^3)

expand in powers of rho and rho ln rho.  Each expansion comes with a brute-force
numeric evaluator that removes the x = 0 singularity by x = rho sinh(u)^2 and,
for integrands with a declared 1/sqrt(1 - x) endpoint, the x = 1 one by x = 1 - s^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from math import comb, factorial
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import AssumptionViolation
from .model import Poly, Rational, SystemSpec, profile
from .quadrature import _gl, adaptive_gl

LN4 = np.log(4.0)
_QUAD_RTOL = 1e-13
_SMALL_X = 0.25


# ---------------------------------------------------------------- roots


@dataclass(frozen=True)
class RootExpansion:
    alpha: float
    beta: float
    gamma: float
    eta: float

    def z(self, eps, sign: int = 1):
        e = np.asarray(eps, dtype=float)
        r = np.sqrt(e)
        return sign * np.sqrt(2.0 * e / self.alpha) - self.beta * e / (3.0 * self.alpha**2) + sign * self.eta * e * r

    def dz(self, eps, sign: int = 1):
        e = np.asarray(eps, dtype=float)
        return (sign / np.sqrt(2.0 * self.alpha * e) - self.beta / (3.0 * self.alpha**2)
                + sign * 1.5 * self.eta * np.sqrt(e))


def root_coeffs(W) -> RootExpansion:
    """Coefficients for the two small zeros of W - eps; W(0) = W'(0) = 0 is the caller's job."""
    if isinstance(W, (Poly, Rational)):
        d = [float(x) for x in W.derivs(0.0, 4)]
    else:
        d = [float(x) for x in W]
    alpha, beta, gamma = d[2], d[3], d[4]
    if not alpha > 0.0:
        raise AssumptionViolation("W''(0) must be positive")
    eta = (5.0 / 3.0 * beta**2 - alpha * gamma) / (6.0 * alpha**3 * np.sqrt(2.0 * alpha))
    return RootExpansion(alpha, beta, gamma, eta)


def exact_roots(W: Poly | Rational, eps: float, rex: RootExpansion) -> tuple[float, float]:
    """Zeros of W - eps bracketed around the leading-order guess."""
    w = lambda z: float(W(z)) - eps
    out = []
    for sign in (-1, 1):
        guess = float(rex.z(eps, sign))
        lo, hi = sorted((0.0, 2.0 * guess))
        out.append(brentq(w, lo, hi, xtol=1e-300, rtol=1e-15))
    return out[0], out[1]


def root_ladder(W: Poly | Rational, eps_values: Sequence[float]) -> dict:
    """Errors of the truncated expansion (and its derivative) against exact roots.

    Exact derivatives come from the implicit function theorem, z'(eps) = 1 / W'(z).
    """
    rex = root_coeffs(W)
    err_z, err_dz = [], []
    for e in eps_values:
        zm, zp = exact_roots(W, e, rex)
        err_z.append(max(abs(zm - rex.z(e, -1)), abs(zp - rex.z(e, 1))))
        dzm, dzp = 1.0 / float(W(zm, 1)), 1.0 / float(W(zp, 1))
        err_dz.append(max(abs(dzm - rex.dz(e, -1)), abs(dzp - rex.dz(e, 1))))
    return {"eps": np.asarray(eps_values, float), "err_z": np.array(err_z),
            "err_dz": np.array(err_dz), "expansion": rex}


# ---------------------------------------------------------------- function handles


@dataclass(frozen=True)
class SmoothFn:
    """A function on [0, 1) with analytic derivatives up to order 3.

    ``sqrt_endpoint`` declares a 1/sqrt(1 - x) singularity at x = 1; ``regular``
    then evaluates s * g(1 - s^2) directly in s, so that 1 - x = s^2 is never
    formed by cancellation.
    """

    derivs: tuple
    sqrt_endpoint: bool = False
    name: str = "g"
    regular: Callable | None = None

    def at_s(self, s):
        s = np.asarray(s, dtype=float)
        if self.regular is not None:
            return self.regular(s)
        return s * self(1.0 - s * s)

    def __call__(self, x, k: int = 0):
        return self.derivs[k](np.asarray(x, dtype=float))

    def at0(self, k: int) -> float:
        return float(self.derivs[k](np.array(0.0)))

    @classmethod
    def polynomial(cls, coeffs, name: str = "poly") -> "SmoothFn":
        p = Poly(tuple(float(c) for c in coeffs))
        return cls(tuple((lambda x, k=k: p(x, k)) for k in range(4)), False, name)

    @classmethod
    def over_sqrt(cls, coeffs, name: str = "poly/sqrt(1-x)") -> "SmoothFn":
        """p(x) / sqrt(1 - x) with derivatives by Leibniz."""
        p = Poly(tuple(float(c) for c in coeffs))

        def d(x, k):
            x = np.asarray(x, dtype=float)
            total = 0.0
            for j in range(k + 1):
                # d^m (1-x)^(-1/2) = (1/2)(3/2)...((2m-1)/2) (1-x)^(-1/2-m)
                m = k - j
                c = np.prod([(2 * i - 1) / 2.0 for i in range(1, m + 1)]) if m else 1.0
                total = total + comb(k, j) * p(x, j) * c * (1.0 - x) ** (-0.5 - m)
            return total

        return cls(tuple((lambda x, k=k: d(x, k)) for k in range(4)), True, name,
                   regular=lambda s: p(1.0 - s * s))

    def scaled(self, s: float) -> "SmoothFn":
        reg = None if self.regular is None else (lambda t, r=self.regular: s * r(t))
        return SmoothFn(tuple((lambda x, f=f: s * f(x)) for f in self.derivs), self.sqrt_endpoint,
                        f"{s}*{self.name}", reg)

    def times_x_half(self) -> "SmoothFn":
        """x f(x) / 2, with (x f)^(k) = x f^(k) + k f^(k-1)."""
        d = self.derivs

        def make(k):
            if k == 0:
                return lambda x: 0.5 * x * d[0](x)
            return lambda x: 0.5 * (x * d[k](x) + k * d[k - 1](x))

        reg = None if self.regular is None else (lambda t, r=self.regular: 0.5 * (1.0 - t * t) * r(t))
        return SmoothFn(tuple(make(k) for k in range(4)), self.sqrt_endpoint, f"x*{self.name}/2", reg)


def taylor_quotient(g: SmoothFn, k: int, x) -> np.ndarray:
    """g_k(x) = (g(x) - sum_{j<k} g^(j)(0) x^j / j!) / x^k.

    Near 0 the integral form int_0^1 (1-s)^(k-1)/(k-1)! g^(k)(s x) ds avoids cancellation.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if k == 0:
        return g(x)
    out = np.empty_like(x)
    small = x < _SMALL_X
    if np.any(small):
        t, w = _gl(24)
        s = 0.5 * (t + 1.0)
        w = 0.5 * w * (1.0 - s) ** (k - 1) / factorial(k - 1)
        xs = x[small]
        out[small] = g(np.outer(xs, s), k) @ w
    big = ~small
    if np.any(big):
        xb = x[big]
        poly = sum(g.at0(j) * xb**j / factorial(j) for j in range(k))
        out[big] = (g(xb) - poly) / xb**k
    return out


def taylor_quotient_s(g: SmoothFn, k: int, s) -> np.ndarray:
    """s * g_k(1 - s^2), for the x = 1 - s^2 branch (x >= 1/2, no cancellation in x^k)."""
    s = np.asarray(s, dtype=float)
    x = 1.0 - s * s
    poly = sum(g.at0(j) * x**j / factorial(j) for j in range(k))
    return (g.at_s(s) - s * poly) / x**k


def integrate01(fun: Callable[[np.ndarray], np.ndarray], fun_s: Callable[[np.ndarray], np.ndarray] | None,
                sqrt_endpoint: bool) -> float:
    """int_0^1 fun, with ``fun_s(s) = s * fun(1 - s^2)`` used on [1/2, 1] for the endpoint class."""
    left, _ = adaptive_gl(fun, 0.0, 0.5, rtol=_QUAD_RTOL)
    if sqrt_endpoint:
        right, _ = adaptive_gl(lambda s: 2.0 * fun_s(s), 0.0, np.sqrt(0.5), rtol=_QUAD_RTOL)
    else:
        right, _ = adaptive_gl(fun, 0.5, 1.0, rtol=_QUAD_RTOL)
    return float(left + right)


# ---------------------------------------------------------------- log series


@dataclass(frozen=True)
class LogSeries:
    """pole / rho + sum_k (a_k rho^k ln rho + b_k rho^k)."""

    a: tuple
    b: tuple
    pole: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def K(self) -> int:
        return len(self.a) - 1

    def __call__(self, rho):
        r = np.asarray(rho, dtype=float)
        lr = np.log(r)
        out = self.pole / r
        for k, (ak, bk) in enumerate(zip(self.a, self.b)):
            out = out + r**k * (ak * lr + bk)
        return out

    def derivative(self) -> "LogSeries":
        """Term-by-term derivative: d0 = a0, c_k = k a_k, d_k = k b_k + a_k."""
        if self.pole != 0.0:
            raise ValueError("derivative of a series with a pole is not supported")
        a = tuple(k * self.a[k] for k in range(1, self.K + 1))
        b = tuple(k * self.b[k] + self.a[k] for k in range(1, self.K + 1))
        return LogSeries(a=a, b=b, pole=float(self.a[0]))


def G_expansion(g: SmoothFn) -> LogSeries:
    g0, g1, g2 = g.at0(0), g.at0(1), g.at0(2)
    I1, I2, I3 = (integrate01(lambda x, k=k: taylor_quotient(g, k, x),
                              lambda t, k=k: taylor_quotient_s(g, k, t), g.sqrt_endpoint)
                  for k in (1, 2, 3))
    a = (-g0, 0.5 * g1, -3.0 / 16.0 * g2)
    b = (I1 + g0 * LN4,
         0.5 * (g0 + (1.0 - LN4) * g1 - I2),
         (-3.0 * g0 - 6.0 * g1 + 0.5 * g2 * (-7.0 + 6.0 * LN4) + 6.0 * I3) / 16.0)
    return LogSeries(a=a, b=b, meta={"int_g1": I1, "int_g2": I2, "int_g3": I3})


def F_expansion(f: SmoothFn) -> LogSeries:
    """F' is G for x f / 2; integrating term by term gives the coefficients of F."""
    Gs = G_expansion(f.times_x_half())
    B0 = integrate01(lambda x: x * f(x), lambda t: (1.0 - t * t) * f.at_s(t), f.sqrt_endpoint)
    A, B = [0.0], [B0]
    for k in range(Gs.K + 1):
        Ak = Gs.a[k] / (k + 1)
        A.append(Ak)
        B.append((Gs.b[k] - Ak) / (k + 1))
    return LogSeries(a=tuple(A), b=tuple(B))


def H_expansion(h: SmoothFn) -> LogSeries:
    """H(rho) = d/drho G(rho) for g = -2h."""
    return G_expansion(h.scaled(-2.0)).derivative()


def _split(rho: float) -> float:
    return float(np.arcsinh(np.sqrt(0.5 / rho)))


def _numeric(kernel_u, _unused, weight, fn: SmoothFn, rho: float) -> float:
    """[0, 1/2] in u with x = rho sinh^2 u, then [1/2, 1] in x, or in s for the endpoint class.

    ``weight(x)`` is the kernel without fn, so the s-branch reads 2 fn.at_s(s) weight(1 - s^2).
    """
    left, _ = adaptive_gl(kernel_u, 0.0, _split(rho), rtol=_QUAD_RTOL)
    if fn.sqrt_endpoint:
        right, _ = adaptive_gl(lambda s: 2.0 * fn.at_s(s) * weight(1.0 - s * s), 0.0, np.sqrt(0.5),
                               rtol=_QUAD_RTOL)
    else:
        right, _ = adaptive_gl(lambda x: fn(x) * weight(x), 0.5, 1.0, rtol=_QUAD_RTOL)
    return float(left + right)


def G_numeric(g: SmoothFn, rho: float) -> float:
    return _numeric(lambda u: 2.0 * g(rho * np.sinh(u) ** 2), None,
                    lambda x: 1.0 / np.sqrt(x * (x + rho)), g, rho)


def F_numeric(f: SmoothFn, rho: float) -> float:
    return _numeric(lambda u: 2.0 * rho**2 * (np.sinh(u) * np.cosh(u)) ** 2 * f(rho * np.sinh(u) ** 2), None,
                    lambda x: np.sqrt(x * (x + rho)), f, rho)


def H_numeric(h: SmoothFn, rho: float) -> float:
    return _numeric(lambda u: 2.0 * h(rho * np.sinh(u) ** 2) / (rho * np.cosh(u) ** 2), None,
                    lambda x: 1.0 / np.sqrt(x * (x + rho) ** 3), h, rho)


def G_exact_unit(rho):
    """G for g = 1."""
    rho = np.asarray(rho, dtype=float)
    return np.log(2.0 + rho + 2.0 * np.sqrt(1.0 + rho)) - np.log(rho)


def H_exact_unit(rho):
    """H for h = 1."""
    rho = np.asarray(rho, dtype=float)
    return 2.0 / rho - 2.0 / (1.0 + rho + np.sqrt(1.0 + rho))


# ---------------------------------------------------------------- symmetry of R


def R_two_node(W: Poly | Rational, v: float, z: float) -> float:
    """R(v, v, z) from Taylor data at v."""
    d = z - v
    return float((W(z) - W(v) - W(v, 1) * d) / (d * d))


def symmetry_check_R(sys_or_W, triples, c: float | None = None, lam=None) -> float:
    """max |R(v, w, z) - R(permutation)| over the triples."""
    if isinstance(sys_or_W, SystemSpec):
        W = profile(sys_or_W, c, lam).W
    else:
        W = sys_or_W
    worst = 0.0
    for t in np.asarray(triples, dtype=float):
        ref = float(W.dd(*t))
        for p in permutations(t):
            worst = max(worst, abs(float(W.dd(*p)) - ref))
    return worst
