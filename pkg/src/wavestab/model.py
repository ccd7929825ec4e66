"""System class, effective potential, slaving function and impulse density.

Parameters are always ordered ``p = (mu, lambda_1[, lambda_2], c)``.  The
profile equation reads ``kappa(v) v_x**2 / 2 + W(v; c, lambda) = mu`` and
``Z = mu - W``.

All v-dependent quantities (W, g, q) are rational functions with the common
denominator ``tau`` (identically 1 when N = 1), so derivatives and divided
differences are evaluated exactly, without numerical differentiation and
without cancellation at close or coincident nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ConfigError, DomainError, SingularSlaving, UsageError

_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class Poly:
    """Real polynomial, coefficients in ascending degree."""

    coeffs: tuple = (0.0,)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("Poly needs a non-empty 1-D coefficient list")
        if not np.all(np.isfinite(c)):
            raise ValueError("Poly coefficients must be finite")
        # trim trailing zeros but keep one coefficient
        n = c.size
        while n > 1 and c[n - 1] == 0.0:
            n -= 1
        object.__setattr__(self, "coeffs", tuple(float(x) for x in c[:n]))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs)

    def deriv(self, k: int = 1) -> "Poly":
        if k == 0:
            return self
        if k > self.degree:
            return Poly((0.0,))
        return Poly(P.polyder(self.array, k))

    def __call__(self, v, order: int = 0):
        return P.polyval(v, self.deriv(order).array) if order else P.polyval(v, self.array)

    def derivs(self, v, order: int) -> list:
        return [self(v, k) for k in range(order + 1)]

    def __add__(self, other: "Poly") -> "Poly":
        return Poly(P.polyadd(self.array, other.array))

    def __sub__(self, other: "Poly") -> "Poly":
        return Poly(P.polysub(self.array, other.array))

    def __mul__(self, other) -> "Poly":
        if isinstance(other, Poly):
            return Poly(P.polymul(self.array, other.array))
        return Poly(self.array * float(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Poly":
        return Poly(-self.array)

    def dd(self, *nodes):
        """Divided difference p[x0, ..., xk] by repeated synthetic division.

        Coincident nodes are allowed (confluent case) and the evaluation is as
        well conditioned as Horner's rule.
        """
        shape = np.broadcast(*[np.asarray(t) for t in nodes]).shape
        c = list(self.coeffs)
        for x in nodes[:-1]:
            n = len(c) - 1
            if n == 0:
                return np.zeros(shape) if shape else 0.0
            q = [None] * n
            q[n - 1] = c[n]
            for j in range(n - 1, 0, -1):
                q[j - 1] = c[j] + x * q[j]
            c = q
        x = nodes[-1]
        acc = c[-1]
        for a in reversed(c[:-1]):
            acc = acc * x + a
        if shape:
            return np.broadcast_to(np.asarray(acc, dtype=float), shape).copy()
        return float(acc)


def _const_one() -> Poly:
    return Poly((1.0,))


@dataclass(frozen=True)
class Rational:
    """num / den with exact derivatives and divided differences."""

    num: Poly
    den: Poly = field(default_factory=_const_one)

    def derivs(self, v, order: int) -> list:
        v = np.asarray(v, dtype=float)
        if self.den.degree == 0:
            d0 = self.den.coeffs[0]
            return [self.num(v, k) / d0 for k in range(order + 1)]
        tau = self.den.derivs(v, order)
        num = self.num.derivs(v, order)
        h = []
        for k in range(order + 1):
            acc = num[k]
            for j in range(1, k + 1):
                acc = acc - comb(k, j) * tau[j] * h[k - j]
            h.append(acc / tau[0])
        return h

    def __call__(self, v, order: int = 0):
        return self.derivs(v, order)[order]

    def dd(self, *nodes):
        """Divided difference via the Leibniz rule on num * (1/den)."""
        if self.den.degree == 0:
            return self.num.dd(*nodes) / self.den.coeffs[0]
        k = len(nodes) - 1
        pref = [self.num.dd(*nodes[: j + 1]) for j in range(k + 1)]
        suf = [None] * (k + 1)
        suf[k] = 1.0 / self.den(nodes[k])
        for i in range(k - 1, -1, -1):
            acc = 0.0
            for j in range(i + 1, k + 1):
                acc = acc + self.den.dd(*nodes[i : j + 1]) * suf[j]
            suf[i] = -acc / self.den(nodes[i])
        return sum(pref[j] * suf[j] for j in range(k + 1))


@dataclass(frozen=True)
class SystemSpec:
    """Hamiltonian model: N, b, f, kappa, tau (N=2 only) and a working domain."""

    N: int
    b: float
    f: Poly
    kappa: Poly
    tau: Poly | None = None
    domain: tuple = (-10.0, 10.0)

    def __post_init__(self):
        if self.N not in (1, 2):
            raise ConfigError("N must be 1 or 2")
        if not np.isfinite(self.b) or self.b == 0.0:
            raise ConfigError("b must be a nonzero real")
        if self.N == 2 and self.tau is None:
            raise ConfigError("tau is required when N=2")
        if self.N == 1 and self.tau is not None:
            object.__setattr__(self, "tau", None)
        lo, hi = (float(x) for x in self.domain)
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ConfigError("domain must be a finite interval lo < hi")
        object.__setattr__(self, "domain", (lo, hi))
        object.__setattr__(self, "b", float(self.b))
        grid = np.linspace(lo, hi, 1000)
        if np.min(self.kappa(grid)) <= 0.0:
            raise ConfigError("kappa must be positive on the domain")
        if self.N == 2 and np.min(self.tau(grid)) <= 0.0:
            raise ConfigError("tau must be positive on the domain")

    @property
    def n_params(self) -> int:
        return self.N + 2

    @property
    def tau_poly(self) -> Poly:
        return self.tau if self.tau is not None else Poly((1.0,))

    def check_domain(self, v) -> None:
        lo, hi = self.domain
        slack = _DOMAIN_SLACK * max(1.0, hi - lo)
        v = np.asarray(v)
        if np.any(v < lo - slack) or np.any(v > hi + slack) or not np.all(np.isfinite(v)):
            raise DomainError(f"evaluation point outside domain {self.domain}")

    @classmethod
    def from_json(cls, data: dict) -> "SystemSpec":
        try:
            N = int(data["N"])
            tau = data.get("tau")
            return cls(
                N=N,
                b=float(data["b"]),
                f=Poly(tuple(data["f"])),
                kappa=Poly(tuple(data["kappa"])),
                tau=Poly(tuple(tau)) if (tau is not None and N == 2) else None,
                domain=tuple(data["domain"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad system spec: {exc}") from exc

    def to_json(self) -> dict:
        d = {"N": self.N, "b": self.b, "f": list(self.f.coeffs),
             "kappa": list(self.kappa.coeffs), "domain": list(self.domain)}
        if self.tau is not None:
            d["tau"] = list(self.tau.coeffs)
        return d


@dataclass(frozen=True)
class Params:
    mu: float
    lam: tuple
    c: float

    def __post_init__(self):
        object.__setattr__(self, "lam", tuple(float(x) for x in np.atleast_1d(self.lam)))
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "c", float(self.c))

    def vector(self) -> np.ndarray:
        return np.array([self.mu, *self.lam, self.c])

    @classmethod
    def from_vector(cls, x) -> "Params":
        x = np.asarray(x, dtype=float)
        return cls(mu=x[0], lam=tuple(x[1:-1]), c=x[-1])


@dataclass(frozen=True)
class GradZ:
    V: np.ndarray
    Wv: np.ndarray
    Zvv: np.ndarray


@dataclass(frozen=True)
class Profile:
    """W, g, q as rational functions of v for frozen (c, lambda)."""

    sys: SystemSpec
    c: float
    lam: tuple
    W: Rational
    q: Rational
    g: Rational | None

    def grad_components(self, v, order: int = 0) -> list:
        """Rows of d^k/dv^k of grad Z = (1, v, [g,] q), k = 0..order."""
        v = np.asarray(v, dtype=float)
        one = np.ones_like(v)
        zero = np.zeros_like(v)
        qd = self.q.derivs(v, order)
        gd = self.g.derivs(v, order) if self.g is not None else None
        out = []
        for k in range(order + 1):
            first = one if k == 0 else zero
            second = v if k == 0 else (one if k == 1 else zero)
            row = [first, second]
            if gd is not None:
                row.append(gd[k])
            row.append(qd[k])
            out.append(np.array(row))
        return out


def profile(sys: SystemSpec, c: float, lam: Sequence[float]) -> Profile:
    lam = tuple(float(x) for x in np.atleast_1d(lam))
    if len(lam) != sys.N:
        raise UsageError(f"lambda must have length {sys.N}")
    b = sys.b
    if sys.N == 1:
        W = Rational(-sys.f - Poly((0.0, lam[0], 0.5 * c / b)))
        q = Rational(Poly((0.0, 0.0, 0.5 / b)))
        return Profile(sys, float(c), lam, W, q, None)
    tau = sys.tau
    ell = Poly((-lam[1], -c / b))  # tau * g
    A = -sys.f - Poly((0.0, lam[0]))
    W = Rational(A * tau + 0.5 * (ell * ell), tau)
    g = Rational(ell, tau)
    q = Rational(Poly((0.0, 1.0 / b)) * ell, tau)
    return Profile(sys, float(c), lam, W, q, g)


def _check_tau(sys: SystemSpec, v) -> None:
    if sys.N == 2 and np.any(sys.tau(np.asarray(v, dtype=float)) == 0.0):
        raise SingularSlaving("tau vanishes at the evaluation point")


def eval_potential(sys: SystemSpec, v, c: float, lam, order: int = 0) -> list:
    """[W, W_v, ..., d^order W] at v, analytically."""
    if not 0 <= order <= 4:
        raise UsageError("order must be in 0..4")
    sys.check_domain(v)
    _check_tau(sys, v)
    return profile(sys, c, lam).W.derivs(v, order)


def eval_g(sys: SystemSpec, v, c: float, lambda2: float, order: int = 0) -> list:
    if sys.N != 2:
        raise UsageError("g is only defined for N=2")
    if not 0 <= order <= 2:
        raise UsageError("order must be in 0..2")
    sys.check_domain(v)
    _check_tau(sys, v)
    return profile(sys, c, (0.0, lambda2)).g.derivs(v, order)


def eval_q(sys: SystemSpec, v, c: float, lambda2: float | None = None, order: int = 0) -> list:
    if not 0 <= order <= 2:
        raise UsageError("order must be in 0..2")
    sys.check_domain(v)
    if sys.N == 1:
        return profile(sys, c, (0.0,)).q.derivs(v, order)
    _check_tau(sys, v)
    return profile(sys, c, (0.0, lambda2)).q.derivs(v, order)


def grad_Z(sys: SystemSpec, v: float, c: float, lam) -> GradZ:
    sys.check_domain(v)
    _check_tau(sys, v)
    rows = profile(sys, c, lam).grad_components(float(v), 2)
    return GradZ(*(np.asarray(r, dtype=float) for r in rows))


def T_vector(sys: SystemSpec, v: float) -> np.ndarray:
    sys.check_domain(v)
    if sys.N == 1:
        return np.zeros(3)
    _check_tau(sys, v)
    return np.array([0.0, 0.0, 1.0, v / sys.b]) / np.sqrt(sys.tau(v))


def hess_Z_params(sys: SystemSpec, v: float, c: float, lam) -> np.ndarray:
    """Parameter Hessian of Z at fixed v (only the (lambda_2, c) block is nonzero)."""
    n = sys.n_params
    H = np.zeros((n, n))
    if sys.N == 1:
        return H
    tau = sys.tau(v)
    b = sys.b
    g_l2 = -1.0 / tau
    g_c = -v / (b * tau)
    H[2, 2] = g_l2
    H[2, 3] = H[3, 2] = g_c
    H[3, 3] = v * g_c / b
    return H


def params_for_state(sys: SystemSpec, v_star: float, u_star: float | None, c: float) -> Params:
    """Parameters making (v*, u*) a critical point of the profile system."""
    sys.check_domain(v_star)
    b = sys.b
    fp = sys.f(v_star, 1)
    if sys.N == 1:
        lam = (-fp - (c / b) * v_star,)
    else:
        if u_star is None:
            raise UsageError("u_star is required when N=2")
        tau = sys.tau(v_star)
        taup = sys.tau(v_star, 1)
        lam2 = -tau * u_star - (c / b) * v_star
        lam1 = -fp - 0.5 * taup * u_star**2 - (c / b) * u_star
        lam = (lam1, lam2)
    mu = profile(sys, c, lam).W(v_star)
    return Params(mu=float(mu), lam=lam, c=c)


def state_u(prof: Profile, v: float) -> np.ndarray:
    """U(v) = (v,) or (v, g(v))."""
    if prof.g is None:
        return np.array([v])
    return np.array([v, prof.g(v)])
