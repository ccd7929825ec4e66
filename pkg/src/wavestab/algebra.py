"""The impulse matrix S, orthogonality relations of the asymptotic frame, congruence bases."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import SingularBasis
from .model import SystemSpec


@dataclass(frozen=True)
class SMatrix:
    S: np.ndarray

    @property
    def size(self) -> int:
        return self.S.shape[0]


def b_inverse(sys: SystemSpec) -> np.ndarray:
    if sys.N == 1:
        return np.array([[1.0 / sys.b]])
    return np.array([[0.0, 1.0 / sys.b], [1.0 / sys.b, 0.0]])


def build_S(sys: SystemSpec) -> SMatrix:
    """S with X.S X / 2 = Q(U) - q for X = (1, U, q)."""
    n = sys.N + 2
    S = np.zeros((n, n))
    S[0, -1] = S[-1, 0] = -1.0
    S[1:-1, 1:-1] = b_inverse(sys)
    return SMatrix(S)


def verify_orthogonality(frame, S: SMatrix) -> dict:
    """Residuals of the ten algebraic relations satisfied by (V, W, Z, T)."""
    M = S.S
    V, W, Z, T = frame.V, frame.W, frame.Z, frame.T
    q = lambda x, y: float(x @ M @ y)
    res = {
        "VSV": q(V, V),
        "VSW": q(V, W),
        "VST": q(V, T),
        "VSZ+WSW": q(V, Z) + q(W, W),
        "TST": q(T, T),
        "TSZ": q(T, Z),
        "EV-1": float(V[0]) - 1.0,
        "EW": float(W[0]),
        "EZ": float(Z[0]),
        "ET": float(T[0]),
    }
    res = {k: abs(v) for k, v in res.items()}
    res["max"] = max(res.values())
    return res


def basis_P(frame, S: SMatrix, which: str = "harmonic") -> tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]]:
    """P = (E, S V, [S T,] S W) and the congruence H -> P^T H P.

    ``which`` is informational: the column ordering is the same in both limits.
    """
    M = S.S
    n = M.shape[0]
    E = np.zeros(n)
    E[0] = 1.0
    cols = [E, M @ frame.V]
    if n == 4:
        cols.append(M @ frame.T)
    cols.append(M @ frame.W)
    P = np.column_stack(cols)
    det = np.linalg.det(P)
    if not np.isfinite(det) or abs(det) < 1e-14:
        raise SingularBasis(f"congruence basis is singular ({which})")
    return P, lambda H: P.T @ np.asarray(H) @ P
