"""Co-periodic stability of periodic traveling waves in Hamiltonian dispersive systems."""

from .errors import WavestabError
from .model import Params, Poly, Rational, SystemSpec, params_for_state, profile
from .portrait import PhasePortrait, classify_portrait, orbit_roots
from .quadrature import action_gradient, boussinesq_momentum, momentum_derivatives
from .stability import (DEGENERATE, INCONCLUSIVE, STABLE, UNSTABLE, hessian_action,
                        negative_signature, stability_verdict)

__all__ = [
    "WavestabError", "Params", "Poly", "Rational", "SystemSpec", "params_for_state", "profile",
    "PhasePortrait", "classify_portrait", "orbit_roots",
    "action_gradient", "boussinesq_momentum", "momentum_derivatives",
    "STABLE", "UNSTABLE", "INCONCLUSIVE", "DEGENERATE",
    "hessian_action", "negative_signature", "stability_verdict",
]
__version__ = "0.1.0"
