"""Exception hierarchy. Every error carries a short machine-readable ``reason``."""

from __future__ import annotations


class WavestabError(Exception):
    """Base class; ``reason`` is the class name unless overridden."""

    def __init__(self, message: str = "", reason: str | None = None):
        super().__init__(message or type(self).__name__)
        self.reason = reason or type(self).__name__


class ConfigError(WavestabError):
    pass


class UsageError(WavestabError):
    pass


class DomainError(WavestabError):
    pass


class SingularSlaving(WavestabError):
    pass


class NoSaddle(WavestabError):
    pass


class NoCenter(WavestabError):
    pass


class NoConjugate(WavestabError):
    pass


class PatternViolation(WavestabError):
    pass


class MuOutOfRange(WavestabError):
    pass


class RootBracketFailure(WavestabError):
    pass


class AssumptionViolation(WavestabError):
    pass


class PerturbationLeavesWindow(WavestabError):
    pass


class DegenerateAlpha0(WavestabError):
    pass


class DegenerateSlaving(WavestabError):
    pass


class SingularBasis(WavestabError):
    pass


class PortraitLost(WavestabError):
    pass
