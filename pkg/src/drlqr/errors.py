"""Exception hierarchy shared across the package."""

from __future__ import annotations


class DrlqrError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(DrlqrError):
    """Invalid or unparseable configuration."""


class InstabilityError(DrlqrError):
    """A closed loop (or open loop) has spectral radius >= 1 - margin."""

    def __init__(self, message: str, rho: float | None = None):
        super().__init__(message)
        self.rho = rho


class InfeasibleMemberError(InstabilityError):
    """An ensemble member is destabilized by the current gain.

    Carries the offending member index so optimizers can account for the
    event rather than abort a whole experiment.
    """

    def __init__(self, message: str, index: int, rho: float | None = None):
        super().__init__(message, rho=rho)
        self.index = index


class SynthesisError(DrlqrError):
    """Riccati solve failed (divergence or singular input-weight block)."""


class AnnealingError(DrlqrError):
    """Discount annealing could not produce a stabilizing gain.

    ``history`` holds the gamma values reached before the failure so runs
    remain auditable.
    """

    def __init__(self, message: str, history: list[float] | None = None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
