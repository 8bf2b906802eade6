"""Exception hierarchy for prolate spectrum computations."""

from typing import Any, Dict, Optional


class ProlateError(Exception):
    """Base class for every error raised by the package."""
    pass


class DomainError(ProlateError, ValueError):
    """Raised when an argument lies outside an operation's domain."""
    pass


class ValidityError(ProlateError, ValueError):
    """Raised when an approximation formula is undefined at the requested point."""

    def __init__(self, message: str, condition: str = "q < 1"):
        super().__init__(message)
        self.condition = condition


class ConvergenceError(ProlateError, RuntimeError):
    """Raised when an iterative method fails to converge."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BelowFloorError(ProlateError):
    """Raised when an eigenvalue falls below the resolvable floor of a tier."""

    def __init__(self, tier: str, value: float, floor: float, index: Optional[int] = None):
        where = f" (n={index})" if index is not None else ""
        super().__init__(
            f"below {tier} floor{where}: {value:.3e} < {floor:.1e}"
        )
        self.tier = tier
        self.value = value
        self.floor = floor
        self.index = index
