"""Exception hierarchy shared by all dilframe modules."""

from typing import Any


class DilframeError(Exception):
    """Base class for every error raised by dilframe."""


class DimensionError(DilframeError):
    """Group specs, vectors or grids of incompatible dimension."""


class DomainError(DilframeError):
    """Argument outside the domain of an operation (e.g. ξ in the orbit complement)."""


class DivergenceError(DilframeError):
    """An integral whose tail estimate does not converge."""


class AccuracyError(DilframeError):
    """Quadrature or refinement that did not reach its tolerance."""

    def __init__(self, message: str, partial: float, error: float) -> None:
        super().__init__(message)
        # Best value reached before giving up
        self.partial = partial
        # Error estimate attached to the partial value
        self.error = error

    def __reduce__(self) -> tuple[Any, ...]:
        # Keeps the extra fields when crossing a process-pool boundary
        return (type(self), (str(self), self.partial, self.error))


class ConditionError(DilframeError):
    """A sufficient condition of an estimate is violated."""

    def __init__(self, message: str, required: int) -> None:
        super().__init__(message)
        # Smallest parameter value for which the condition holds
        self.required = required

    def __reduce__(self) -> tuple[Any, ...]:
        return (type(self), (str(self), self.required))


class ResolutionError(DilframeError):
    """Sampling grid too coarse (or padding too small) for the requested operation."""


class ContractError(DilframeError):
    """Caller skipped a verification step that the operation depends on."""


class EmptySetError(DilframeError):
    """A sampling set or index range with no elements."""


class IllConditionedFrameError(DilframeError):
    """Iterative frame inversion stagnated."""

    def __init__(self, message: str, partial: Any, residual: float) -> None:
        super().__init__(message)
        # Last iterate of the solver
        self.partial = partial
        # Relative residual of the last iterate
        self.residual = residual

    def __reduce__(self) -> tuple[Any, ...]:
        return (type(self), (str(self), self.partial, self.residual))


class ConfigError(DilframeError):
    """Configuration schema violation; the message starts with the dotted field path."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field
        self.detail = message

    def __reduce__(self) -> tuple[Any, ...]:
        return (type(self), (self.field, self.detail))


class FormatError(DilframeError):
    """A file that is not a valid dilframe container, sampling set or coefficient file."""
