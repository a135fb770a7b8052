"""Shared exception and warning types."""


class MzkError(Exception):
    """Base class for package errors."""


class InvalidFieldError(MzkError):
    """Construction with non-finite samples, wrong shape, or bad grid parameters."""


class GridMismatchError(MzkError):
    """Operands live on different grids."""


class DomainError(MzkError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateStateError(MzkError):
    """State with zero energy seminorm where a positive one is required."""


class SolverFailure(MzkError):
    """Iteration did not converge; carries residual diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class FitFailure(MzkError):
    """Rate fit rejected: too few samples, non-increasing tail, or divergence."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class AccuracyError(MzkError):
    """A conservation or drift bound was violated during stepping."""


class BlowUpReached(MzkError):
    """Integration stopped: spectral band filled up or samples left float range.

    Carries the last valid state and its time.
    """

    def __init__(self, message, state=None, t=None):
        super().__init__(message)
        self.state = state
        self.t = t


class ConfigError(MzkError):
    """Config text rejected; carries the offending line number when known."""

    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class ResolutionWarning(UserWarning):
    """Requested structure sits near or below the grid scale."""


class BoundaryMassWarning(UserWarning):
    """Significant field mass within L/4 of the box edge; periodic images interact."""
