"""Exception types shared across the package."""


class NlspectraError(Exception):
    """Base class for all package-specific errors."""


class InvalidDimensionError(NlspectraError, ValueError):
    """A matrix or vector dimension is out of range for the operation."""


class InvalidParameterError(NlspectraError, ValueError):
    """A model, nonlinearity, or config parameter violates its constraints."""


class SamplingError(NlspectraError, RuntimeError):
    """A sampler could not produce a valid draw (e.g. degenerate signal)."""


class AsymmetricMatrixError(NlspectraError, ValueError):
    """An input matrix exceeded the symmetry tolerance."""


class NonConvergenceError(NlspectraError, RuntimeError):
    """An iterative solver hit its iteration cap; carries the last residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class SingularArgumentError(NlspectraError, ValueError):
    """An expectation was requested at a point where the integrand is unbounded."""


class BracketError(NlspectraError, RuntimeError):
    """Root bracketing failed; carries the last bracket tried."""

    def __init__(self, message: str, bracket: tuple[float, float] | None = None):
        super().__init__(message)
        self.bracket = bracket


class NumericalError(NlspectraError, RuntimeError):
    """A numerical evaluation produced non-finite values."""
