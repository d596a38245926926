"""Error types shared across the package.

Everything derives from ValueError so callers can catch broadly, but each
class marks a distinct failure contract: bad shapes, iterative
non-convergence, degenerate inputs (zero matrices, empty spectra), invalid
configuration, a fit whose restarts all diverged, and a variance estimate
too small to divide by.
"""


class SpectralOptError(ValueError):
    """Base class for all package errors."""


class ShapeError(SpectralOptError):
    """Dimensions are missing, mismatched, or empty."""


class ConvergenceError(SpectralOptError):
    """An iterative routine exhausted its sweep budget."""

    def __init__(self, message: str, sweeps: int):
        super().__init__(message)
        self.sweeps = sweeps


class DegenerateInputError(SpectralOptError):
    """Input carries no usable signal (zero matrix, empty spectrum, non-finite entries)."""


class ConfigurationError(SpectralOptError):
    """A configuration value violates its documented range or combination."""


class FitFailureError(SpectralOptError):
    """Every restart of a coefficient fit diverged."""


class DegenerateVarianceError(SpectralOptError):
    """A variance is zero or below the representable floor, so a ratio is undefined."""


class ExperimentError(RuntimeError):
    """An experiment's built-in assertion failed at runtime."""
