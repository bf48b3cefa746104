"""Exception types raised by conekit."""


class ConeKitError(Exception):
    """Base class for all conekit errors."""


class DimensionError(ConeKitError, ValueError):
    """A point or matrix does not match the cone dimension."""


class NonFiniteError(ConeKitError, ValueError):
    """A point has NaN or infinite coordinates."""


class ConstructionError(ConeKitError, ValueError):
    """A cone model could not be built (singular matrix, bad dimension)."""


class OutsideConeError(ConeKitError, ValueError):
    """A point required to lie in the open cone does not."""


class RejectionBudgetExhausted(ConeKitError, RuntimeError):
    """A rejection sampler ran out of attempts; the geometry is degenerate."""


class StencilError(ConeKitError, ValueError):
    """A finite-difference stencil would leave the cone."""


class ConvergenceError(ConeKitError, RuntimeError):
    """An iterative solver did not converge; ``last`` holds the final iterate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class IntegrabilityError(ConeKitError, ValueError):
    """Declared decay or exponents make an integral divergent."""


class ConfigError(ConeKitError, ValueError):
    """A run configuration is invalid."""
