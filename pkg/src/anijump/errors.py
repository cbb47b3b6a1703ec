"""Exception types shared across the package.

Plain ValueError is used for bad arguments (out-of-range radii, points outside
the domain, malformed shapes); the classes below mark failures that callers
are expected to branch on.
"""


class ValidationError(ValueError):
    """A certification step failed (scaling exponents out of range, non-monotone table)."""


class NumericalError(RuntimeError):
    """A quadrature or grid could not reach the requested tolerance."""


class RegimeError(RuntimeError):
    """Data rejected the model regime a fit assumes (e.g. non-exponential decay)."""


class NoBoundaryError(ValueError):
    """A boundary quantity was requested for a domain without a boundary."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""
