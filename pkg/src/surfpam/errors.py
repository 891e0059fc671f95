"""Exception and warning types shared across the package."""


class SurfpamError(Exception):
    """Base class for all package errors."""


class CutLocus(SurfpamError):
    """Raised when a logarithm is requested at or beyond the cut-locus margin."""


class StepTooLarge(SurfpamError):
    """Raised when a finite-difference stencil leaves the injectivity ball."""


class ScaleTooLarge(SurfpamError):
    """Raised when a scaled test function would not fit inside the injectivity ball."""


class UnderResolved(SurfpamError):
    """Raised when a requested scale lies below the resolution of a truncated field."""


class ConfigError(SurfpamError):
    """Raised for invalid configuration values or violated exponent constraints."""


class NonContraction(SurfpamError):
    """Raised when the Picard map fails to contract.

    Attributes
    ----------
    factor : float
        The smallest measured contraction factor.
    diagnostics : dict
        Per-scaling measured factors and a suggestion for the next attempt.
    """

    def __init__(self, message, factor=float("nan"), diagnostics=None):
        super().__init__(message)
        self.factor = factor
        self.diagnostics = diagnostics or {}


class TruncationWarning(UserWarning):
    """Emitted when a spectral sum is evaluated below its resolved time window."""
