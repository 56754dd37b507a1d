"""Exception types shared across the laboratory."""


class RegulabError(Exception):
    """Base class for all package errors."""


class InputError(RegulabError):
    """Malformed numerical input (non-finite entries, bad shapes)."""


class ConfigurationError(RegulabError):
    """Invalid catalog tag, parameters, or experiment configuration."""


class GridError(RegulabError):
    """Grid construction failed (empty interior, spacing too coarse)."""


class UnderDeterminedError(RegulabError):
    """Fewer samples than unknown coefficients in a pointwise fit."""


class NonConvergenceError(RegulabError):
    """Iterative solve exceeded its iteration budget.

    Carries the final sup-norm residual in ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InsufficientScalesError(RegulabError):
    """Fewer than three trusted dyadic scales available for a trace."""
