"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(OverflowError):
    """A result would overflow binary64 (e.g. the inverse semigroup)."""


class IntegrationError(RuntimeError):
    """A time-stepping path diverged."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class FitError(ValueError):
    """Not enough usable points for a convergence-rate fit."""


class ConfigError(ValueError):
    """Malformed experiment configuration."""
