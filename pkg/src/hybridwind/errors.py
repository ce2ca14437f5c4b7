"""Exception types shared across the package."""


class HybridWindError(Exception):
    """Base class for all package errors."""


class DomainError(HybridWindError, ValueError):
    """An argument lies outside the physical domain of an operation."""


class ConfigurationError(HybridWindError, ValueError):
    """Inconsistent or unknown configuration."""


class ResolutionError(HybridWindError, ValueError):
    """A grid or series is too coarse/short for the requested analysis."""


class ConvergenceError(HybridWindError, RuntimeError):
    """Iterative search failed; ``history`` holds the bracketing steps."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)
