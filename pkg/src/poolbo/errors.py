"""Exception hierarchy shared across the package."""


class PoolboError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(PoolboError):
    """A pool file violates its declared on-disk format."""


class DataError(PoolboError):
    """File parsed, but the content violates a pool invariant."""


class SingularKernelError(PoolboError):
    """Cholesky factorization failed at the maximum jitter level."""

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class PoolExhaustedError(PoolboError):
    """No candidates remain to select from."""


class ConfigError(PoolboError):
    """Experiment configuration failed schema validation."""
