"""Exception types raised across the package."""


class HybridSimError(Exception):
    """Base class for all package errors."""


class RankDeficient(HybridSimError):
    pass


class NonConvergence(HybridSimError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InsufficientDepth(HybridSimError):
    pass


class DimensionMismatch(HybridSimError, ValueError):
    pass


class SingularCombiner(HybridSimError):
    pass


class ConfigError(HybridSimError, ValueError):
    pass
