"""Exception hierarchy shared by all qotplan modules."""


class QotPlanError(Exception):
    """Base class for errors raised by qotplan."""


class DomainError(QotPlanError, ValueError):
    """Input outside the mathematical domain of an operation."""


class QuadratureError(QotPlanError, ArithmeticError):
    """Numerical integration did not converge to the requested tolerance."""

    def __init__(self, message, coarse_db=None, fine_db=None, points_per_decade=None):
        super().__init__(message)
        self.coarse_db = coarse_db
        self.fine_db = fine_db
        self.points_per_decade = points_per_decade


class CacheMissError(QotPlanError, KeyError):
    """An SCI value was required but computation on miss is disabled."""


class ModelError(QotPlanError):
    """Learner training or inference failure."""


class ModelFormatError(ModelError):
    """A persisted model file is malformed or has an unsupported version."""


class TopologyError(QotPlanError, ValueError):
    """Malformed topology or demand input."""


class ConfigError(QotPlanError, ValueError):
    """Invalid configuration file or override."""
