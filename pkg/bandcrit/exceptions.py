"""
Error kinds raised across bandcrit.

Each one subclasses the builtin that would otherwise be raised for the
same situation, so callers catching ValueError / RuntimeError keep working.
"""


class DomainError(ValueError):
    """
    Argument outside the domain where a quantity is defined.
    """
    pass


class ConfigurationError(ValueError):
    """
    Invalid or inconsistent configuration value.
    """
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class PreconditionError(ValueError):
    """
    Hypothesis of a checked statement does not hold.

    The attribute ``index`` carries the number of the failed hypothesis,
    when there is one.
    """
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class AccuracyError(RuntimeError):
    """
    Discretization failed its self-consistency (doubling) test.
    """
    pass


class EstimationError(RuntimeError):
    """
    No usable Monte Carlo samples remained.
    """
    pass


class ConventionError(RuntimeError):
    """
    Numerical certificate of a measure or matrix convention failed.
    """
    pass
