"""Exception types shared across the package."""


class PinlabError(Exception):
    """Base class for all package errors."""


class ConfigError(PinlabError):
    """A config file or parameter set is malformed; names the offending key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class NumericalFailure(PinlabError):
    """Two routes to the same quantity disagree beyond the stated tolerance."""

    def __init__(self, message, tolerance=None, observed=None):
        super().__init__(message)
        self.tolerance = tolerance
        self.observed = observed


class BudgetExceeded(PinlabError):
    """A table or box would exceed the memory budget; names (d, n_max)."""


class InstanceTooLarge(PinlabError):
    """An exact enumeration was requested beyond the instance budget."""


class RecurrentWalk(PinlabError):
    """A Green function or renewal law was requested in a recurrent dimension."""
