"""Exception hierarchy shared across the package."""


class TogesError(Exception):
    """Base class for every error raised by togeslab."""


class ConfigurationError(TogesError, ValueError):
    """Invalid names, parameters or kind/capability combinations."""


class DomainError(TogesError, ValueError):
    """An oracle was evaluated outside the open domain of the objective."""


class UnsupportedCapabilityError(TogesError, TypeError):
    """The objective lacks an oracle (grad, hvp, prox) the caller needs."""


class OracleInconsistencyError(TogesError, ArithmeticError):
    """Two routes to the same quantity disagree, or a prox left the domain."""


class InsufficientDataError(TogesError, ValueError):
    """Too few usable points for a fit."""


class OutOfRangeError(TogesError, ValueError):
    """A time was requested outside a trajectory's span."""


class IntegrationError(TogesError, RuntimeError):
    """The integrator gave up. ``partial`` holds what was computed so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class TruncatedTrajectoryError(IntegrationError):
    """``max_steps`` was exhausted before ``t_end``."""
