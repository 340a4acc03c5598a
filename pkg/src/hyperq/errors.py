"""Exception hierarchy shared by all hyperq modules."""


class HyperqError(Exception):
    """Base class for every error raised by hyperq."""


class ConfigError(HyperqError, ValueError):
    """Invalid configuration, grid, or argument combination."""


class DomainError(HyperqError, ValueError):
    """Argument outside the domain of a function (e.g. x = 0 for the log basis)."""


class NoSingularity(HyperqError):
    """Raised when singularity times are requested in the linear regime (mu = 0)."""


class NumericsError(HyperqError):
    """A quadrature or transform failed to reach its tolerance."""


class NonDecayingTail(NumericsError):
    """Semi-infinite quadrature whose window contributions stopped shrinking.

    This is the divergence signal: callers that asked for a finite moment
    should switch to :func:`hyperq.observe.divergence_profile`.
    """

    def __init__(self, message, *, partial=None, x_reached=None):
        super().__init__(message)
        self.partial = partial
        self.x_reached = x_reached


class WindowError(HyperqError):
    """A log grid is too narrow: the reduced field does not vanish at its ends."""


class StabilityError(NumericsError):
    """Time stepper lost unitarity beyond the permitted drift."""


class DegenerateXi(HyperqError, ZeroDivisionError):
    """The closed form at a singularity time has xi = 0 (xi^-3 denominators).

    ``limit`` carries the finite xi -> 0 value of the bracket.
    """

    def __init__(self, message, *, limit=None):
        super().__init__(message)
        self.limit = limit


class FitError(HyperqError):
    """Least-squares fit cannot be formed (rank deficiency, non-positive data)."""
