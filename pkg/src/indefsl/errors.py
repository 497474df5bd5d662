"""Exception types shared across modules."""


class IndefSLError(Exception):
    """Base class."""


class InvalidInputError(IndefSLError, ValueError):
    """Arguments violate a precondition."""


class DegenerateError(IndefSLError):
    """An induced metric or Gram matrix is (numerically) singular."""


class ConvergenceError(IndefSLError):
    """An iterative solve did not converge."""


class BlowUpError(IndefSLError):
    """A time integration produced non-finite or runaway values."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
