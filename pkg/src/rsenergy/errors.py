"""Exceptions shared across the solver modules."""


class InfeasibleDeadlineError(RuntimeError):
    """No admissible point meets the completion deadline."""

    def __init__(self, message, users=None):
        super().__init__(message)
        self.users = tuple(users) if users is not None else ()


class DegenerateIterateError(RuntimeError):
    """An expansion point makes a surrogate constraint undefined."""


class InfeasibleStartError(RuntimeError):
    """A solver was handed a start point outside the (strict) feasible set."""
