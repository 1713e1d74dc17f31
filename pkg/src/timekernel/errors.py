"""Exception hierarchy shared by the solvers and the command-line front end."""

from __future__ import annotations


class TimeKernelError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(TimeKernelError, ValueError):
    """Malformed input: bad config, broken invariant, unknown tag."""


class GradeError(TimeKernelError, ValueError):
    """Addition of scalars carrying different (mu, hbar) grades."""


class PreconditionError(TimeKernelError, ValueError):
    """An operation was called outside its documented domain."""


class DivergenceError(TimeKernelError, ValueError):
    """A classical limit was requested on a series with negative hbar grades."""


class ConsistencyError(TimeKernelError, RuntimeError):
    """Two independent computations of the same quantity disagree."""


class NonConvergenceError(TimeKernelError, RuntimeError):
    """Successive approximation did not reach the requested tolerance."""

    def __init__(self, message: str, final_delta: float, iterations: int):
        super().__init__(message)
        self.final_delta = final_delta
        self.iterations = iterations
