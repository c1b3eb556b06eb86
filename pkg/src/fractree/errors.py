"""Exception hierarchy shared by every fractree module."""

from __future__ import annotations


class FractreeError(Exception):
    """Base class for all library errors."""


class ValidationError(FractreeError, ValueError):
    """An input violates a documented precondition."""


class NumericError(FractreeError, ArithmeticError):
    """A numeric routine failed on otherwise valid input."""


class NonFinite(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class ZeroDenominator(ValidationError):
    pass


class ZeroFrequency(ValidationError):
    pass


class DepthLimit(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class OutOfValidity(ValidationError):
    pass


class PoleProximity(NumericError):
    pass


class NoConvergence(NumericError):
    pass


class DegenerateBranch(NumericError):
    pass


class ContinuityFailure(NumericError):
    """Root matching could not be made continuous between two samples.

    ``interval`` holds the (eps_hi, eps_lo) pair that failed.
    """

    def __init__(self, message: str, interval: tuple[float, float] | None = None):
        super().__init__(message)
        self.interval = interval


class IllConditioned(NumericError):
    pass


class ZeroMagnitude(NumericError):
    pass


class PoleOnAxis(NumericError):
    pass


class ZeroTarget(NumericError):
    pass


class NoImprovement(NumericError):
    pass


class DegenerateAllRootsEqual(FractreeError):
    """Raised for an undamaged disturbance, which has no free roots.

    Not a failure as such: ``convention`` carries the zero/pole set with
    every root placed at ``-sqrt(k/b)``.
    """

    def __init__(self, message: str, convention=None):
        super().__init__(message)
        self.convention = convention
