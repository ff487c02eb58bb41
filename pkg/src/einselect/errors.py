"""Exception hierarchy.

``NumericGuard`` subclasses signal that a computation was refused because its
numerical preconditions do not hold (memory caps, grid resolution, ...). The
CLI maps them to exit code 3; everything else that is a ``ValueError`` is a
configuration problem.
"""


class NumericGuard(Exception):
    """A numerical precondition was violated."""


class BathTooLarge(NumericGuard):
    pass


class NoDecay(NumericGuard):
    pass


class StepTooCoarse(NumericGuard):
    pass


class DegenerateState(NumericGuard):
    pass


class ZeroTransmission(NumericGuard):
    pass


class UnderResolved(NumericGuard):
    pass


class OutOfRange(NumericGuard):
    pass


class NonpositiveSlope(NumericGuard):
    pass
