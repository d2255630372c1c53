"""Exception hierarchy shared by all modules.

The CLI maps ``InputError`` subclasses to exit code 1 and
``NumericalError`` subclasses to exit code 2.
"""


class DampWaveError(Exception):
    pass


class InputError(DampWaveError, ValueError):
    pass


class NumericalError(DampWaveError, ArithmeticError):
    pass


class EmptySet(InputError):
    """The admissible interval S_N is empty for the given parameters."""


class OutsideTheorem(InputError):
    """No lifespan bound is available for these parameters."""


class InvalidParams(InputError):
    pass


class DomainError(InputError):
    """A point lies outside the light cone |x| < 1 + t."""


class WrongRegime(InputError):
    pass


class GridTooCoarse(InputError):
    pass


class InsufficientData(InputError):
    pass


class NoConvergence(NumericalError):
    pass


class NonFinite(NumericalError):
    pass


class PositivityViolated(NumericalError):
    pass


class NoBlowup(NumericalError):
    pass
