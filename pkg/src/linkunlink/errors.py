"""Exception hierarchy shared by all modules.

The CLI maps :class:`InputError` to exit code 1 and :class:`NumericalError`
to exit code 2.
"""


class LinkUnlinkError(Exception):
    """Base class for every error raised by this package."""


class InputError(LinkUnlinkError, ValueError):
    """Malformed input data, bad configuration or invalid arguments."""


class ShapeError(InputError):
    """Operands whose dimensions do not agree."""


class NumericalError(LinkUnlinkError, ArithmeticError):
    """A numerical invariant was violated (non-stochastic walk, NaN, ...)."""
