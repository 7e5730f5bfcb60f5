"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ScatterError(Exception):
    """Base class for all errors raised by this package."""


class InvalidElement(ScatterError, ValueError):
    pass


class InvalidJunction(ScatterError, ValueError):
    pass


class InvalidAssembly(ScatterError, ValueError):
    pass


class DegenerateLead(InvalidJunction):
    """The junction lead coupling beta vanishes, so 1/(N beta) is undefined."""


class FastPathInapplicable(ScatterError, ValueError):
    pass


class SingularityError(ScatterError, ArithmeticError):
    """A linear-algebra step degenerated at the requested wavenumber.

    ``path`` records where in a network tree the failure happened, outermost
    node first, e.g. ``("parallel[1]", "series[0]")``.
    """

    def __init__(self, message: str, path: tuple[str, ...] = ()):
        super().__init__(message)
        self.message = message
        self.path = tuple(path)

    def with_prefix(self, step: str) -> "SingularityError":
        return type(self)(self.message, (step, *self.path))

    def __str__(self) -> str:
        if not self.path:
            return self.message
        return f"{'/'.join(self.path)}: {self.message}"


class SingularMatrix(SingularityError):
    pass


class SingularSystem(SingularityError):
    pass


class OpaqueAtThisK(SingularityError):
    """m11 vanishes: the transmission amplitude 1/m11 is undefined."""
