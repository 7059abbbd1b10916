class AcmpyError(Exception):
    """Base class for errors raised by acmpy."""


class InvariantViolation(AcmpyError, ArithmeticError):
    """
    An internal algebraic invariant does not hold.

    Raised when a computed quantity contradicts an identity that is true by
    construction, e.g. a non-square row-space order or a non-integral class count.
    """


class ResourceCapExceeded(AcmpyError, RuntimeError):
    """An enumeration would exceed the configured cap."""

    def __init__(self, what: str, required: int, cap: int) -> None:
        self.what = what
        self.required = required
        self.cap = cap
        super().__init__(f"{what} requires {required} elements, exceeding the cap of {cap}.")


class RelationError(AcmpyError, ValueError):
    """A numerical relation check failed."""


class NotCongruentWarning(UserWarning):
    """A change of basis was applied with a matrix that is not invertible over the integers."""
