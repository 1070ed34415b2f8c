"""Exception types shared across the package."""


class ParityError(ValueError):
    """A point or path lies on the wrong sublattice."""


class PreconditionError(ValueError):
    """An operation was called with arguments violating its precondition."""


class DomainError(ValueError):
    """No admissible object exists for the given arguments."""


class CapacityError(MemoryError):
    """A requested window would not fit in addressable memory."""
