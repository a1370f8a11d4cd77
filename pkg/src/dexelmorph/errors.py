"""Exception hierarchy shared by every module."""


class DexelError(Exception):
    """Base class for all errors raised by dexelmorph."""


class InvalidInputError(DexelError, ValueError):
    pass


class IncompatibleGridsError(DexelError, ValueError):
    pass


class MeshFormatError(DexelError, ValueError):
    """A mesh file could not be parsed; the message carries the line or byte offset."""


class NonWatertightError(DexelError, ValueError):
    """A ray crossed the surface an odd number of times."""

    def __init__(self, column, count):
        self.column = column
        self.count = count
        super().__init__(f"odd crossing count {count} on ray at column (i={column[0]}, j={column[1]})")
