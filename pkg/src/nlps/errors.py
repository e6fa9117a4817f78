"""Exception types shared across the package."""

from __future__ import annotations


class NLPSError(Exception):
    """Base class for all package errors."""


class ConfigError(NLPSError, ValueError):
    """Invalid run configuration or parameter."""


class InitializationError(NLPSError, ValueError):
    """Initial data could not be built (e.g. a non-finite sample)."""


class SpecMismatchError(NLPSError, ValueError):
    """Two objects live on different grids."""


class KernelSymmetryError(NLPSError, RuntimeError):
    """FFT result carries an imaginary part it should not have."""


class BlowUpError(NLPSError, FloatingPointError):
    """The explicit update produced a non-finite cell."""

    def __init__(self, step: int, cell: tuple[int, int], dt: float, field: str = "m"):
        self.step = step
        self.cell = cell
        self.dt = dt
        self.field = field
        super().__init__(
            f"non-finite {field} at step {step}, cell (i={cell[0]}, j={cell[1]}); "
            f"try a smaller dt (e.g. {dt / 4:.3e} instead of {dt:.3e})"
        )


class SnapshotFormatError(NLPSError, OSError):
    """Malformed snapshot file."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")
