"""Exception types shared across the package."""


class PppError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigError(PppError):
    """A configuration value violates its contract."""


class DimensionError(PppError):
    """Operands disagree about vector or matrix dimensions."""


class DegenerateSelection(PppError):
    """A row or column selection is empty."""


class IndexOutOfBounds(PppError):
    """An index set does not fit the matrix it is applied to."""


class DegenerateModel(PppError):
    """A model cannot be built from the given inputs."""


class SingularCovariance(PppError):
    """A covariance matrix is not positive definite."""


class DegenerateSplit(PppError):
    """A two-way split is impossible because the points coincide."""


class ParseError(PppError):
    """A cell failed to parse. Carries the zero-based data (row, col)."""

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        super().__init__(message)
        self.row = row
        self.col = col


class FormatError(PppError):
    """Structural problem in an input file, such as ragged rows."""


class ValidationError(PppError):
    """Parsed input violates a data contract (non-finite values, bad shape)."""
