"""Core data containers: labelled matrices, index sets, seed derivation."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSelection,
    DimensionError,
    IndexOutOfBounds,
    ValidationError,
)


def derive_seed(*parts) -> int:
    """Derive a stable 64-bit sub-seed from a tuple of ints and strings.

    Built on SHA-256 so the derived streams are identical across processes and
    platforms; the builtin ``hash`` is salted per interpreter and would not be.
    """
    payload = "\x1f".join(repr(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """A dense instances-by-features matrix with optional string labels.

    ``values`` is an (n_instances, n_features) float array whose entries are all
    finite. ``instance_ids`` and ``feature_ids``, when given, are unique label
    tuples matching the corresponding axis length. Fresh inputs are expected to
    be at least 2x2 (use :meth:`ingest`); derived restrictions may be thinner.
    """

    values: np.ndarray
    instance_ids: tuple[str, ...] | None = None
    feature_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValidationError(f"matrix must be 2-D, got ndim={values.ndim}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValidationError(f"matrix must be non-empty, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("matrix entries must all be finite")
        object.__setattr__(self, "values", values)
        for name, labels, length in (
            ("instance_ids", self.instance_ids, values.shape[0]),
            ("feature_ids", self.feature_ids, values.shape[1]),
        ):
            if labels is None:
                continue
            labels = tuple(str(x) for x in labels)
            if len(labels) != length:
                raise ValidationError(f"{name} has {len(labels)} entries for axis of {length}")
            if len(set(labels)) != len(labels):
                raise ValidationError(f"{name} contains duplicates")
            object.__setattr__(self, name, labels)

    @classmethod
    def ingest(cls, values, instance_ids=None, feature_ids=None) -> "DesignMatrix":
        """Build a matrix from fresh input, requiring at least 2 rows and 2 columns."""
        m = cls(values, instance_ids, feature_ids)
        if m.n_instances < 2 or m.n_features < 2:
            raise ValidationError(
                f"need at least 2 instances and 2 features, got {m.values.shape}"
            )
        return m

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class IndexSet:
    """Sorted duplicate-free indices drawn from ``0 .. universe_size - 1``."""

    indices: np.ndarray
    universe_size: int

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64).ravel()
        if self.universe_size < 0:
            raise ValidationError("universe_size must be nonnegative")
        if indices.size:
            if np.any(np.diff(indices) <= 0):
                raise ValidationError("indices must be strictly increasing")
            if indices[0] < 0 or indices[-1] >= self.universe_size:
                raise IndexOutOfBounds(
                    f"indices must lie in [0, {self.universe_size}), "
                    f"got range [{indices[0]}, {indices[-1]}]"
                )
        object.__setattr__(self, "indices", indices)

    @classmethod
    def from_iterable(cls, indices, universe_size: int) -> "IndexSet":
        """Sort, deduplicate and wrap an arbitrary index collection."""
        return cls(np.unique(np.asarray(list(indices), dtype=np.int64)), universe_size)

    @classmethod
    def full(cls, universe_size: int) -> "IndexSet":
        return cls(np.arange(universe_size, dtype=np.int64), universe_size)

    def __len__(self) -> int:
        return int(self.indices.size)

    def __iter__(self):
        return (int(i) for i in self.indices)

    def __contains__(self, idx) -> bool:
        pos = np.searchsorted(self.indices, idx)
        return pos < self.indices.size and self.indices[pos] == idx

    def intersection(self, other: "IndexSet") -> "IndexSet":
        if self.universe_size != other.universe_size:
            raise DimensionError("index sets live in different universes")
        common = np.intersect1d(self.indices, other.indices, assume_unique=True)
        return IndexSet(common, self.universe_size)

    def select(self, positions: "IndexSet") -> "IndexSet":
        """Map positions within this set to the universe it indexes.

        ``positions`` is an index set over ``len(self)``; the result contains
        ``self.indices[positions]`` and keeps this set's universe.
        """
        if positions.universe_size != len(self):
            raise DimensionError(
                f"positions universe {positions.universe_size} != set size {len(self)}"
            )
        return IndexSet(self.indices[positions.indices], self.universe_size)


def as_matrix(data) -> np.ndarray:
    """Accept a DesignMatrix or any 2-D array-like and return the float array."""
    values = data.values if isinstance(data, DesignMatrix) else np.asarray(data, dtype=float)
    if values.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got ndim={values.ndim}")
    return values


def submatrix(m: DesignMatrix, rows: IndexSet, cols: IndexSet) -> DesignMatrix:
    """Restrict a matrix to the given rows and columns.

    Order follows the index sets, labels are carried along, and the result owns
    a fresh copy of the selected values.
    """
    if len(rows) == 0 or len(cols) == 0:
        raise DegenerateSelection("row and column selections must be non-empty")
    if rows.universe_size != m.n_instances or cols.universe_size != m.n_features:
        raise IndexOutOfBounds(
            f"selection built for {rows.universe_size}x{cols.universe_size}, "
            f"matrix is {m.n_instances}x{m.n_features}"
        )
    values = m.values[np.ix_(rows.indices, cols.indices)].copy()
    instance_ids = None
    if m.instance_ids is not None:
        instance_ids = tuple(m.instance_ids[i] for i in rows.indices)
    feature_ids = None
    if m.feature_ids is not None:
        feature_ids = tuple(m.feature_ids[j] for j in cols.indices)
    return DesignMatrix(values, instance_ids, feature_ids)


def column_vectors(m: DesignMatrix) -> list[np.ndarray]:
    """The feature columns of ``m`` as a list of length-N vectors (views)."""
    return list(m.values.T)
