"""Uniform cell-centred grids and the immutable function/set values living on them.

Cell centres sit at ``k*h`` for integer ``k`` in ``[-m, m]`` along every axis, so
the origin is always a cell centre and the grid is symmetric about it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    """Raised when a grid object violates its invariants."""


class PaddingError(GridError):
    """Raised when an operation would reach the grid boundary."""


@dataclass(frozen=True)
class Grid:
    dim: int
    h: float
    m: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise GridError(f"grid dimension must be 1, 2 or 3, got {self.dim}")
        if not (self.h > 0 and np.isfinite(self.h)):
            raise GridError(f"spacing must be positive, got {self.h}")
        if self.m < 1:
            raise GridError(f"half-width must be at least one cell, got {self.m}")

    @classmethod
    def from_extent(cls, h: float, extent: float, dim: int = 2) -> "Grid":
        """Grid covering ``[-extent, extent]^dim``; ``h`` must divide ``extent``."""
        m = int(round(extent / h))
        if m < 1 or abs(m * h - extent) > 1e-9 * max(1.0, extent):
            raise GridError(f"h={h} does not divide extent={extent}")
        return cls(dim=dim, h=float(h), m=m)

    @property
    def n(self) -> int:
        return 2 * self.m + 1

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def extent(self) -> float:
        return self.m * self.h

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def axis(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1) * self.h

    def index_axis(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1)

    def centers(self) -> np.ndarray:
        """Array of shape ``shape + (dim,)`` with the cell-centre coordinates."""
        ax = self.axis()
        mesh = np.meshgrid(*([ax] * self.dim), indexing="ij")
        return np.stack(mesh, axis=-1)

    def index_of(self, x) -> tuple:
        """Index of the cell whose centre is nearest to ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise GridError(f"point of dimension {x.shape} on a {self.dim}-d grid")
        k = np.rint(x / self.h).astype(int) + self.m
        if np.any(k < 0) or np.any(k >= self.n):
            raise GridError(f"point {x.tolist()} lies outside the grid")
        return tuple(int(v) for v in k)

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(self.dim, self.h / factor, self.m * factor)


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nonnegative function sampled at cell centres, zero on the outer ``padding`` ring."""

    grid: Grid
    values: np.ndarray
    padding: int = 1

    def __post_init__(self):
        v = _frozen(self.values, float)
        object.__setattr__(self, "values", v)
        if v.shape != self.grid.shape:
            raise GridError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise GridError("grid function values must be finite")
        if np.any(v < 0):
            raise GridError("grid function values must be nonnegative")
        if self.padding > 0 and _ring_nonzero(v, self.padding):
            raise GridError(f"support reaches the {self.padding}-cell padding ring")

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def dim(self) -> int:
        return self.grid.dim

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values, self.padding)

    def __eq__(self, other):
        return (isinstance(other, GridFunction) and self.grid == other.grid
                and np.array_equal(self.values, other.values))

    def at(self, x) -> float:
        return float(self.values[self.grid.index_of(x)])

    def support(self) -> "GridSet":
        return GridSet(self.grid, self.values > 0)

    def max(self) -> float:
        return float(self.values.max())


@dataclass(frozen=True, eq=False)
class GridSet:
    grid: Grid
    mask: np.ndarray

    def __post_init__(self):
        v = _frozen(self.mask, bool)
        object.__setattr__(self, "mask", v)
        if v.shape != self.grid.shape:
            raise GridError(f"mask shape {v.shape} does not match grid {self.grid.shape}")

    def __eq__(self, other):
        return (isinstance(other, GridSet) and self.grid == other.grid
                and np.array_equal(self.mask, other.mask))

    def __len__(self):
        return int(self.mask.sum())

    @property
    def h(self) -> float:
        return self.grid.h

    def measure(self) -> float:
        return len(self) * self.grid.cell_volume

    def issubset(self, other: "GridSet") -> bool:
        return not np.any(self.mask & ~other.mask)

    def indicator(self, height: float = 1.0, padding: int = 1) -> GridFunction:
        return GridFunction(self.grid, height * self.mask.astype(float), padding)

    def bbox(self):
        """Inclusive index bounds ``(lo, hi)`` of the set, or ``None`` when empty."""
        idx = np.argwhere(self.mask)
        if idx.size == 0:
            return None
        return idx.min(axis=0), idx.max(axis=0)


def _ring_nonzero(v: np.ndarray, width: int) -> bool:
    for ax in range(v.ndim):
        lo = np.take(v, range(width), axis=ax)
        hi = np.take(v, range(v.shape[ax] - width, v.shape[ax]), axis=ax)
        if np.any(lo != 0) or np.any(hi != 0):
            return True
    return False
