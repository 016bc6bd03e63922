"""Rearrangement operators on grid functions and their induced set maps.

Symmetric decreasing, Schwarz, Steiner and polarization are value transports:
the output is a permutation of the input values, so distributions are kept
exactly.  The first two place the sorted values along one fixed cell ordering,
Steiner does so line by line and polarization swaps values pair by pair.

K-Schwarz sends each superlevel set to the dilate ``r*K`` whose lattice
measure matches.  Its set map takes exact cardinality prefixes of the gauge
ordering; on functions, levels are assigned by radius, which keeps the output
constant on gauge ties at the price of an O(h * perimeter) measure error.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convex import ConvexBody
from .grid import Grid, GridFunction, GridSet, PaddingError, _ring_nonzero


class RearrangementError(ValueError):
    pass


def _index_mesh(grid: Grid, center) -> list:
    c = np.zeros(grid.dim, dtype=int) if center is None else np.asarray(center, dtype=int)
    k = grid.index_axis()
    return [m - ci for m, ci in zip(np.meshgrid(*([k] * grid.dim), indexing="ij"), c)]


def _finish(f: GridFunction, values: np.ndarray) -> GridFunction:
    if f.padding > 0 and _ring_nonzero(values, f.padding):
        raise PaddingError("rearranged function reaches the padding ring")
    return f.with_values(values)


class Rearrangement:
    name = "rearrangement"

    def apply(self, f: GridFunction) -> GridFunction:
        raise NotImplementedError

    def apply_set(self, A: GridSet) -> GridSet:
        return GridSet(A.grid, self.apply(A.indicator()).values >= 1.0)

    def is_smoothing(self) -> bool:
        return True

    def refine(self, factor: int = 2) -> "Rearrangement":
        """The same operator on a grid ``factor`` times finer."""
        return self

    def literal(self) -> dict:
        raise NotImplementedError


class _Ordered(Rearrangement):
    """Sorted values go to the cells of a fixed ordering, first cell first."""

    def order(self, grid: Grid) -> np.ndarray:
        raise NotImplementedError

    def apply(self, f):
        order = self.order(f.grid)
        vals = np.sort(f.values.ravel())[::-1]
        out = np.empty(vals.size)
        out[order] = vals
        return _finish(f, out.reshape(f.grid.shape))

    def apply_set(self, A):
        order = self.order(A.grid)
        m = np.zeros(A.mask.size, dtype=bool)
        m[order[: len(A)]] = True
        out = GridSet(A.grid, m.reshape(A.grid.shape))
        if _ring_nonzero(out.mask, 1):
            raise PaddingError("set image reaches the grid boundary")
        return out


@dataclass(frozen=True)
class SymDecreasing(_Ordered):
    """Cells ordered by squared index distance to ``center``, then lexicographically."""

    center: tuple | None = None
    name = "sym_decreasing"

    def order(self, grid):
        mesh = _index_mesh(grid, self.center)
        d2 = sum(m.astype(np.int64) ** 2 for m in mesh).ravel()
        idx = [m.ravel() for m in mesh]
        return np.lexsort(tuple(reversed([d2] + idx)))

    def refine(self, factor=2):
        if self.center is None:
            return self
        return type(self)(tuple(factor * int(c) for c in self.center))

    def literal(self):
        return {self.name: {"center": None if self.center is None else list(self.center)}}


@dataclass(frozen=True)
class Schwarz(SymDecreasing):
    """Full Schwarz symmetrization; on n-dimensional grids identical to SymDecreasing."""

    name = "schwarz"


@dataclass(frozen=True, eq=False)
class KSchwarz(_Ordered):
    """Superlevel sets become dilates of K: cells ordered by ``gauge(K, x)``."""

    K: ConvexBody
    name = "k_schwarz"

    def order(self, grid):
        if self.K.dim != grid.dim:
            raise RearrangementError("body and grid dimensions differ")
        g = self.K.gauge(grid.centers()).ravel()
        idx = [m.ravel() for m in np.meshgrid(*([grid.index_axis()] * grid.dim), indexing="ij")]
        return np.lexsort(tuple(reversed([g] + idx)))

    def discrete_measure(self, grid: Grid) -> float:
        """Lattice measure of K: cells of ``R*K`` times ``h^n / R^n`` for the largest R that fits."""
        R = 0.95 * grid.extent / self.K.circumradius()
        cnt = int(np.count_nonzero(self.K.gauge(grid.centers()) <= R + 1e-12))
        return cnt * grid.cell_volume / R ** grid.dim

    def radii(self, f: GridFunction):
        """Distinct positive levels (descending) and the matching dilation radii."""
        levels, counts = np.unique(f.values[f.values > 0], return_counts=True)
        levels, counts = levels[::-1], np.cumsum(counts[::-1])
        r = (counts * f.grid.cell_volume / self.discrete_measure(f.grid)) ** (1.0 / f.dim)
        return levels, r

    def apply(self, f):
        # Layer cake with radius-matched dilates: Tf(x) = max{t : gauge(x) <= r_t}.
        # Levels stay constant on gauge ties, so gradients are not polluted by
        # the tie-breaking order; measures match up to the lattice error of r_t*K.
        if self.K.dim != f.dim:
            raise RearrangementError("body and grid dimensions differ")
        levels, r = self.radii(f)
        out = np.zeros(f.grid.shape)
        if levels.size:
            lam = self.K.gauge(f.grid.centers())
            i = np.searchsorted(r, lam - 1e-12, side="left")
            hit = i < levels.size
            out[hit] = levels[i[hit]]
        return _finish(f, out)

    def is_smoothing(self):
        return False  # K-smoothing, not smoothing, unless K is a centred ball

    def __eq__(self, other):
        return isinstance(other, KSchwarz) and self.K == other.K

    def __hash__(self):
        return hash(self.K)

    def literal(self):
        return {self.name: {"body": self.K}}


@dataclass(frozen=True)
class Steiner(Rearrangement):
    """Symmetrize every line parallel to ``axis`` about the index ``center``."""

    axis: int = 0
    center: int = 0
    name = "steiner"

    def _line_order(self, n: int, m: int) -> np.ndarray:
        k = np.arange(n) - m - self.center
        return np.lexsort((np.arange(n), np.abs(k)))

    def apply(self, f):
        if not 0 <= self.axis < f.dim:
            raise RearrangementError(f"axis {self.axis} out of range")
        v = np.moveaxis(f.values, self.axis, -1)
        order = self._line_order(f.grid.n, f.grid.m)
        srt = -np.sort(-v, axis=-1)
        out = np.empty_like(srt)
        out[..., order] = srt
        return _finish(f, np.moveaxis(out, -1, self.axis))

    def refine(self, factor=2):
        return Steiner(self.axis, factor * self.center)

    def literal(self):
        return {self.name: {"axis": self.axis, "center": self.center}}


@dataclass(frozen=True)
class Polarization(Rearrangement):
    """Two-point symmetrization across ``{x_axis = offset*h}``.

    ``offset`` is a half-integer in cell units; ``positive_side`` "+" puts the
    larger value on the side ``x_axis > offset*h``.
    """

    axis: int = 0
    offset: float = 0.5
    positive_side: str = "+"
    name = "polarization"

    def __post_init__(self):
        if abs(2 * self.offset - round(2 * self.offset)) > 1e-12 or round(2 * self.offset) % 2 == 0:
            raise RearrangementError(f"offset must be a half-integer, got {self.offset}")
        if self.positive_side not in ("+", "-"):
            raise RearrangementError("positive_side must be '+' or '-'")

    def apply(self, f):
        g = f.grid
        if not 0 <= self.axis < g.dim:
            raise RearrangementError(f"axis {self.axis} out of range")
        v = np.moveaxis(f.values, self.axis, 0)
        k = g.index_axis()
        refl = int(round(2 * self.offset)) - k  # reflected index, centred units
        inside = np.abs(refl) <= g.m
        pos = k > self.offset if self.positive_side == "+" else k < self.offset
        out = v.copy()
        for i in range(g.n):
            partner = v[refl[i] + g.m] if inside[i] else np.zeros_like(v[i])
            out[i] = np.maximum(v[i], partner) if pos[i] else np.minimum(v[i], partner)
        for i in range(g.n):
            if not inside[i] and not pos[i] and np.any(v[i] > 0):
                raise PaddingError("polarization would move mass outside the grid")
        return _finish(f, np.moveaxis(out, 0, self.axis))

    def refine(self, factor=2):
        # a half-integer plane cannot stay put under refinement; move it h/4 towards 0
        k = factor * self.offset
        k = k - 0.5 if k > 0 else k + 0.5
        return Polarization(self.axis, k, self.positive_side)

    def reflect(self, x: np.ndarray, h: float) -> np.ndarray:
        y = np.array(x, dtype=float, copy=True)
        y[..., self.axis] = 2 * self.offset * h - y[..., self.axis]
        return y

    def literal(self):
        return {self.name: {"axis": self.axis, "offset": self.offset, "positive_side": self.positive_side}}


@dataclass(frozen=True)
class Composite(Rearrangement):
    steps: tuple
    name = "composite"

    def apply(self, f):
        for T in self.steps:
            f = T.apply(f)
        return f

    def is_smoothing(self):
        return all(T.is_smoothing() for T in self.steps)

    def refine(self, factor=2):
        return Composite(tuple(T.refine(factor) for T in self.steps))

    def literal(self):
        return {self.name: [T.literal() for T in self.steps]}


@dataclass(frozen=True)
class Identity(Rearrangement):
    name = "identity"

    def apply(self, f):
        return f

    def literal(self):
        return {self.name: {}}


# ---- module-level API -----------------------------------------------------

def apply(T: Rearrangement, f: GridFunction) -> GridFunction:
    return T.apply(f)


def apply_set(T: Rearrangement, A: GridSet) -> GridSet:
    return T.apply_set(A)


def polarize(f: GridFunction, axis: int, offset: float, positive_side: str = "+") -> GridFunction:
    return Polarization(axis, offset, positive_side).apply(f)


def layer_cake_reconstruct(T: Rearrangement, f: GridFunction) -> GridFunction:
    """``Tf(x) = max{t in values(f) : x in T({f >= t})}``, built from the set map alone."""
    levels = np.unique(f.values)
    levels = levels[levels > 0][::-1]
    out = np.zeros(f.grid.shape)
    prev = None
    for t in levels:
        S = T.apply_set(GridSet(f.grid, f.values >= t)).mask
        if prev is not None and np.any(prev & ~S):
            raise RearrangementError(f"set images are not nested at level {t}")
        out[S & (out == 0)] = t
        prev = S
    return f.with_values(out)


def center_oriented_polarization(grid: Grid, rng: np.random.Generator) -> Polarization:
    """Uniform axis and half-integer offset; the side containing the origin gets the max."""
    axis = int(rng.integers(grid.dim))
    k = int(rng.integers(-grid.m, grid.m))  # offsets k + 1/2 in [-m + 1/2, m - 1/2]
    offset = k + 0.5
    side = "-" if offset > 0 else "+"
    return Polarization(axis, offset, side)


def l2_distance(f: GridFunction, g: GridFunction) -> float:
    return float(np.sqrt(np.sum((f.values - g.values) ** 2) * f.grid.cell_volume))


def polarization_flow(f: GridFunction, steps: int, seed: int):
    """Apply ``steps`` random centre-oriented polarizations.

    Returns ``(distances, hyperplanes)``; ``distances[k]`` is the L2 distance to
    the symmetric decreasing rearrangement after ``k`` steps.
    """
    if steps < 1:
        raise RearrangementError("steps must be positive")
    rng = np.random.default_rng(seed)
    target = SymDecreasing().apply(f)
    dist = [l2_distance(f, target)]
    planes = []
    cur = f
    for _ in range(steps):
        P = center_oriented_polarization(f.grid, rng)
        cur = P.apply(cur)
        planes.append(P)
        dist.append(l2_distance(cur, target))
    return np.array(dist), planes
