"""Convex bodies containing the origin in their interior.

Two shapes are supported: Euclidean balls (possibly off-centre) and polytopes
given by their vertices.  All evaluation functions are vectorised over the
leading axes of the point array.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.spatial import ConvexHull, QhullError

from .grid import GridSet, PaddingError

# absolute slack for cell-centre membership in d*K
MEMBERSHIP_SLACK = 1e-12
POLAR_DIRECTIONS_2D = 720
POLAR_DIRECTIONS_3D = 2000


class ConvexBodyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ConvexBody:
    dim: int
    kind: str  # "ball" | "polytope"
    center: np.ndarray | None = None
    radius: float | None = None
    vertices: np.ndarray | None = None
    # facet data: normals[i] . x <= offsets[i], offsets > 0
    normals: np.ndarray = field(default=None, repr=False)
    offsets: np.ndarray = field(default=None, repr=False)

    # ---- construction -------------------------------------------------
    @classmethod
    def ball(cls, center, radius: float) -> "ConvexBody":
        c = np.atleast_1d(np.asarray(center, dtype=float))
        if c.ndim != 1 or c.size not in (1, 2, 3):
            raise ConvexBodyError(f"ball centre must be a point in R^1..R^3, got {center!r}")
        r = float(radius)
        if not r > 0:
            raise ConvexBodyError(f"ball radius must be positive, got {radius!r}")
        if np.linalg.norm(c) >= r:
            raise ConvexBodyError("origin is not an interior point of the ball")
        if c.size == 1:
            return cls.polytope([[c[0] - r], [c[0] + r]])
        c.setflags(write=False)
        return cls(dim=c.size, kind="ball", center=c, radius=r)

    @classmethod
    def polytope(cls, vertices) -> "ConvexBody":
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] not in (1, 2, 3):
            raise ConvexBodyError(f"vertices must be an (k, dim) array with dim in 1..3, got shape {V.shape}")
        dim = V.shape[1]
        if not np.all(np.isfinite(V)):
            raise ConvexBodyError("vertices must be finite")
        if dim == 1:
            lo, hi = V.min(), V.max()
            if V.shape[0] != 2 or lo == hi:
                raise ConvexBodyError("a 1-d polytope is an interval given by two distinct endpoints")
            normals = np.array([[1.0], [-1.0]])
            offsets = np.array([hi, -lo])
            V = np.array([[lo], [hi]])
        else:
            if V.shape[0] < dim + 1:
                raise ConvexBodyError(f"need at least {dim + 1} vertices in R^{dim}")
            try:
                hull = ConvexHull(V)
            except QhullError as exc:
                raise ConvexBodyError("vertices are affinely dependent") from exc
            if len(hull.vertices) != V.shape[0]:
                raise ConvexBodyError("vertices are not in convex position")
            if dim == 2:
                x, y = V[:, 0], V[:, 1]
                area2 = np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))
                order = list(hull.vertices)  # counterclockwise
                k = order.index(0)
                if area2 <= 0 or order[k:] + order[:k] != list(range(V.shape[0])):
                    raise ConvexBodyError("2-d vertices must be listed counterclockwise")
            normals, offsets = _unique_facets(hull.equations)
        if np.any(offsets <= 1e-12 * max(1.0, np.abs(V).max())):
            raise ConvexBodyError("origin is not an interior point of the polytope")
        V.setflags(write=False)
        normals.setflags(write=False)
        offsets.setflags(write=False)
        return cls(dim=dim, kind="polytope", vertices=V, normals=normals, offsets=offsets)

    # ---- basic functionals ---------------------------------------------
    def _pts(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ConvexBodyError(f"dimension mismatch: body in R^{self.dim}, points of shape {x.shape}")
        return x

    def support(self, x) -> np.ndarray:
        x = self._pts(x)
        if self.kind == "ball":
            return x @ self.center + self.radius * np.linalg.norm(x, axis=-1)
        return np.max(x @ self.vertices.T, axis=-1)

    def gauge(self, x) -> np.ndarray:
        x = self._pts(x)
        if self.kind == "ball":
            c, r = self.center, self.radius
            xc = x @ c
            xx = np.einsum("...i,...i->...", x, x)
            k = r * r - c @ c
            return (-xc + np.sqrt(np.maximum(xc * xc + k * xx, 0.0))) / k
        return np.maximum(np.max((x @ self.normals.T) / self.offsets, axis=-1), 0.0)

    def radial(self, x) -> np.ndarray:
        g = self.gauge(x)
        if np.any(g == 0):
            raise ConvexBodyError("radial function is undefined at the zero vector")
        return 1.0 / g

    def contains(self, x, scale: float = 1.0, slack: float = MEMBERSHIP_SLACK) -> np.ndarray:
        return self.gauge(x) <= scale + slack

    def reflect(self) -> "ConvexBody":
        """The body -K."""
        if self.kind == "ball":
            return ConvexBody.ball(-self.center, self.radius)
        V = -self.vertices
        return ConvexBody.polytope(V)  # point reflection keeps 2-d orientation

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        if self.kind == "ball":
            return bool(np.linalg.norm(self.center) <= tol)
        d = np.abs(self.vertices[:, None, :] + self.vertices[None, :, :]).max(axis=-1)
        return bool(np.all(d.min(axis=1) <= tol))

    def volume(self) -> float:
        if self.kind == "ball":
            r = self.radius
            return {2: np.pi * r * r, 3: 4.0 / 3.0 * np.pi * r ** 3}[self.dim]
        if self.dim == 1:
            return float(self.vertices[1, 0] - self.vertices[0, 0])
        return float(ConvexHull(self.vertices).volume)

    def inradius(self) -> float:
        """Radius of the largest origin-centred ball inside the body."""
        if self.kind == "ball":
            return self.radius - float(np.linalg.norm(self.center))
        return float(np.min(self.offsets / np.linalg.norm(self.normals, axis=1)))

    def circumradius(self) -> float:
        """Radius of the smallest origin-centred ball containing the body."""
        if self.kind == "ball":
            return self.radius + float(np.linalg.norm(self.center))
        return float(np.linalg.norm(self.vertices, axis=1).max())

    def vertical_extent(self, v) -> tuple:
        """Lowest and highest last coordinate of K over the horizontal point(s) ``v``.

        Returns ``(lo, hi)`` with NaN where the vertical line misses K.
        """
        v = np.asarray(v, dtype=float)
        if v.shape[-1:] != (self.dim - 1,):
            raise ConvexBodyError("horizontal points must have dimension dim-1")
        if self.kind == "ball":
            c, r = self.center, self.radius
            rem = r * r - np.sum((v - c[:-1]) ** 2, axis=-1)
            s = np.where(rem >= 0, np.sqrt(np.maximum(rem, 0.0)), np.nan)
            return c[-1] - s, c[-1] + s
        Nv, Nt, b = self.normals[:, :-1], self.normals[:, -1], self.offsets
        rhs = b - v @ Nv.T
        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.where(Nt > 1e-14, rhs / Nt, np.inf).min(axis=-1)
            lo = np.where(Nt < -1e-14, rhs / Nt, -np.inf).max(axis=-1)
            flat_ok = np.all(np.where(np.abs(Nt) <= 1e-14, rhs >= -1e-12, True), axis=-1)
        ok = flat_ok & (lo <= up)
        return np.where(ok, lo, np.nan), np.where(ok, up, np.nan)

    def __eq__(self, other):
        if not isinstance(other, ConvexBody) or other.kind != self.kind or other.dim != self.dim:
            return False
        if self.kind == "ball":
            return bool(np.array_equal(self.center, other.center) and self.radius == other.radius)
        return bool(np.array_equal(self.vertices, other.vertices))

    def isclose(self, other: "ConvexBody", atol: float = 1e-9) -> bool:
        """Same body up to ``atol``; polytopes compare as vertex sets, so order does not matter."""
        if not isinstance(other, ConvexBody) or other.kind != self.kind or other.dim != self.dim:
            return False
        if self.kind == "ball":
            return bool(np.allclose(self.center, other.center, atol=atol) and abs(self.radius - other.radius) <= atol)
        A, B = self.vertices, other.vertices
        if A.shape != B.shape:
            return False
        D = np.abs(A[:, None, :] - B[None, :, :]).max(axis=-1)
        return bool(D.min(axis=1).max() <= atol and D.min(axis=0).max() <= atol)

    def __hash__(self):
        return hash((self.kind, self.dim, self.radius,
                     None if self.center is None else self.center.tobytes(),
                     None if self.vertices is None else self.vertices.tobytes()))


def _unique_facets(equations: np.ndarray):
    """Collapse coplanar simplicial facets from qhull into distinct half-spaces."""
    normals = equations[:, :-1]
    offsets = -equations[:, -1]
    key = np.round(np.hstack([normals, offsets[:, None]]), 10)
    _, idx = np.unique(key, axis=0, return_index=True)
    idx = np.sort(idx)
    return np.ascontiguousarray(normals[idx]), np.ascontiguousarray(offsets[idx])


# ---- named bodies -------------------------------------------------------

def unit_ball(dim: int = 2) -> ConvexBody:
    return ConvexBody.ball(np.zeros(dim), 1.0)


def regular_polygon(k: int, circumradius: float = 1.0, phase: float = 0.0) -> ConvexBody:
    ang = phase + 2 * np.pi * np.arange(k) / k
    return ConvexBody.polytope(circumradius * np.stack([np.cos(ang), np.sin(ang)], axis=1))


def square(half_side: float = 1.0) -> ConvexBody:
    s = half_side
    return ConvexBody.polytope([[s, -s], [s, s], [-s, s], [-s, -s]])


def square_of_area(area: float) -> ConvexBody:
    return square(0.5 * np.sqrt(area))


def hexagon_of_area(area: float) -> ConvexBody:
    R = np.sqrt(2 * area / (3 * np.sqrt(3)))
    return regular_polygon(6, R)


def cross_polytope(dim: int = 2) -> ConvexBody:
    if dim == 2:
        return ConvexBody.polytope([[1, 0], [0, 1], [-1, 0], [0, -1]])
    E = np.eye(dim)
    return ConvexBody.polytope(np.vstack([E, -E]))


# ---- free functions mirroring the methods ---------------------------------

def support(K: ConvexBody, x) -> np.ndarray:
    return K.support(x)


def gauge(K: ConvexBody, x) -> np.ndarray:
    return K.gauge(x)


def radial(K: ConvexBody, x) -> np.ndarray:
    return K.radial(x)


def fibonacci_sphere(k: int) -> np.ndarray:
    i = np.arange(k) + 0.5
    z = 1 - 2 * i / k
    phi = np.pi * (1 + 5 ** 0.5) * i
    s = np.sqrt(1 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


def polar(K: ConvexBody) -> ConvexBody:
    """Polar body; exact for polytopes and centred balls.

    An off-centre ball is replaced by the circumscribed polytope with tangent
    planes in 720 (2-d) or 2000 (3-d) directions, whose polar is the polytope with
    vertices ``u / h_K(u)``.
    """
    if K.kind == "ball":
        if np.linalg.norm(K.center) == 0:
            return ConvexBody.ball(K.center, 1.0 / K.radius)
        if K.dim == 2:
            t = 2 * np.pi * np.arange(POLAR_DIRECTIONS_2D) / POLAR_DIRECTIONS_2D
            U = np.stack([np.cos(t), np.sin(t)], axis=1)
        else:
            U = fibonacci_sphere(POLAR_DIRECTIONS_3D)
        return ConvexBody.polytope(U / K.support(U)[:, None])
    P = K.normals / K.offsets[:, None]
    if K.dim == 2:
        ang = np.arctan2(P[:, 1], P[:, 0])
        P = P[np.argsort(ang)]
    return ConvexBody.polytope(P)


# ---- discrete Minkowski sums ---------------------------------------------

def lattice_offsets(K: ConvexBody, d: float, h: float) -> np.ndarray:
    """Integer offsets ``k`` with ``k*h`` in ``d*K`` (cell-centre membership)."""
    if not d > 0:
        raise ConvexBodyError(f"dilation radius must be positive, got {d}")
    E = np.eye(K.dim)
    hi = np.floor(d * K.support(E) / h + 1e-9).astype(int)
    lo = -np.floor(d * K.support(-E) / h + 1e-9).astype(int)
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    k = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, K.dim)
    keep = K.gauge(k * h) <= d + MEMBERSHIP_SLACK
    return k[keep]


def structuring_element(K: ConvexBody, d: float, h: float) -> np.ndarray:
    """Boolean array of odd side ``2R+1`` whose centre is the zero offset."""
    k = lattice_offsets(K, d, h)
    R = int(np.abs(k).max()) if k.size else 0
    se = np.zeros((2 * R + 1,) * K.dim, dtype=bool)
    se[tuple((k + R).T)] = True
    return se


def _reach(K: ConvexBody, d: float, h: float):
    k = lattice_offsets(K, d, h)
    return k.min(axis=0), k.max(axis=0)


def dilate_mask(mask: np.ndarray, se: np.ndarray) -> np.ndarray:
    """Flat dilation of ``mask`` by ``se`` (offsets centred), cropped to the input shape."""
    if not mask.any():
        return np.zeros_like(mask, dtype=bool)
    if se.size == 1:
        return mask.copy()
    R = se.shape[0] // 2
    lo = np.maximum(np.argwhere(mask).min(axis=0) - R, 0)
    hi = np.minimum(np.argwhere(mask).max(axis=0) + R + 1, mask.shape)
    win = tuple(slice(a, b) for a, b in zip(lo, hi))
    sub = fftconvolve(mask[win].astype(float), se.astype(float), mode="same")
    out = np.zeros(mask.shape, dtype=bool)
    out[win] = sub > 0.5
    return out


def dilate_set(A: GridSet, K: ConvexBody, d: float) -> GridSet:
    """Cells ``c`` with ``center(c) - center(a)`` in ``d*K`` for some ``a`` in ``A``."""
    g = A.grid
    if K.dim != g.dim:
        raise ConvexBodyError(f"body in R^{K.dim} on a {g.dim}-d grid")
    box = A.bbox()
    if box is None:
        return A
    klo, khi = _reach(K, d, g.h)
    if np.any(box[0] + klo < 1) or np.any(box[1] + khi > g.n - 2):
        raise PaddingError("dilation would reach the grid boundary; enlarge the extent")
    return GridSet(g, dilate_mask(A.mask, structuring_element(K, d, g.h)))
