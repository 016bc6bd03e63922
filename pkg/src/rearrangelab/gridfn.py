"""Level sets, energies, moduli of continuity and Minkowski-content estimators
for grid functions and grid sets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d

from .convex import ConvexBody, lattice_offsets, dilate_mask, structuring_element, _reach
from .grid import Grid, GridError, GridFunction, GridSet, PaddingError
from .young import SupportBody, YoungFunction

# work budget (cells x offsets) for the subgraph dilations
COLUMN_BUDGET = 4e9
# default radii, in cells of horizontal reach, for the subgraph content fit
SUBGRAPH_RADII = (12, 10, 8, 7, 6, 5, 4, 3)


# ---- constructors ----------------------------------------------------------

def from_callable(grid: Grid, fn, padding: int = 1) -> GridFunction:
    """Sample ``fn`` (taking an array of points ``(..., dim)``) at the cell centres."""
    return GridFunction(grid, np.maximum(np.asarray(fn(grid.centers()), float), 0.0), padding)


def cone(grid: Grid, K: ConvexBody, height: float = 1.0, center=None, scale: float = 1.0) -> GridFunction:
    """``height * (1 - gauge(K, (x - c)/scale))^+``."""
    c = np.zeros(grid.dim) if center is None else np.asarray(center, float)
    return from_callable(grid, lambda x: height * np.maximum(0.0, 1.0 - K.gauge((x - c) / scale)))


def bump(grid: Grid, center=None, radius: float = 1.0, height: float = 1.0) -> GridFunction:
    """Smooth compactly supported bump ``height * (1 - |x-c|^2/r^2)_+^2``."""
    c = np.zeros(grid.dim) if center is None else np.asarray(center, float)

    def fn(x):
        r2 = np.sum((x - c) ** 2, axis=-1) / radius ** 2
        return height * np.maximum(0.0, 1.0 - r2) ** 2

    return from_callable(grid, fn)


def indicator(A: GridSet, height: float = 1.0) -> GridFunction:
    return A.indicator(height)


def add(*fs: GridFunction) -> GridFunction:
    return fs[0].with_values(np.sum([f.values for f in fs], axis=0))


def ball_set(grid: Grid, radius: float, center=None) -> GridSet:
    c = np.zeros(grid.dim) if center is None else np.asarray(center, float)
    return GridSet(grid, np.sum((grid.centers() - c) ** 2, axis=-1) <= radius ** 2 + 1e-12)


def body_set(grid: Grid, K: ConvexBody, scale: float = 1.0, center=None) -> GridSet:
    c = np.zeros(grid.dim) if center is None else np.asarray(center, float)
    return GridSet(grid, K.contains(grid.centers() - c, scale))


# ---- level sets and distributions ------------------------------------------

def superlevel(f: GridFunction, t: float) -> GridSet:
    if not t > 0:
        raise GridError("superlevel sets are taken at positive levels")
    return GridSet(f.grid, f.values >= t)


def measure(A: GridSet) -> float:
    return A.measure()


@dataclass(frozen=True, eq=False)
class Distribution:
    """``t -> measure{f > t}``, stored at the distinct values of f (ascending)."""

    levels: np.ndarray
    measures: np.ndarray
    total: float

    def __call__(self, t):
        idx = np.searchsorted(self.levels, np.asarray(t, float), side="right") - 1
        out = np.where(idx >= 0, self.measures[np.maximum(idx, 0)], self.total)
        return out if np.ndim(out) else float(out)

    def __eq__(self, other):
        return (isinstance(other, Distribution) and np.array_equal(self.levels, other.levels)
                and np.array_equal(self.measures, other.measures))


def distribution(f: GridFunction) -> Distribution:
    levels, counts = np.unique(f.values, return_counts=True)
    w = f.grid.cell_volume
    above = (f.values.size - np.cumsum(counts)) * w
    return Distribution(levels, above, f.values.size * w)


def snap_level(f: GridFunction, a: float) -> float:
    """Midpoint between the distinct values of f that bracket ``a``."""
    vals = np.unique(f.values)
    k = np.searchsorted(vals, a)
    if k == 0 or k >= len(vals):
        raise GridError(f"level {a} outside the range of the function")
    if vals[k] == a and k + 1 < len(vals):
        return 0.5 * (vals[k] + vals[k + 1])
    return 0.5 * (vals[k - 1] + vals[k])


# ---- gradients and energies ---------------------------------------------

def gradient(f: GridFunction) -> np.ndarray:
    """Forward differences with zero extension; shape ``grid.shape + (dim,)``."""
    v, h = f.values, f.h
    parts = []
    for ax in range(v.ndim):
        nxt = np.roll(v, -1, axis=ax)
        sl = [slice(None)] * v.ndim
        sl[ax] = -1
        nxt[tuple(sl)] = 0.0
        parts.append((nxt - v) / h)
    return np.stack(parts, axis=-1)


def _grad_norm(f: GridFunction, K: ConvexBody | None) -> np.ndarray:
    g = gradient(f)
    if K is None:
        return np.linalg.norm(g, axis=-1)
    return K.support(-g)  # h_{-K}(grad f)


def gradient_energy(f: GridFunction, phi: YoungFunction, K: ConvexBody | None = None,
                    p_inf: bool = False, level: float | None = None) -> float:
    """``sum phi(|grad f|) h^n``, or with ``h_{-K}(grad f)`` in place of the norm.

    ``p_inf`` returns the largest gradient size instead; ``level`` restricts the
    sum to ``{f >= level}``.
    """
    r = _grad_norm(f, K)
    if level is not None:
        r = np.where(f.values >= level, r, 0.0)
    if p_inf:
        return float(r.max())
    vals = phi(r.ravel())
    return float(np.sum(vals) * f.grid.cell_volume)


def graph_area(f: GridFunction, a: float) -> float:
    r = _grad_norm(f, None)
    sel = f.values >= a
    return float(np.sum(np.sqrt(1.0 + r[sel] ** 2)) * f.grid.cell_volume)


def lipschitz(f: GridFunction) -> float:
    """Largest difference quotient over axis and diagonal neighbours."""
    v, best = f.values, 0.0
    for o in np.ndindex(*(3,) * f.dim):
        o = np.array(o) - 1
        if not np.any(o) or tuple(o) < tuple(-o):
            continue
        nb = np.roll(v, tuple(o), axis=tuple(range(f.dim)))  # zero ring makes the wrap harmless
        best = max(best, float(np.abs(nb - v).max()) / (f.h * np.linalg.norm(o)))
    return best


def boundary_measure(A: GridSet) -> float:
    """Crude perimeter scale: cells of A with a face neighbour outside, times h^(n-1)."""
    m = A.mask
    inner = m.copy()
    for ax in range(m.ndim):
        inner &= np.roll(m, 1, ax) & np.roll(m, -1, ax)
    return float((m & ~inner).sum() * A.h ** (m.ndim - 1))


# ---- shifted maxima -------------------------------------------------------

def _window(mask_or_box, reach_lo, reach_hi, shape):
    lo = np.maximum(mask_or_box[0] + reach_lo, 0)
    hi = np.minimum(mask_or_box[1] + reach_hi + 1, shape)
    return tuple(slice(int(a), int(b)) for a, b in zip(lo, hi))


def shift_max(src: np.ndarray, offsets: np.ndarray, weights: np.ndarray, fill=-np.inf) -> np.ndarray:
    """``out[x] = max_o src[x - o] + w[o]`` with ``fill`` outside the array."""
    out = np.full(src.shape, -np.inf)
    n = src.ndim
    for o, w in zip(offsets, weights):
        dst = []
        sl = []
        for ax in range(n):
            k = int(o[ax])
            L = src.shape[ax]
            if k >= 0:
                dst.append(slice(k, L))
                sl.append(slice(0, L - k))
            else:
                dst.append(slice(0, L + k))
                sl.append(slice(-k, L))
        dst, sl = tuple(dst), tuple(sl)
        np.maximum(out[dst], src[sl] + w, out=out[dst])
    if fill != -np.inf:
        out = np.maximum(out, fill)
    return out


def flat_max_filter(v: np.ndarray, se: np.ndarray, cval: float = 0.0) -> np.ndarray:
    """``out[x] = max over offsets o in se of v[x + o]`` (se centred, values outside = cval).

    Every row of a convex lattice set along the last axis is an interval, so the
    filter is a max of shifted 1-d running maxima.
    """
    R = se.shape[0] // 2
    V = np.pad(v, R, constant_values=cval)
    out = np.full(v.shape, -np.inf)
    cache = {}
    n = v.shape[-1]
    for lead in np.ndindex(*se.shape[:-1]):
        row = np.flatnonzero(se[lead])
        if row.size == 0:
            continue
        lo, hi = int(row[0]) - R, int(row[-1]) - R
        if row.size != hi - lo + 1:
            raise GridError("structuring element rows must be contiguous")
        s = hi - lo + 1
        if (lo, hi) not in cache:
            cache[(lo, hi)] = maximum_filter1d(V, s, axis=-1, mode="constant", cval=cval)
        M = cache[(lo, hi)]
        start = R + lo + s // 2
        sl = tuple(slice(k, k + m) for k, m in zip(lead, v.shape[:-1])) + (slice(start, start + n),)
        np.maximum(out, M[sl], out=out)
    return out


# ---- modulus of continuity ------------------------------------------------

def modulus(f: GridFunction, K: ConvexBody, d: float) -> float:
    """``max |f(x) - f(y)|`` over cell pairs with ``x - y`` in ``d*K``."""
    if K.dim != f.dim:
        raise GridError("body and grid dimensions differ")
    se = structuring_element(K, d, f.h)
    if se.sum() <= 1:
        raise GridError(f"d={d} resolves no nonzero offset of K at h={f.h}")
    box = f.support().bbox()
    if box is None:
        return 0.0
    R = se.shape[0] // 2
    win = _window(box, -R, R, f.grid.shape)
    v = np.pad(f.values[win], R)
    best = 0.0
    for fp in (se, se[(slice(None, None, -1),) * se.ndim]):
        mx = flat_max_filter(v, fp)
        best = max(best, float((mx - v).max()))
    return best


def modulus_bruteforce(f: GridFunction, K: ConvexBody, d: float) -> float:
    """Direct scan over all lattice offsets; oracle for ``modulus``."""
    offs = lattice_offsets(K, d, f.h)
    v = np.pad(f.values, f.grid.n)
    best = 0.0
    for o in offs:
        shifted = np.roll(v, tuple(int(k) for k in o), axis=tuple(range(v.ndim)))
        best = max(best, float(np.abs(v - shifted).max()))
    return best


def kcontraction_test_fn(A: GridSet, K: ConvexBody, d: float) -> GridFunction:
    """``(d - min_{a in A} gauge(K, x - a))^+``."""
    box = A.bbox()
    if box is None:
        raise GridError("test functions need a nonempty set")
    g = A.grid
    klo, khi = _reach(K, d, g.h)
    if np.any(box[0] + klo < 1) or np.any(box[1] + khi > g.n - 2):
        raise PaddingError("support of the test function would reach the grid boundary")
    offs = lattice_offsets(K, d, g.h)
    w = d - K.gauge(offs * g.h)
    win = _window(box, klo, khi, g.shape)
    src = np.where(A.mask[win], 0.0, -np.inf)
    # shift so every offset keeps its target inside the window
    val = shift_max(src, offs, w)
    out = np.zeros(g.shape)
    out[win] = np.maximum(val, 0.0)
    return GridFunction(g, out)


# ---- Minkowski contents -----------------------------------------------

@dataclass(frozen=True)
class ContentEstimate:
    value: float
    epsilons: tuple
    quotients: tuple
    extrapolation: str
    increments: tuple = ()

    def rows(self):
        return [{"eps": e, "increment": D, "quotient": q}
                for e, D, q in zip(self.epsilons, self.increments, self.quotients)]


def _steiner_fit(eps: np.ndarray, D: np.ndarray, degree: int, top: float | None = None) -> float:
    """Least-squares fit of the parallel-volume increments by a Steiner-type
    polynomial ``a0 + a1 e + ... + a_deg e^deg`` and return ``a1``.

    The intercept ``a0`` absorbs the digitisation offset of the discrete
    parallel set.  When ``top`` is given the leading coefficient is fixed to it.
    """
    if top is not None:
        D = D - top * eps ** degree
        degree -= 1
    degree = min(degree, len(eps) - 1)
    if degree < 1:
        raise GridError("need at least two radii for the content fit")
    A = np.vander(eps, degree + 1, increasing=True)
    coef = np.linalg.lstsq(A, D, rcond=None)[0]
    return float(coef[1])


def _finish(eps, D, method, degree, top=None):
    order = np.argsort(-eps)
    eps, D = eps[order], D[order]
    q = D / eps
    if method == "polynomial":
        val = _steiner_fit(eps, D, degree, top)
    elif method == "linear":
        val = float(np.polyval(np.polyfit(eps, q, 1), 0.0))
    elif method == "none":
        val = float(q[-1])
    else:
        raise GridError(f"unknown extrapolation {method!r}")
    return ContentEstimate(val, tuple(eps.tolist()), tuple(q.tolist()), method, tuple(D.tolist()))


def outer_minkowski_content(A: GridSet, C: ConvexBody, eps=None, method: str = "polynomial") -> ContentEstimate:
    """Estimate ``lim (|A + eC| - |A|)/e`` from discrete dilations at several radii."""
    h = A.h
    eps = np.array([32 * h, 16 * h, 8 * h] if eps is None else eps, dtype=float)
    if np.any(eps < 2 * h - 1e-12):
        raise GridError("radii below 2h are not resolved")
    box = A.bbox()
    if box is None:
        return ContentEstimate(0.0, tuple(eps), tuple(0 * eps), method, tuple(0 * eps))
    g = A.grid
    klo, khi = _reach(C, eps.max(), h)
    if np.any(box[0] + klo < 1) or np.any(box[1] + khi > g.n - 2):
        raise PaddingError("largest dilation would reach the grid boundary")
    base = A.mask.sum()
    D = np.array([(dilate_mask(A.mask, structuring_element(C, e, h)).sum() - base) * g.cell_volume
                  for e in eps])
    return _finish(eps, D, method, A.grid.dim)


def horizontal_reach(C) -> float:
    """Smallest horizontal half-width of ``C`` over the coordinate directions."""
    if isinstance(C, SupportBody):
        E = np.eye(C.K.dim)
        return C.section_radius(0.0) * float(np.min(np.concatenate([C.K.support(E), C.K.support(-E)])))
    E = np.eye(C.dim)[:-1]
    return float(np.min(np.concatenate([C.support(E), C.support(-E)])))


def _column_halfheights(C, e: float, h: float, n: int):
    """Horizontal lattice offsets of ``e*C`` and the column half-height over each."""
    if isinstance(C, SupportBody):
        R = e * C.section_radius(0.0) * C.K.circumradius()
    else:
        R = e * C.circumradius()
    k = int(np.floor(R / h + 1e-9))
    ax = np.arange(-k, k + 1)
    offs = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
    lo, hi = C.vertical_extent(offs * h / e)
    ok = np.isfinite(hi)
    return offs[ok], e * hi[ok]


def _check_t_symmetric(C):
    if isinstance(C, SupportBody):
        return
    if C.kind == "ball":
        ok = abs(C.center[-1]) <= 1e-12
    else:
        V = C.vertices * np.append(np.ones(C.dim - 1), -1.0)
        ok = all(np.min(np.abs(C.vertices - v).max(axis=1)) <= 1e-12 for v in V)
    if not ok:
        raise GridError("subgraph dilations need a body symmetric in the last coordinate")


def column_dilation_volume(f: GridFunction, a: float, C, e: float) -> float:
    """``|E + eC| - |E|`` for ``E = {(x, t) : a <= t <= f(x)}`` with columns over cells."""
    h, n = f.h, f.dim
    A = f.values >= a
    box = GridSet(f.grid, A).bbox()
    if box is None:
        return 0.0
    offs, tau = _column_halfheights(C, e, h, n)
    R = int(np.abs(offs).max()) if offs.size else 0
    win = tuple(slice(int(lo), int(hi) + 1) for lo, hi in zip(box[0], box[1]))
    fa = np.pad(f.values[win], R)
    Aw = np.pad(A[win], R)
    if fa.size * len(offs) > COLUMN_BUDGET:
        raise GridError("subgraph dilation exceeds the work budget")
    top = shift_max(np.where(Aw, fa, -np.inf), offs, tau)
    reach = shift_max(np.where(Aw, 0.0, -np.inf), offs, tau)
    ok = np.isfinite(top)
    vol_dil = np.sum(np.where(ok, top - (a - reach), 0.0)) * h ** n
    vol = np.sum(np.where(Aw, fa - a, 0.0)) * h ** n
    return float(vol_dil - vol)


def subgraph_content(f: GridFunction, a: float, C, eps=None, method: str = "polynomial"):
    """Dilation estimate of the content of ``K_f ∩ {t >= a}`` and the graph integral.

    Returns ``(ContentEstimate, graph_integral)`` where the graph integral is
    ``sum_{f > a} h_C(-grad f, 1) h^n + h_C(0, -1) |{f >= a}|``.
    """
    if not a > 0:
        raise GridError("level must be positive")
    if C.dim != f.dim + 1:
        raise GridError("the body must live one dimension above the grid")
    _check_t_symmetric(C)
    if eps is None:
        eps = np.array(SUBGRAPH_RADII, float) * f.h / horizontal_reach(C)
    eps = np.asarray(eps, float)
    D = np.array([column_dilation_volume(f, a, C, e) for e in eps])
    est = _finish(eps, D, method, f.dim + 1, top=C.volume())
    return est, graph_integral(f, a, C)


def graph_integral(f: GridFunction, a: float, C) -> float:
    g = gradient(f)
    n = f.dim
    nu = np.concatenate([-g, np.ones(g.shape[:-1] + (1,))], axis=-1)
    hc = C.support(nu)
    down = np.zeros(n + 1)
    down[-1] = -1.0
    w = f.grid.cell_volume
    return float(np.sum(hc[f.values > a]) * w + C.support(down) * np.sum(f.values >= a) * w)
