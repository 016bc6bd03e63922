"""Young functions: evaluation, right derivatives, conjugates, truncations,
Luxemburg norms and the convex body in R^{n+1} whose support function encodes
a Young function.

A Young function is convex, left-continuous, maps [0, inf) to [0, inf] and
vanishes at 0.  ``inf`` is a legitimate value everywhere in this module.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar

from .convex import ConvexBody

INF = np.inf
# sampling grid for conjugates without a closed form
CONJ_GRID = np.geomspace(1e-6, 1e6, 4096)


class YoungError(ValueError):
    pass


def _as_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise YoungError("Young functions are evaluated at nonnegative arguments only")
    return t


class YoungFunction:
    """Base class; subclasses implement ``_eval`` and ``_dright`` on arrays."""

    def __call__(self, t):
        t = _as_t(t)
        out = self._eval(t)
        return out if out.ndim else float(out)

    def right_derivative(self, t):
        t = _as_t(t)
        out = self._dright(t)
        return out if out.ndim else float(out)

    # sup{t : phi(t) = 0} and sup{t : phi(t) < inf}
    def zero_end(self) -> float:
        return 0.0

    def finite_end(self) -> float:
        return INF

    def is_nontrivial(self) -> bool:
        """Neither identically zero nor identically infinite on (0, inf)."""
        return self.zero_end() < INF and self.finite_end() > 0

    def conjugate(self) -> "YoungFunction":
        return SampledConjugate(self)

    def literal(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Power(YoungFunction):
    """``coef * t**p``; the default has no normalising factor."""

    p: float
    coef: float = 1.0

    def __post_init__(self):
        if not self.p >= 1:
            raise YoungError(f"power must be >= 1, got {self.p}")
        if not self.coef > 0:
            raise YoungError(f"coefficient must be positive, got {self.coef}")

    def _eval(self, t):
        return self.coef * t ** self.p

    def _dright(self, t):
        if self.p == 1:
            return np.full_like(t, self.coef)
        return self.coef * self.p * t ** (self.p - 1)

    def conjugate(self):
        c, p = self.coef, self.p
        if p == 1:
            # sup_s (t - c) s: zero up to c, infinite beyond
            return PiecewiseLinear(((0.0, 0.0), (c, 0.0)), tail_slope=None)
        q = p / (p - 1)
        return Power(q, (p - 1) * c * (c * p) ** (-q))

    def literal(self):
        return {"power": self.p} if self.coef == 1.0 else {"power": self.p, "coef": self.coef}


@dataclass(frozen=True)
class PiecewiseLinear(YoungFunction):
    """Linear interpolation of ``knots`` starting at (0, 0).

    Beyond the last knot the function continues with ``tail_slope``, or is
    ``+inf`` when ``tail_slope`` is None (left-continuous jump).
    """

    knots: tuple
    tail_slope: float | None = None

    def __post_init__(self):
        K = np.asarray(self.knots, dtype=float)
        if K.ndim != 2 or K.shape[1] != 2 or K.shape[0] < 1:
            raise YoungError("knots must be a list of (t, value) pairs")
        if K[0, 0] != 0 or K[0, 1] != 0:
            raise YoungError("the first knot must be (0, 0)")
        if np.any(np.diff(K[:, 0]) <= 0):
            raise YoungError("knot abscissae must be strictly increasing")
        s = self.slopes()
        if np.any(s < 0) or np.any(np.diff(s) < -1e-12):
            raise YoungError("slopes must be nonnegative and nondecreasing (convexity)")
        object.__setattr__(self, "knots", tuple(map(tuple, K.tolist())))

    def slopes(self) -> np.ndarray:
        K = np.asarray(self.knots)
        s = np.diff(K[:, 1]) / np.diff(K[:, 0]) if len(K) > 1 else np.zeros(0)
        if self.tail_slope is not None:
            s = np.append(s, self.tail_slope)
        return s

    def _eval(self, t):
        K = np.asarray(self.knots)
        tl, vl = K[-1]
        inner = np.interp(t, K[:, 0], K[:, 1])
        if self.tail_slope is None:
            tail = np.where(t > tl, INF, vl)
        else:
            tail = vl + self.tail_slope * (t - tl)
        return np.where(t <= tl, inner, tail)

    def _dright(self, t):
        K = np.asarray(self.knots)
        s = np.diff(K[:, 1]) / np.diff(K[:, 0]) if len(K) > 1 else np.zeros(0)
        last = INF if self.tail_slope is None else self.tail_slope
        seg = np.searchsorted(K[:, 0], t, side="right") - 1
        allslopes = np.append(s, last)
        return allslopes[np.clip(seg, 0, len(allslopes) - 1)]

    def zero_end(self):
        K = np.asarray(self.knots)
        j = int(np.nonzero(K[:, 1] == 0)[0][-1])
        if j < len(K) - 1 or self.tail_slope is None or self.tail_slope > 0:
            return float(K[j, 0])
        return INF

    def finite_end(self):
        return float(np.asarray(self.knots)[-1, 0]) if self.tail_slope is None else INF

    def conjugate(self):
        # breakpoints become slopes and slopes become breakpoints
        K = np.asarray(self.knots)
        t, v = K[:, 0], K[:, 1]
        s = self.slopes()
        pts = [(0.0, 0.0)]
        for i in range(1, len(K)):
            pts.append((s[i - 1], t[i] * s[i - 1] - v[i]))
        if self.tail_slope is not None:
            pts.append((self.tail_slope, t[-1] * self.tail_slope - v[-1]))
            tail = None
        else:
            tail = float(t[-1])
        dedup = [pts[0]]
        for u, val in pts[1:]:
            if u > dedup[-1][0]:
                dedup.append((float(u), float(val)))
        return PiecewiseLinear(tuple(dedup), tail_slope=tail)

    def literal(self):
        if self == PhiMin():
            return {"phi_min": True}
        if self == PhiMax():
            return {"phi_max": True}
        return {"piecewise": [list(k) for k in self.knots], "tail_slope": self.tail_slope}


def PhiMin() -> PiecewiseLinear:
    """``(t - 1)^+``."""
    return PiecewiseLinear(((0.0, 0.0), (1.0, 0.0)), tail_slope=1.0)


def PhiMax() -> PiecewiseLinear:
    """``t`` on [0, 1] and ``+inf`` beyond."""
    return PiecewiseLinear(((0.0, 0.0), (1.0, 1.0)), tail_slope=None)


@dataclass(frozen=True)
class SqrtShift(YoungFunction):
    """``sqrt(1 + t^2) - 1``, the graph-area integrand."""

    def _eval(self, t):
        return np.sqrt(1.0 + t * t) - 1.0

    def _dright(self, t):
        return t / np.sqrt(1.0 + t * t)

    def literal(self):
        return {"sqrt_shift": True}


@dataclass(frozen=True)
class Truncated(YoungFunction):
    """``max(0, L_r - 1/r)`` where ``L_r`` agrees with ``base`` below ``r`` and
    continues affinely with slope ``base'(r+)`` from ``r`` on."""

    base: YoungFunction
    r: float
    t0: float = field(init=False, repr=False, compare=False)
    slope_r: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r = float(self.r)
        if not r > 0:
            raise YoungError("truncation level must be positive")
        phir = self.base(r)
        if not np.isfinite(phir):
            raise YoungError(f"base function is infinite at r={r}")
        if not r > self.base.zero_end():
            raise YoungError("r must exceed the zero set of the base function")
        m = float(self.base.right_derivative(r))
        object.__setattr__(self, "slope_r", m)
        object.__setattr__(self, "t0", self._solve_t0())

    def _lam(self, t):
        r = self.r
        below = self.base(np.minimum(t, r))
        return np.where(t < r, below, self.base(r) + self.slope_r * (t - r))

    def _solve_t0(self) -> float:
        r, target = self.r, 1.0 / self.r
        fr = self.base(r)
        if fr <= target:
            return r + (target - fr) / self.slope_r
        lo, hi = 0.0, r
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.base(mid) <= target:
                lo = mid
            else:
                hi = mid
        return lo

    def _eval(self, t):
        return np.maximum(0.0, self._lam(t) - 1.0 / self.r)

    def _dright(self, t):
        d = np.where(t < self.r, self.base.right_derivative(np.minimum(t, self.r)), self.slope_r)
        return np.where(t >= self.t0, d, 0.0)

    def zero_end(self):
        return self.t0

    def delta(self) -> float:
        """Constant with ``delta (t - t0) <= phi_r(t) <= (t - t0) / delta`` for t >= t0."""
        return min(float(self.right_derivative(self.t0)), 1.0 / self.slope_r)

    def literal(self):
        return {"truncated": {"base": self.base.literal(), "r": self.r}}


@dataclass(frozen=True, eq=False)
class SampledConjugate(YoungFunction):
    """``sup_s (s t - phi(s))`` over the fixed geometric grid ``CONJ_GRID`` plus s = 0.

    Returns ``inf`` when the supremum is attained at the top of the grid.
    """

    base: YoungFunction

    def _table(self):
        s = np.concatenate([[0.0], CONJ_GRID])
        v = self.base(s)
        return s, v

    def _eval(self, t):
        s, v = self._table()
        ok = np.isfinite(v)
        s, v = s[ok], v[ok]
        flat = np.atleast_1d(t).ravel()
        out = np.empty_like(flat)
        for i, ti in enumerate(flat):
            g = s * ti - v
            j = int(np.argmax(g))
            out[i] = INF if (j == len(s) - 1 and s[j] == CONJ_GRID[-1]) else g[j]
        return out.reshape(np.shape(t))

    def _dright(self, t):
        s, v = self._table()
        ok = np.isfinite(v)
        s, v = s[ok], v[ok]
        flat = np.atleast_1d(t).ravel()
        out = np.array([s[int(np.argmax(s * ti - v))] for ti in flat])
        return out.reshape(np.shape(t))

    def conjugate(self):
        return self.base

    def literal(self):
        return {"conjugate": self.base.literal()}


def conjugate(phi: YoungFunction) -> YoungFunction:
    if not phi.is_nontrivial():
        raise YoungError("conjugate of a trivial Young function")
    return phi.conjugate()


def truncate_phi_r(phi: YoungFunction, r: float) -> Truncated:
    return Truncated(phi, r)


def evaluate(phi: YoungFunction, t):
    return phi(t)


# ---- Luxemburg norm --------------------------------------------------------

def luxemburg_norm(phi: YoungFunction, f, max_doublings: int = 200, rtol: float = 1e-10) -> float:
    """``inf{lam > 0 : sum phi(|f|/lam) h^n <= 1}`` by bisection.

    ``f`` is a GridFunction or an ``(values, cell_volume)`` pair.
    """
    if hasattr(f, "values"):
        vals, w = np.abs(np.asarray(f.values, float)), f.grid.cell_volume
    else:
        vals, w = np.abs(np.asarray(f[0], float)), float(f[1])
    vals = vals[vals > 0]
    if vals.size == 0:
        return 0.0

    def F(lam):
        return float(np.sum(phi(vals / lam)) * w)

    hi = float(vals.max())
    for _ in range(max_doublings):
        if F(hi) <= 1:
            break
        hi *= 2
    else:
        return INF
    lo = hi
    for _ in range(max_doublings):
        lo *= 0.5
        if F(lo) > 1:
            break
    else:
        return lo
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if F(mid) <= 1:
            hi = mid
        else:
            lo = mid
    return hi


# ---- the representing body -----------------------------------------------

@dataclass(frozen=True, eq=False)
class SupportBody:
    """Convex body in R^{n+1} built from a Young function, a body K in R^n and a
    cut-off M.  Its support function is

        h(y, t) = |t| (1 + b phi(h_K(y)/|t|))      if |t| >= h_K(y)/M
                = b m h_K(y) + (1 + b q) |t|         otherwise,

    and every horizontal section at height s in [-1, 1] is ``lam(s) * K``.
    """

    phi: YoungFunction
    K: ConvexBody
    M: float
    b: float
    m: float
    q: float
    _tgrid: np.ndarray = field(default=None, repr=False)
    _lam: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.K.dim + 1

    def psi(self, u):
        """Extension of phi used in the construction: phi below M, affine above."""
        u = np.asarray(u, dtype=float)
        return np.where(u <= self.M, self.phi(np.minimum(u, self.M)), self.m * u + self.q)

    def support(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise YoungError(f"dimension mismatch for body in R^{self.dim}")
        y, t = x[..., :-1], np.abs(x[..., -1])
        hk = self.K.support(y)
        cyl = self.b * self.m * hk + (1 + self.b * self.q) * t
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(t > 0, hk / np.where(t > 0, t, 1.0), 0.0)
            top = t * (1 + self.b * self.phi(np.minimum(ratio, self.M)))
        return np.where(t * self.M >= hk, top, cyl)

    def _H1(self, sigma):
        # support at (y, sigma) for any y with h_K(y) = 1
        sigma = abs(sigma)
        if sigma * self.M >= 1:
            return sigma * (1 + self.b * float(self.phi(1.0 / sigma)))
        return self.b * self.m + (1 + self.b * self.q) * sigma

    def section_radius(self, s: float) -> float:
        """``lam(s)`` with ``C ∩ {t = s} = lam(s) K``; zero outside [-1, 1]."""
        s = abs(float(s))
        if s > 1:
            return 0.0
        c = 1.0 - s
        cap = self.b * self.m
        if c == 0:
            # inf_u psi(u)/u = psi'(0+)
            return min(cap, self.b * float(self.phi.right_derivative(0.0)))

        def g(logu):
            u = np.exp(logu)
            return (c + self.b * float(self.psi(u))) / u

        best = cap
        lo, hi = np.log(1e-12), np.log(1e12)
        grid = np.linspace(lo, hi, 241)
        vals = np.array([g(v) for v in grid])
        j = int(np.argmin(vals))
        a, bb = grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)]
        res = minimize_scalar(g, bounds=(a, bb), method="bounded", options={"xatol": 1e-12})
        return float(min(best, res.fun, vals[j]))

    def _table(self):
        if self._tgrid is None:
            t = np.linspace(0.0, 1.0, 2001)
            lam = np.array([self.section_radius(v) for v in t])
            object.__setattr__(self, "_tgrid", t)
            object.__setattr__(self, "_lam", lam)
        return self._tgrid, self._lam

    def contains(self, x, scale: float = 1.0, slack: float = 1e-12) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y, t = x[..., :-1], x[..., -1] / scale
        t_tab, lam_tab = self._table()
        lam = np.interp(np.abs(t), t_tab, lam_tab, right=-1.0)
        return (np.abs(t) <= 1 + slack) & (self.K.gauge(y) <= scale * lam + slack)

    def vertical_extent(self, v) -> tuple:
        """Column ``{t : (v, t) in C}`` as (lo, hi); NaN where empty."""
        g = np.asarray(self.K.gauge(np.asarray(v, dtype=float)), dtype=float)
        t_tab, lam_tab = self._table()
        # lam is nonincreasing in t, so {t >= 0 : lam(t) >= g} = [0, top]
        k = np.searchsorted(-lam_tab, -g, side="right")  # count of lam >= g
        k1 = np.clip(k, 1, len(t_tab) - 1)
        l0, l1 = lam_tab[k1 - 1], lam_tab[k1]
        w = np.where(l0 > l1, (l0 - g) / np.where(l0 > l1, l0 - l1, 1.0), 0.0)
        top = t_tab[k1 - 1] + np.clip(w, 0, 1) * (t_tab[k1] - t_tab[k1 - 1])
        top = np.where(k >= len(t_tab), 1.0, top)
        top = np.where(k == 0, np.nan, top)
        return -top, top

    def volume(self) -> float:
        t, lam = self._table()
        return float(2 * trapezoid(lam ** self.K.dim, t) * self.K.volume())


def build_phi_body(phi: YoungFunction, K: ConvexBody, M: float) -> SupportBody:
    """Body C with ``h_C(y, 1) = 1 + b phi(h_K(y))`` whenever ``h_K(y) <= M``."""
    if not M > 0:
        raise YoungError("M must be positive")
    if not np.isfinite(phi(M)):
        raise YoungError("phi must be finite on [0, M]")
    if phi.zero_end() == INF:
        raise YoungError("phi vanishes identically")
    m = float(phi.right_derivative(M))
    if m <= 0:
        # M inside the zero set: continue with the first positive slope beyond it
        z = phi.zero_end()
        m = float(phi.right_derivative(z))
        if m <= 0:
            m = float(phi.right_derivative(z * (1 + 1e-9) + 1e-12))
        if m <= 0:
            raise YoungError("could not find a positive slope for the affine extension")
    q = float(phi(M)) - m * M
    if q > 1e-12 * max(1.0, abs(m * M)):
        raise YoungError("affine extension breaks convexity (q > 0)")
    q = min(q, 0.0)
    b = 1.0 if q == 0 else min(1.0, -1.0 / (2.0 * q))
    return SupportBody(phi=phi, K=K, M=float(M), b=b, m=m, q=q)
