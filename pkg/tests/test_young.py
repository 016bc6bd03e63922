import numpy as np
import pytest
from hypothesis import given, strategies as st

from rearrangelab import convex as CV
from rearrangelab import young as Y
from rearrangelab.grid import Grid, GridFunction
from rearrangelab import gridfn as G

VARIANTS = [Y.Power(1), Y.Power(2), Y.Power(4.5), Y.Power(2, 0.5), Y.SqrtShift(), Y.PhiMin(), Y.PhiMax(),
            Y.Truncated(Y.Power(2), 1.0), Y.Truncated(Y.SqrtShift(), 2.0),
            Y.PiecewiseLinear(((0, 0), (1, 0.5), (2, 2)), tail_slope=3.0)]


RHO = Y.CONJ_GRID[1] / Y.CONJ_GRID[0] - 1  # relative step of the conjugation grid


def dense_conjugate(phi, t, s=np.linspace(0, 60, 600_001)):
    """Oracle: brute-force supremum on a fine uniform grid."""
    v = phi(s)
    ok = np.isfinite(v)
    return np.array([np.max(s[ok] * ti - v[ok]) for ti in np.atleast_1d(t)])


def test_eval_examples():
    assert Y.Power(2)(3.0) == 9.0
    assert Y.PhiMin()(0.5) == 0.0 and Y.PhiMin()(3.0) == 2.0
    assert Y.PhiMax()(2.0) == np.inf
    assert Y.PhiMax()(1.0) == 1.0  # left-continuous at the jump


@pytest.mark.parametrize("phi", VARIANTS, ids=lambda p: str(p.literal()))
def test_midpoint_convexity(phi, rng):
    s, t = rng.uniform(0, 5, 10_000), rng.uniform(0, 5, 10_000)
    a, b, m = phi(s), phi(t), phi(0.5 * (s + t))
    ok = np.isfinite(a) & np.isfinite(b)
    assert np.all(m[ok] <= 0.5 * (a[ok] + b[ok]) + 1e-12)
    assert phi(0.0) == 0.0 and phi.is_nontrivial()


def test_min_max_are_a_conjugate_pair():
    t = np.linspace(0, 5, 1001)
    for a, b in ((Y.PhiMin(), Y.PhiMax()), (Y.PhiMax(), Y.PhiMin())):
        c = Y.conjugate(a)
        assert np.array_equal(c(t), b(t))


def test_identity_conjugate_is_zero_then_cap():
    # sup_s (t - 1) s is 0 on [0, 1] and infinite beyond
    c = Y.conjugate(Y.Power(1))
    assert c(0.5) == 0.0 and c(1.0) == 0.0 and c(1.0001) == np.inf


def test_power_conjugate_closed_form():
    t = np.linspace(0, 4, 41)
    for p in (1.5, 2, 3):
        q = p / (p - 1)
        expect = (p - 1) * (t / p) ** q
        assert np.allclose(Y.conjugate(Y.Power(p))(t), expect, rtol=1e-12, atol=1e-14)
        assert np.allclose(dense_conjugate(Y.Power(p), t), expect, atol=1e-3)


def test_half_square_is_self_conjugate():
    knots = tuple((s, s * s / 2) for s in np.linspace(0, 20, 2001))
    phi = Y.PiecewiseLinear(knots, tail_slope=20.0)
    t = np.linspace(0, 10, 101)
    # chordal interpolation with step 0.01 is off by at most step^2/8 in Psi
    assert np.max(np.abs(Y.conjugate(phi)(t) - t * t / 2)) <= 0.01 ** 2 / 8 + 1e-12


@pytest.mark.parametrize("phi", VARIANTS, ids=lambda p: str(p.literal()))
def test_young_inequality(phi, rng):
    psi = Y.conjugate(phi)
    s, t = rng.uniform(0, 4, 2000), rng.uniform(0, 4, 2000)
    rhs = phi(s) + psi(t)
    # a sampled conjugate misses the maximiser by one grid step
    tol = RHO * s * t if isinstance(psi, Y.SampledConjugate) else 1e-9
    assert np.all(s * t <= rhs + tol + 1e-9 * (1 + np.where(np.isfinite(rhs), rhs, 0)))


@pytest.mark.parametrize("phi", [Y.Power(2), Y.SqrtShift(), Y.Truncated(Y.Power(2), 1.0)],
                         ids=lambda p: str(p.literal()))
def test_biconjugation(phi):
    t = np.linspace(0, 3, 31)
    cc = Y.SampledConjugate(Y.SampledConjugate(phi))
    # two sampled suprema, each off by at most one grid step in the maximiser
    tol = 2 * RHO * t * phi.right_derivative(t) + 1e-9
    assert np.all(np.abs(cc(t) - phi(t)) <= tol)


def test_sampled_conjugate_against_dense_oracle():
    phi = Y.SqrtShift()
    t = np.linspace(0, 0.99, 12)
    assert np.allclose(Y.SampledConjugate(phi)(t), dense_conjugate(phi, t), atol=1e-4)
    assert np.allclose(Y.SampledConjugate(phi)(t), 1 - np.sqrt(1 - t * t), atol=1e-5)


def test_truncation_example():
    phi = Y.truncate_phi_r(Y.Power(2), 1.0)
    t = np.array([0.0, 0.5, 0.99, 1.0, 1.5, 3.0])
    expect = np.where(t < 1, np.maximum(0, t * t - 1), np.maximum(0, 2 * t - 2))
    assert np.allclose(phi(t), expect)


@pytest.mark.parametrize("base,r", [(Y.Power(2), 1.0), (Y.Power(3), 0.7), (Y.SqrtShift(), 2.0),
                                    (Y.Power(1.5), 4.0)])
def test_truncation_bounds(base, r):
    phi = Y.Truncated(base, r)
    t = np.linspace(0, 10, 5001)
    assert np.all(phi(t) <= base(t) + 1e-12)
    d, t0 = phi.delta(), phi.zero_end()
    u = t[t >= t0]
    assert d > 0
    assert np.all(d * (u - t0) <= phi(u) + 1e-12)
    assert np.all(phi(u) <= (u - t0) / d + 1e-12)


def test_truncation_rejects_r_in_zero_set():
    with pytest.raises(Y.YoungError):
        Y.Truncated(Y.PhiMin(), 0.5)


def test_luxemburg_indicator():
    g = Grid(2, 0.05, 30)
    A = G.ball_set(g, 0.7)
    for p in (1, 2, 3.5):
        assert Y.luxemburg_norm(Y.Power(p), A.indicator()) == pytest.approx(A.measure() ** (1 / p), rel=1e-8)
    assert Y.luxemburg_norm(Y.Power(2), GridFunction(g, np.zeros(g.shape))) == 0.0


@given(st.integers(0, 10_000), st.floats(0.01, 100), st.sampled_from([Y.Power(1), Y.Power(3), Y.SqrtShift()]))
def test_luxemburg_homogeneous(seed, c, phi):
    rng = np.random.default_rng(seed)
    v = rng.random(50)
    a = Y.luxemburg_norm(phi, (c * v, 0.01))
    b = Y.luxemburg_norm(phi, (v, 0.01))
    assert a == pytest.approx(c * b, rel=1e-8)


@given(st.integers(0, 10_000), st.sampled_from([Y.Power(2), Y.SqrtShift(), Y.PhiMin()]))
def test_luxemburg_unit_ball_equivalence(seed, phi):
    rng = np.random.default_rng(seed)
    v = rng.random(40) * rng.uniform(0.1, 5)
    modular = float(np.sum(phi(v)) * 0.05)
    norm = Y.luxemburg_norm(phi, (v, 0.05))
    if abs(modular - 1) > 1e-6:
        assert (norm <= 1) == (modular <= 1)


PHI_BODIES = [(Y.Power(2), CV.unit_ball(2), 1.0), (Y.Power(1), CV.unit_ball(2), 2.0),
              (Y.SqrtShift(), CV.square(1.0), 1.5), (Y.Power(3), CV.hexagon_of_area(np.pi), 0.8)]


@pytest.mark.parametrize("phi,K,M", PHI_BODIES)
def test_phi_body_top_identity(phi, K, M, rng):
    C = Y.build_phi_body(phi, K, M)
    y = rng.normal(size=(4000, 2))
    y = y[K.support(y) <= M][:1000]
    assert len(y) >= 300
    x = np.concatenate([y, np.ones((len(y), 1))], 1)
    assert np.allclose(C.support(x), 1 + C.b * phi(K.support(y)), atol=1e-9, rtol=0)
    assert C.support(np.array([0, 0, 1.0])) == pytest.approx(1.0)
    assert C.support(np.array([0, 0, -1.0])) == pytest.approx(1.0)
    assert 1 + C.b * C.q > 0


@pytest.mark.parametrize("phi,K,M", PHI_BODIES)
def test_phi_body_is_a_support_function(phi, K, M, rng):
    C = Y.build_phi_body(phi, K, M)
    x, z = rng.normal(size=(2000, 3)), rng.normal(size=(2000, 3))
    lam = rng.uniform(0.1, 10, (2000, 1))
    assert np.allclose(C.support(lam * x), lam[:, 0] * C.support(x), rtol=1e-12)
    hx, hz, hs = C.support(x), C.support(z), C.support(x + z)
    assert np.all(hs <= (hx + hz) * (1 + 1e-9) + 1e-12)


def test_phi_body_example_branches():
    C = Y.build_phi_body(Y.Power(2), CV.unit_ball(2), 1.0)
    y = np.array([0.6, 0.0])
    assert C.support(np.array([0.6, 0.0, 1.0])) == pytest.approx(1 + C.b * 0.36)
    # cylinder branch beyond h_K(y) = M |t|
    assert C.support(np.array([3.0, 0.0, 1.0])) == pytest.approx(C.b * C.m * 3 + (1 + C.b * C.q))
    del y


def section_support(C, u, s):
    """Support of the section {t = s} of C in the horizontal direction u: inf_w h_C(u, w) - w s."""
    from scipy.optimize import minimize_scalar
    f = lambda w: float(C.support(np.array([*u, w]))) - w * s
    ws = np.linspace(-60, 60, 4801)
    vals = C.support(np.column_stack([np.tile(u, (len(ws), 1)), ws])) - ws * s
    j = int(np.argmin(vals))
    res = minimize_scalar(f, bounds=(ws[max(j - 1, 0)], ws[min(j + 1, len(ws) - 1)]), method="bounded",
                          options={"xatol": 1e-12})
    return min(res.fun, vals[j])


@pytest.mark.parametrize("phi,K,M", PHI_BODIES)
def test_phi_body_sections_are_dilates(phi, K, M):
    C = Y.build_phi_body(phi, K, M)
    ang = np.linspace(0, 2 * np.pi, 12, endpoint=False) + 0.1
    u = np.stack([np.cos(ang), np.sin(ang)], 1)
    for s in (-0.9, -0.3, 0.0, 0.5, 0.95):
        lam = C.section_radius(s)
        got = np.array([section_support(C, v, s) for v in u])
        assert np.allclose(got, lam * K.support(u), atol=1e-6)
