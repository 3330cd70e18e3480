import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from hypcaloron.errors import SingularPointError, ValidationError
from hypcaloron.geometry import PhysicalParams
from hypcaloron.grid import StripGrid, integrate_array
from hypcaloron.sources import (CutoffSpec, SourceData, VortexConfig, cutoff, eval_expu0, eval_g, eval_U0,
                                loop_winding, singular_split, vortex_phase)

BETA = 2.0
K = 2.0 * math.pi / BETA
P = PhysicalParams(2.0, BETA)
ONE = VortexConfig(((1.0, 1.0),), BETA)  # p = (1, beta/2)


def at_chord(d, center=(1.0, 1.0)):
    """Point displaced in r so that the cylinder chord to ``center`` equals d."""
    return center[0] + (2.0 / K) * math.asinh(0.5 * K * d), center[1]


def test_chord_matches_euclid_locally():
    src = SourceData(ONE)
    ang = np.linspace(0, 2 * np.pi, 17)
    for rad in (1e-3, 1e-2):
        q = src.chord2(1.0 + rad * np.cos(ang), 1.0 + rad * np.sin(ang))[..., 0]
        assert np.allclose(q, rad**2, rtol=rad**2 * K**2)


def test_U0_examples():
    r, t = at_chord(1.0)
    assert eval_U0(ONE, r, t) == pytest.approx(-math.log(2.0), rel=1e-14)
    assert eval_U0(VortexConfig((), BETA), 0.7, 0.3) == 0.0
    double = VortexConfig(((1.0, 1.0), (1.0, 1.0)), BETA)
    assert eval_U0(double, r, t) == pytest.approx(-2.0 * math.log(2.0), rel=1e-14)
    assert eval_U0(ONE, 1.0, 1.0) == -np.inf


def test_expu0_examples():
    spec = CutoffSpec.default_for(ONE)
    assert eval_expu0(ONE, spec, 1.0, 1.0) == 0.0
    assert eval_expu0(ONE, spec, 0.1, 0.3) == 1.0
    assert eval_expu0(ONE, spec, 5.0, 0.3) == 1.0
    r, t = at_chord(1.0)
    assert spec.r1 <= r <= spec.r2
    assert eval_expu0(ONE, spec, r, t) == pytest.approx(0.5, rel=1e-14)


def test_g_examples():
    spec = CutoffSpec.default_for(ONE)
    assert eval_g(ONE, spec, 1.0, 1.0) == pytest.approx(4.0, rel=1e-14)
    assert eval_g(ONE, spec, 0.2, 0.0) == 0.0
    assert eval_g(ONE, spec, 4.5, 0.0) == 0.0
    assert np.all(eval_g(VortexConfig((), BETA), CutoffSpec.default_for(VortexConfig((), BETA)),
                         np.linspace(0, 5, 11), 0.0) == 0.0)


def test_singular_split_examples():
    r, t = at_chord(1.0)
    s, rem = singular_split(ONE, r, t)
    assert s == pytest.approx(0.0, abs=1e-14)
    assert rem == pytest.approx(-math.log(2.0), rel=1e-14)
    r, t = at_chord(math.e)
    s, _ = singular_split(ONE, r, t)
    assert s == pytest.approx(2.0, rel=1e-14)


def test_singular_split_reconstruction(rng):
    cfg = VortexConfig(((1.0, 0.2), (1.3, 1.1), (1.3, 1.1)), BETA)
    r = rng.uniform(0.05, 6.0, 100)
    t = rng.uniform(0.0, BETA, 100)
    s, rem = singular_split(cfg, r, t)
    assert np.max(np.abs(s + rem - eval_U0(cfg, r, t))) < 1e-12


def test_phase_examples():
    empty = VortexConfig((), BETA)
    assert np.all(vortex_phase(empty, P, np.array([0.5, 2.0]), np.array([0.1, 1.7])) == 0.0)
    src = SourceData(VortexConfig(((1.0, 0.0),), BETA))
    h = 14.0 / 512
    assert round(loop_winding(src, (1.0, 0.0), min(h, 0.25))) == 1
    with pytest.raises(SingularPointError):
        src.phase(1.0, 0.0)
    with pytest.raises(ValidationError):
        vortex_phase(ONE, PhysicalParams(2.0, 3.0), 1.0, 0.5)


def test_phase_matches_uniformizing_map(rng):
    cfg = VortexConfig(((1.0, 0.3), (1.4, 1.5)), BETA)
    src = SourceData(cfg)
    r = rng.uniform(0.1, 5.0, 200)
    t = rng.uniform(0.0, BETA, 200)
    z = r + 1j * t
    ref = sum(np.angle(np.exp(K * z) - np.exp(K * (rj + 1j * tj))) for rj, tj in cfg.points)
    diff = (src.phase(r, t) - ref + np.pi) % (2 * np.pi) - np.pi
    assert np.max(np.abs(diff)) < 1e-10


def test_large_and_small_contour_windings():
    pts = ((1.0, 0.0), (1.2, 0.7), (1.5, 1.4))
    src = SourceData(VortexConfig(pts, BETA))
    t = BETA * np.arange(400) / 400
    from hypcaloron.sources import winding_number

    # the loop r = const in the t direction; the winding counts the zeros with r_j < r
    assert round(winding_number(src.phase(np.full(400, src.cutoff.r_hi), t))) == 3
    assert round(winding_number(src.phase(np.full(400, src.cutoff.r_lo), t))) == 0


def test_windings_match_multiplicity():
    from hypcaloron.observables import vortex_windings

    cfg = VortexConfig(((1.0, 0.5), (1.0, 0.5), (1.5, 1.5)), BETA)
    for w in vortex_windings(SourceData(cfg)):
        assert w["winding"] == w["multiplicity"]


def test_distinctness_validation():
    with pytest.raises(ValidationError):
        VortexConfig(((1.0, 0.5), (1.0, 0.5 + 1e-9)), BETA)
    with pytest.raises(ValidationError):
        VortexConfig(((1.0, 0.0), (1.0, BETA - 1e-9)), BETA)  # close across the periodic seam
    VortexConfig(((1.0, 0.5), (1.0, 0.5)), BETA)
    for bad in (((0.0, 0.1),), ((1.0, -0.1),), ((1.0, BETA),), ((float("nan"), 0.0),)):
        with pytest.raises(ValidationError):
            VortexConfig(bad, BETA)


def test_cutoff_spec_validation():
    with pytest.raises(ValidationError):
        CutoffSpec(0.5, 0.4, 2.0, 4.0)
    with pytest.raises(ValidationError):
        CutoffSpec(0.25, 0.9, 2.0, 4.0, order=1)
    with pytest.raises(ValidationError):
        SourceData(ONE, CutoffSpec(0.1, 1.2, 2.0, 4.0))  # vortex off the plateau


def test_cutoff_shape():
    spec = CutoffSpec(0.25, 0.9, 2.0, 4.0)
    r = np.linspace(0, 5, 2001)
    eta, d1, d2 = cutoff(spec, r)
    assert np.all((eta >= 0) & (eta <= 1))
    assert np.all(eta[(r <= 0.25) | (r >= 4.0)] == 0)
    assert np.all(eta[(r >= 0.9) & (r <= 2.0)] == 1)
    assert np.all(np.diff(eta[r <= 2.0]) >= 0) and np.all(np.diff(eta[r >= 0.9]) <= 0)
    # derivatives agree with finite differences of eta
    h = r[1] - r[0]
    assert np.max(np.abs(np.gradient(eta, h)[1:-1] - d1[1:-1])) < 1e-3
    assert np.max(np.abs(np.gradient(d1, h)[1:-1] - d2[1:-1])) < 2e-2


# -- invariants -------------------------------------------------------------------

def _admissible(pts):
    try:
        VortexConfig(tuple(pts), BETA)
    except ValidationError:
        return False
    return True


configs = st.lists(st.tuples(st.floats(0.8, 1.6), st.floats(0.0, BETA * (1 - 1e-9))),
                   min_size=1, max_size=3).filter(_admissible)


@given(pts=configs, r=st.floats(0.0, 10.0), t=st.floats(0.0, BETA), shift=st.integers(-3, 3))
def test_periodicity(pts, r, t, shift):
    src = SourceData(VortexConfig(tuple(pts), BETA))
    t2 = t + shift * BETA
    for f in (src.u0, src.expu0, src.g):
        a, b = float(f(np.array(r), np.array(t))), float(f(np.array(r), np.array(t2)))
        if np.isfinite(a):
            assert b == pytest.approx(a, rel=1e-12, abs=1e-12)


@given(pts=configs, r=st.floats(0.0, 20.0), t=st.floats(0.0, BETA))
def test_u0_and_expu0_ranges(pts, r, t):
    src = SourceData(VortexConfig(tuple(pts), BETA))
    assert src.u0(np.array(r), np.array(t)) <= 0.0
    e = src.expu0(np.array(r), np.array(t))
    assert 0.0 <= e <= 1.0
    spec = src.cutoff
    if r <= spec.r_lo or r >= spec.r_hi:
        assert src.g(np.array(r), np.array(t)) == 0.0
        assert e == 1.0


def test_expu0_zero_at_every_vortex():
    cfg = VortexConfig(((1.0, 0.5), (1.0, 0.5), (1.5, 1.5)), BETA)
    src = SourceData(cfg)
    r, t = cfg.array.T
    assert np.all(src.expu0(r, t) == 0.0)


def test_finite_at_random_points(rng):
    cfg = VortexConfig(((1.0, 0.0), (1.2, 0.9), (1.2, 0.9)), BETA)
    src = SourceData(cfg)
    r = rng.uniform(0.0, 12.0, 10**6)
    t = rng.uniform(0.0, BETA, 10**6)
    assert np.all(np.isfinite(src.g(r, t)))
    assert np.all(np.isfinite(src.expu0(r, t)))
    assert np.all(np.isfinite(src.rho0(r, t)))


def test_g_is_minus_laplacian_of_u0(rng):
    # fourth-order central differences away from the vortices
    cfg = VortexConfig(((1.0, 0.3), (1.5, 1.2)), BETA)
    src = SourceData(cfg)
    h = 1e-3
    pts = []
    while len(pts) < 200:
        r = rng.uniform(0.2, 6.5)
        t = rng.uniform(0, BETA)
        if np.min(src.chord2(r, t)) > 0.05:
            pts.append((r, t))
    r, t = np.array(pts).T

    def d2(f, dr, dt):
        return (-f(r + 2 * dr, t + 2 * dt) + 16 * f(r + dr, t + dt) - 30 * f(r, t)
                + 16 * f(r - dr, t - dt) - f(r - 2 * dr, t - 2 * dt)) / (12 * h * h)

    lap = d2(src.u0, h, 0.0) + d2(src.u0, 0.0, h)
    scale = 1.0 + np.abs(src.g(r, t))
    assert np.max(np.abs(lap + src.g(r, t)) / scale) < 1e-4


def test_grad_u0_matches_differences(rng):
    src = SourceData(VortexConfig(((1.0, 0.3),), BETA))
    r = rng.uniform(0.3, 4.0, 100)
    t = rng.uniform(0.0, BETA, 100)
    keep = src.chord2(r, t)[..., 0] > 0.05
    r, t = r[keep], t[keep]
    h = 1e-5
    gr, gt = src.grad_u0(r, t)
    assert np.allclose(gr, (src.u0(r + h, t) - src.u0(r - h, t)) / (2 * h), rtol=1e-6, atol=1e-6)
    assert np.allclose(gt, (src.u0(r, t + h) - src.u0(r, t - h)) / (2 * h), rtol=1e-6, atol=1e-6)


def _g_integral(src, Nr=2048, Nt=256):
    grid = StripGrid(Nr, Nt, src.cutoff.r_hi + 0.5, BETA)
    R, T = grid.mesh()
    return integrate_array(src.g(R, T), grid)


@pytest.mark.parametrize("pts", [((1.0, 0.0),), ((1.0, 0.5), (1.0, 0.5)), ((1.0, 0.0), (1.5, 1.0), (1.2, 1.7))])
def test_g_integral_fine_grid(pts):
    src = SourceData(VortexConfig(pts, BETA))
    target = 4 * math.pi * src.N
    assert abs(_g_integral(src) / target - 1) < 1e-6


@given(pts=configs)
def test_g_integral_random_configs(pts):
    src = SourceData(VortexConfig(tuple(pts), BETA))
    target = 4 * math.pi * src.N
    assert abs(_g_integral(src, 1024, 256) / target - 1) < 1e-5


def test_g_integral_adaptive_quadrature():
    # independent check: the t-integral is done on a fine periodic rule (spectrally
    # accurate for a smooth periodic integrand), the r-integral adaptively by QUADPACK
    src = SourceData(VortexConfig(((1.0, 0.4),), BETA))
    t = BETA * np.arange(512) / 512
    spec = src.cutoff

    def gbar(r):
        return float(np.sum(src.g(np.full_like(t, r), t)) * BETA / 512)

    total = 0.0
    for a, b in ((spec.r_lo, spec.r1), (spec.r1, 1.0), (1.0, spec.r2), (spec.r2, spec.r_hi)):
        val, _ = quad(gbar, a, b, epsabs=1e-12, epsrel=1e-12, limit=400, points=None)
        total += val
    assert total == pytest.approx(4 * math.pi, rel=1e-8)
