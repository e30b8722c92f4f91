import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from pmclab import (
    Grid2DPair,
    Mode,
    OrderingViolation,
    RadialProfile,
    RadiusTooSmall,
    StackProblem,
    ah_energy,
    calibration_residual,
    cap_params,
    cap_profile,
    column_length,
    graph_area,
    grid_area,
    region_volume,
    steiner_symmetrize,
    touching_eps,
)
from pmclab.geometry import volume_weights

SQRT3 = math.sqrt(3.0)


def cap_area(c):
    R = 2.0 / c
    return 2.0 * math.pi * R * touching_eps(c)


def cap_region_volume(c, eps):
    """Slab below the rim plus the spherical-cap segment above it."""
    R = 2.0 / c
    h = touching_eps(c)
    return math.pi * (1.0 - eps) + math.pi * h * h * (R - h / 3.0)


# oracles built from quadrature rather than the closed forms above

def quad_area(c, eps):
    R = 2.0 / c

    def integrand(r):
        up = -r / math.sqrt(R * R - r * r)
        return 2.0 * math.pi * r * math.sqrt(1.0 + up * up)

    return quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)[0]


def quad_volume(c, eps):
    R = 2.0 / c

    def u(r):
        return math.sqrt(R * R - r * r) - math.sqrt(R * R - 1.0) - eps

    return quad(lambda r: 2.0 * math.pi * r * (u(r) + 1.0), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)[0]


def test_closed_forms_agree_with_quadrature():
    assert cap_area(1.0) == pytest.approx(quad_area(1.0, 0.4), abs=1e-11)
    assert cap_area(1.0) == pytest.approx(4 * math.pi * (2 - SQRT3), abs=1e-13)
    for eps in (0.4, 2 - SQRT3):
        assert cap_region_volume(1.0, eps) == pytest.approx(quad_volume(1.0, eps), abs=1e-11)


# --- RadialProfile -------------------------------------------------------------

def test_profile_rejects_bad_values():
    with pytest.raises(ValueError):
        RadialProfile(np.array([0.0, 1.5]))
    with pytest.raises(ValueError):
        RadialProfile(np.array([0.0, np.nan]))
    with pytest.raises(ValueError):
        RadialProfile(np.array([0.0]))
    with pytest.raises(ValueError):
        RadialProfile(np.array([0.0, -0.1]), boundary_value=-0.2)


def test_profile_is_immutable():
    p = RadialProfile.constant(-0.3, 4)
    with pytest.raises(ValueError):
        p.values[0] = 0.0
    assert p.n == 4 and p.boundary_value == -0.3


def test_profile_csv_round_trip_is_exact():
    p = cap_profile(1.0, 0.4, 37)
    text = p.to_csv()
    assert text.startswith("r,u\n") and text.endswith("\n") and "\r" not in text
    q = RadialProfile.from_csv(text)
    assert np.array_equal(p.values, q.values)


def test_profile_csv_rejects_bad_header():
    with pytest.raises(ValueError):
        RadialProfile.from_csv("x,u\n0,0\n1,0\n")


def test_problem_validation():
    with pytest.raises(ValueError):
        StackProblem(c=1, eps=0.0, n=10)
    with pytest.raises(ValueError):
        StackProblem(c=1, eps=1.0, n=10)
    with pytest.raises(ValueError):
        StackProblem(c=-1, eps=0.3, n=10)
    with pytest.raises(ValueError):
        StackProblem(c=1, eps=0.3, n=1)
    assert StackProblem(c=0, eps=0.3, n=10, mode="single").mode is Mode.SINGLE


# --- graph_area / region_volume -------------------------------------------------

@pytest.mark.parametrize("n", [2, 7, 100, 2000])
def test_flat_area_is_pi(n):
    assert graph_area(RadialProfile.constant(-0.4, n)) == pytest.approx(math.pi, abs=1e-14)


def test_cap_area():
    assert cap_area(1.0) == pytest.approx(3.3671489, abs=1e-7)
    assert abs(graph_area(cap_profile(1.0, 0.4, 2000)) - cap_area(1.0)) <= 5e-4


def test_cone_area():
    n = 1000
    r = np.arange(n + 1) / n
    # slope one, shifted to stay inside the cylinder
    cone = RadialProfile(r - 1.0)
    assert abs(graph_area(cone) - math.pi * math.sqrt(2.0)) <= 1e-6


def test_volume_weights_sum_to_pi():
    for n in (2, 3, 50, 2001):
        assert volume_weights(n).sum() == pytest.approx(math.pi, abs=1e-13)


def test_slab_volumes():
    assert region_volume(RadialProfile.constant(-0.4, 50)) == pytest.approx(0.6 * math.pi, abs=1e-14)
    assert region_volume(RadialProfile.constant(-1.0, 50)) == 0.0


def test_cap_volume_at_touching():
    eps = 2 - SQRT3
    vol = region_volume(cap_profile(1.0, eps, 2000))
    assert abs(vol - cap_region_volume(1.0, eps)) <= 1e-4


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.9, 0.9), min_size=3, max_size=40), st.floats(-0.09, 0.09))
def test_volume_linear_under_shift(vals, s):
    p = RadialProfile(np.array(vals))
    q = RadialProfile(np.array(vals) + s)
    assert region_volume(q) == pytest.approx(region_volume(p) + s * math.pi, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=2, max_size=40))
def test_area_projection_inequality(vals):
    p = RadialProfile(np.array(vals))
    a = graph_area(p)
    assert a >= math.pi - 1e-12
    steep = np.max(np.abs(p.slopes()))
    if steep == 0.0:
        assert a == pytest.approx(math.pi, abs=1e-13)
    if a - math.pi <= 1e-14:
        assert steep <= 1e-5


# --- ah_energy -----------------------------------------------------------------

def test_single_flat_energy():
    prob = StackProblem(c=0, eps=0.4, n=64, mode=Mode.SINGLE)
    e = ah_energy(prob, RadialProfile.constant(-0.4, 64))
    assert e.total == pytest.approx(math.pi, abs=1e-14)


def test_stack_cap_energy():
    prob = StackProblem(c=1, eps=0.4, n=2000, mode=Mode.STACK)
    e = ah_energy(prob, cap_profile(1.0, 0.4, 2000))
    expected = 2.0 * (4 * math.pi * (2 - SQRT3) - cap_region_volume(1.0, 0.4))
    assert abs(e.total - expected) <= 1e-3


def test_stack_is_twice_single():
    lower = cap_profile(0.7, 0.2, 301)
    single = ah_energy(StackProblem(0.7, 0.2, 301, Mode.SINGLE), lower)
    stack = ah_energy(StackProblem(0.7, 0.2, 301, Mode.STACK), lower)
    assert stack.total == pytest.approx(2.0 * single.total, rel=1e-15)
    assert stack.area == pytest.approx(2.0 * single.area, rel=1e-15)


def test_stack_ordering_violation():
    u = -0.3 * np.ones(11)
    u[4] = 0.2
    with pytest.raises(OrderingViolation):
        ah_energy(StackProblem(1, 0.3, 10), RadialProfile(u))


def test_membrane_ordering_violation():
    prob = StackProblem(1, 0.3, 10, Mode.MEMBRANE)
    lo = RadialProfile(np.r_[0.5, -0.3 * np.ones(10)])
    hi = RadialProfile(np.r_[0.4, 0.3 * np.ones(10)])
    with pytest.raises(OrderingViolation):
        ah_energy(prob, lo, hi)


def test_single_mode_rejects_upper():
    p = RadialProfile.constant(-0.3, 4)
    with pytest.raises(ValueError):
        ah_energy(StackProblem(1, 0.3, 4, Mode.SINGLE), p, p.reflected())


# --- caps ----------------------------------------------------------------------

def test_cap_apex_values():
    assert cap_profile(1.0, 2 - SQRT3, 100).values[0] == pytest.approx(0.0, abs=1e-15)
    assert cap_profile(1.0, 0.4, 100).values[0] == pytest.approx(2 - SQRT3 - 0.4, abs=1e-15)
    assert cap_profile(1.0, 0.4, 100).values[0] == pytest.approx(-0.13205, abs=1e-5)


def test_cap_flat_limit():
    u = cap_profile(1e-6, 0.3, 200).values
    assert np.max(np.abs(u + 0.3)) <= 1e-6


def test_cap_rejects_large_c():
    with pytest.raises(RadiusTooSmall):
        cap_profile(2.5, 0.3, 10)
    with pytest.raises(RadiusTooSmall):
        touching_eps(2.1)


def test_touching_eps_values():
    assert abs(touching_eps(1.0) - (2 - SQRT3)) <= 1e-12
    assert touching_eps(2.0) == pytest.approx(1.0, abs=1e-15)
    assert touching_eps(1e-9) == pytest.approx(2.5e-10, rel=1e-6)
    p = cap_params(1.0, 0.4)
    assert p.radius == 2.0 and p.apex_height == pytest.approx(2 - SQRT3 - 0.4)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-4, 2.0))
def test_touching_eps_is_apex_root(c):
    t = touching_eps(c)
    if t >= 1.0:
        return
    assert abs(cap_profile(c, t, 50).values[0]) <= 1e-12


def test_calibration_residual_order():
    ns = (250, 500, 1000)
    res = [calibration_residual(cap_profile(1.0, 0.4, n), 1.0) for n in ns]
    orders = [math.log(res[i] / res[i + 1], 2) for i in range(2)]
    assert min(orders) >= 1.8
    assert res[-1] < res[0]


def test_calibration_residual_flat():
    flat = RadialProfile.constant(-0.3, 40)
    assert calibration_residual(flat, 0.0) == 0.0
    assert calibration_residual(flat, 1.0) == 1.0


# --- Steiner symmetrization ----------------------------------------------------

def _random_pair(seed, m=64):
    rng = np.random.default_rng(seed)
    x = np.linspace(-1.0, 1.0, m)
    X, Y = np.meshgrid(x, x, indexing="ij")
    lo = -0.5 * np.ones((m, m))
    hi = 0.4 * np.ones((m, m))
    for k in range(1, 4):
        a, b, ph = rng.normal(size=3)
        lo += 0.05 / k * a * np.sin(k * np.pi * X + ph) * np.cos(k * np.pi * Y)
        hi += 0.05 / k * b * np.cos(k * np.pi * X) * np.sin(k * np.pi * Y + ph)
    return Grid2DPair(lo, hi)


def test_steiner_constant_columns():
    m = 8
    pair = Grid2DPair(-0.5 * np.ones((m, m)), 0.1 * np.ones((m, m)))
    out = steiner_symmetrize(pair)
    assert np.allclose(out.lower, -0.3, atol=1e-15)
    assert np.allclose(out.upper, 0.3, atol=1e-15)
    assert np.allclose(column_length(pair), 1.4, atol=1e-15)


def test_steiner_idempotent_on_symmetric():
    pair = steiner_symmetrize(_random_pair(3))
    again = steiner_symmetrize(pair)
    assert np.array_equal(again.lower, pair.lower)
    assert np.array_equal(again.upper, pair.upper)


@pytest.mark.parametrize("seed", range(20))
def test_steiner_area_and_length(seed):
    pair = _random_pair(seed)
    out = steiner_symmetrize(pair)
    before = grid_area(pair.lower) + grid_area(pair.upper)
    after = grid_area(out.lower) + grid_area(out.upper)
    assert after <= before + 1e-12
    assert np.max(np.abs(column_length(out) - column_length(pair))) <= 4 * np.finfo(float).eps


def test_grid_area_flat_and_tilted():
    m = 33
    assert grid_area(np.zeros((m, m))) == pytest.approx(4.0, abs=1e-13)
    x = np.linspace(-1, 1, m)
    plane = 0.3 * x[:, None] + 0.0 * x[None, :]
    assert grid_area(plane) == pytest.approx(4.0 * math.sqrt(1.09), abs=1e-13)


def test_grid_pair_validation():
    with pytest.raises(OrderingViolation):
        Grid2DPair(np.ones((3, 3)) * 0.2, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        Grid2DPair(np.zeros((3, 4)), np.zeros((3, 4)))
