import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import TOUCH_1, solved
from pmclab import (
    STABILITY_SUITE,
    DisconnectedContact,
    NoFreeBoundary,
    RadialProfile,
    cap_profile,
    contact_radius,
    free_boundary_index,
    regularity_scan,
    stability_form,
)
from pmclab.geometry import EnergyBreakdown
from pmclab.solver import SolveReport

NS = (250, 500, 1000, 2000)


@pytest.fixture(scope="module")
def refinement():
    return {n: regularity_scan(solved("stack", 1.0, 0.1, n), require_free_boundary=True) for n in NS}


def test_second_difference_bounded(refinement):
    vals = [refinement[n].max_second_diff for n in NS]
    assert max(vals) / min(vals) < 1.1


def test_second_difference_jump_is_c(refinement):
    assert refinement[2000].second_diff_jump_at_fb == pytest.approx(1.0, rel=0.1)
    for n in NS:
        assert refinement[n].has_free_boundary


def test_third_difference_grows_linearly(refinement):
    d3 = np.array([refinement[n].max_third_diff for n in NS])
    ns = np.array(NS, dtype=float)
    # a jump of size c in u'' concentrated on one cell gives D3 ~ c n
    assert np.min(d3 / ns) >= 0.45
    slope = np.polyfit(np.log(ns), np.log(d3), 1)[0]
    assert slope >= 0.9


def test_cap_has_no_free_boundary():
    rep = solved("single", 1.0, 0.4, 2000)
    with pytest.raises(NoFreeBoundary):
        regularity_scan(rep, require_free_boundary=True)
    scan = regularity_scan(rep)
    assert scan.second_diff_jump_at_fb is None and not scan.has_free_boundary
    R = 2.0
    exact = R * R / (R * R - 1.0) ** 1.5
    assert scan.max_second_diff == pytest.approx(exact, rel=0.02)


def test_contact_radius_regimes():
    with pytest.raises(NoFreeBoundary):
        contact_radius(solved("stack", 1.0, 0.4, 1000))
    assert contact_radius(solved("stack", 1.0, TOUCH_1, 1000)) <= 2.0 / 1000


def _fake_report(contact, n=10):
    u = RadialProfile(-0.1 * np.ones(n + 1))
    return SolveReport(lower=u, upper=u.reflected(), energy=EnergyBreakdown(0, 0, 0),
                       iterations=0, kkt_residual=0.0, contact=contact, converged=True)


def test_contact_anomalies():
    with pytest.raises(DisconnectedContact):
        free_boundary_index(_fake_report([(3, 5)]))
    with pytest.raises(NoFreeBoundary):
        free_boundary_index(_fake_report([(0, 10)]))
    assert free_boundary_index(_fake_report([(0, 4)])) == 4
    assert contact_radius(_fake_report([(0, 4)])) == pytest.approx(0.45)


# --- stability -----------------------------------------------------------------

def test_null_variation():
    s = stability_form(cap_profile(1.0, 0.4, 100), 1.0, lambda r: 0.0 * r)
    assert (s.lhs, s.rhs, s.margin) == (0.0, 0.0, 0.0)


def test_flat_disk_dirichlet_energy():
    flat = RadialProfile.constant(-0.3, 2000)
    s = stability_form(flat, 0.0, lambda r: (1.0 - r) ** 2)
    assert s.rhs == 0.0
    # int 4 (1 - r)^2 2 pi r dr = 2 pi / 3
    assert s.lhs == pytest.approx(2.0 * math.pi / 3.0, rel=1e-5)
    assert s.lhs >= 0


def _cap_lhs_quad(c, k):
    R = 2.0 / c

    def integrand(r):
        up2 = r * r / (R * R - r * r)
        dpsi = -k * (1.0 - r) ** (k - 1)
        psi = (1.0 - r) ** k
        return (dpsi * dpsi / (1.0 + up2) - 0.5 * c * c * psi * psi) * 2.0 * math.pi * r * math.sqrt(1.0 + up2)

    return quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)[0]


@pytest.mark.parametrize("k", [1, 2, 3])
def test_cap_bumps(k):
    s = stability_form(cap_profile(1.0, 0.4, 2000), 1.0, lambda r: (1.0 - r) ** k)
    assert s.margin >= 0
    assert abs(s.rhs) <= 1e-6
    assert s.lhs == pytest.approx(_cap_lhs_quad(1.0, k), rel=1e-4)


def test_test_function_inputs():
    cap = cap_profile(1.0, 0.4, 50)
    r = cap.r
    a = stability_form(cap, 1.0, lambda x: 1.0 - x)
    b = stability_form(cap, 1.0, 1.0 - r)
    c = stability_form(cap, 1.0, RadialProfile(1.0 - r))
    assert a == b == c
    with pytest.raises(ValueError):
        stability_form(cap, 1.0, np.ones(51))
    with pytest.raises(ValueError):
        stability_form(cap, 1.0, np.zeros(7))


def test_suite_size_and_rim():
    assert len(STABILITY_SUITE) == 10
    r = np.linspace(0.0, 1.0, 101)
    for psi in STABILITY_SUITE:
        v = psi(r)
        assert abs(v[-1]) <= 1e-12 and np.max(np.abs(v)) > 0


@pytest.mark.parametrize("mode", ["single", "stack"])
@pytest.mark.parametrize("c", [0.0, 1.0])
def test_stability_margins(mode, c):
    eps = 0.4 if mode == "single" else 0.1
    rep = solved(mode, c, eps, 1000)
    for psi in STABILITY_SUITE:
        assert stability_form(rep.lower, c, psi).margin >= -1e-8
