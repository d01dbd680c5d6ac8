import math

import numpy as np
import pytest

from peakcap.channel import EllipseConstraint
from peakcap.curves import two_point_threshold
from peakcap.errors import ConvergenceError, DomainError, RegimeError
from peakcap.inputs import expand_symmetric
from peakcap.montecarlo import mc_mutual_information
from peakcap.output_stats import mutual_information
from peakcap.solver import (
    CapacityResult,
    SolverOptions,
    circle_capacity,
    solve_capacity,
    two_point_capacity,
)

from conftest import uniform_circle

# high-precision references for the closed-form oracles
TWO_POINT = {0.1: 0.00497516462545047398, 0.5: 0.111421482184736180, 0.8: 0.244473408900108357, 1.0: 0.336830820346831612}
CIRCLE = {0.5: 0.117763307039150703, 1.0: 0.403475518907214006, 1.4: 0.670502711087153670}


def _has_endpoint(res):
    return res.distribution.x1[-1] == res.distribution.constraint.r_p


def _check_result(res):
    assert res.kkt.passed
    assert res.capacity == pytest.approx(mutual_information(res.distribution), abs=1e-9)
    if res.distribution.constraint.r_p > 0:
        assert _has_endpoint(res)


@pytest.mark.parametrize("r_p", sorted(TWO_POINT))
def test_two_point_oracle(r_p):
    assert two_point_capacity(r_p) == pytest.approx(TWO_POINT[r_p], abs=1e-12)


def test_two_point_oracle_limits():
    assert two_point_capacity(0.0) == 0.0
    big = [two_point_capacity(r) for r in (3.0, 5.0, 8.0)]
    assert all(v < math.log(2) for v in big)
    assert big == sorted(big)
    assert math.log(2) - big[-1] < 1e-12


@pytest.mark.parametrize("r", sorted(CIRCLE))
def test_circle_oracle(r):
    assert circle_capacity(r) == pytest.approx(CIRCLE[r], abs=1e-12)


def test_circle_oracle_domain():
    assert circle_capacity(0.0) == 0.0
    assert circle_capacity(2.4) > circle_capacity(2.0)
    with pytest.raises(DomainError):
        circle_capacity(2.5)
    with pytest.raises(DomainError):
        circle_capacity(-0.1)


def test_circle_oracle_matches_discretization():
    assert circle_capacity(1.0) == pytest.approx(mutual_information(uniform_circle(1.0, 128)), abs=1e-6)


def test_circle_oracle_matches_monte_carlo():
    est = mc_mutual_information(uniform_circle(1.0, 256), samples=10**6, seed=3)
    assert abs(est.value - circle_capacity(1.0)) <= 3 * est.stderr


def test_two_point_oracle_matches_monte_carlo():
    from peakcap.inputs import SymmetricBoundaryDistribution

    d = SymmetricBoundaryDistribution.point_mass_at_endpoint(EllipseConstraint(0.8, 0.3))
    est = mc_mutual_information(d, samples=10**6, seed=1)
    assert abs(est.value - two_point_capacity(0.8)) <= 3 * est.stderr


def test_options_validation():
    with pytest.raises(DomainError):
        SolverOptions(ba_tol=1e-13)
    with pytest.raises(DomainError):
        SolverOptions(grid_n=0)
    with pytest.raises(DomainError):
        SolverOptions(merge_tol=-1.0)


@pytest.mark.parametrize("r_p, r_m", [(0.8, 0.3), (1.0, 0.3), (0.5, 0.2)])
def test_two_point_regime(r_p, r_m):
    res = solve_capacity(EllipseConstraint(r_p, r_m))
    assert res.regime_label == "two_point"
    pts = sorted(a.point for a in expand_symmetric(res.distribution))
    assert pts == [(-r_p, 0.0), (r_p, 0.0)]
    assert res.capacity == pytest.approx(two_point_capacity(r_p), abs=1e-6)
    _check_result(res)


@pytest.mark.parametrize("r", [0.5, 1.0, 1.4])
def test_circle_regime(r):
    res = solve_capacity(EllipseConstraint(r, r))
    assert res.regime_label == "circle_uniform"
    assert res.capacity == pytest.approx(circle_capacity(r), abs=1e-6)
    masses = np.array([a.mass for a in expand_symmetric(res.distribution)])
    assert np.max(np.abs(masses * masses.size - 1.0)) <= 0.01
    assert res.kkt.max_violation <= 1e-4
    _check_result(res)


def test_beyond_two_point():
    res = solve_capacity(EllipseConstraint(1.2, 0.8))
    assert res.regime_label == "general_discrete"
    assert res.distribution.x1.size >= 2
    assert len(expand_symmetric(res.distribution)) > 2
    assert res.kkt.passed and res.kkt.endpoint_in_support
    # strictly better than the antipodal pair
    assert res.capacity > two_point_capacity(1.2) + 1e-4
    est = mc_mutual_information(res.distribution, samples=10**6, seed=5)
    assert abs(est.value - res.capacity) <= 3 * est.stderr
    _check_result(res)


def test_ba_ascent():
    res = solve_capacity(EllipseConstraint(1.1, 0.8))
    trace = np.array(res.ba_trace)
    assert trace.size > 10
    assert np.all(np.diff(trace) >= -1e-12)
    res = solve_capacity(EllipseConstraint(1.0, 1.0))
    assert np.all(np.diff(np.array(res.ba_trace)) >= -1e-12)


def test_degenerate_cases():
    res = solve_capacity(EllipseConstraint(0.0, 0.0))
    assert res.regime_label == "degenerate_zero" and res.capacity == 0.0
    res = solve_capacity(EllipseConstraint(1.0, 0.0))
    assert res.regime_label == "degenerate_1d"
    assert res.capacity == pytest.approx(two_point_capacity(1.0), abs=1e-6)
    _check_result(res)


def test_large_peak_refused_without_override():
    with pytest.raises(RegimeError, match="sqrt"):
        solve_capacity(EllipseConstraint(1.6, 0.5))


def test_large_peak_override_checks_interior():
    res = solve_capacity(EllipseConstraint(1.6, 0.5), SolverOptions(allow_large_peak=True))
    assert res.kkt.interior_checked and res.kkt.regime == "large_peak_power"
    _check_result(res)


def test_nonconvergence_carries_best_iterate():
    opts = SolverOptions(max_iters=3, refine_rounds=1)
    with pytest.raises(ConvergenceError) as info:
        solve_capacity(EllipseConstraint(1.0, 0.9), opts)
    assert isinstance(info.value.best, CapacityResult)


def test_result_to_dict():
    res = solve_capacity(EllipseConstraint(0.8, 0.3))
    out = res.to_dict()
    assert out["regime_label"] == "two_point"
    assert out["distribution"]["atoms"] == [{"x1": 0.8, "mass": 1.0}]
    assert out["kkt"]["passed"] is True


def test_circle_limit_continuity():
    caps = [solve_capacity(EllipseConstraint(1.0, 1.0 - eps)).capacity for eps in (0.1, 0.05, 0.01)]
    assert caps == sorted(caps)
    assert caps[-1] < circle_capacity(1.0) + 1e-6
    assert circle_capacity(1.0) - caps[-1] < 0.01


@pytest.mark.slow
def test_two_point_agreement_below_curve():
    for r_p in np.linspace(0.15, 1.2, 10):
        r_m = 0.9 * two_point_threshold(r_p)
        res = solve_capacity(EllipseConstraint(r_p, r_m))
        assert res.distribution.x1.tolist() == [r_p]
        assert res.capacity == pytest.approx(two_point_capacity(r_p), abs=1e-6)
        _check_result(res)


@pytest.mark.slow
def test_monotone_in_radii():
    radii = np.linspace(0.2, 1.4, 5)
    cap = np.full((5, 5), np.nan)
    for i, a in enumerate(radii):
        for j, b in enumerate(radii[: i + 1]):
            res = solve_capacity(EllipseConstraint(a, b))
            _check_result(res)
            cap[i, j] = cap[j, i] = res.capacity
    # a larger ellipse contains the smaller one; solver noise is far below the KKT tolerance
    assert np.all(np.diff(cap, axis=0) >= -1e-9)
    assert np.all(np.diff(cap, axis=1) >= -1e-9)
