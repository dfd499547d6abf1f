import math

import pytest

from atomsort import PhysicsParams, kinematic_time, move_time, segmented_kinematic_time

PARAMS = PhysicsParams()


def oracle_travel_time(d_sites: int, params: PhysicsParams = PARAMS) -> float:
    """Independent timing oracle: bisect on the total duration T.

    For a candidate T the velocity profile is v(t) = min(a*t, v_max, a*(T-t)).
    The distance it covers is integrated exactly with trapezoid quadrature on
    the piecewise-linear knots, and T is bisected until the distance matches.
    No closed-form branch logic is shared with the implementation.
    """
    dist_target = d_sites * params.d_site
    if dist_target == 0:
        return 0.0
    a, v = params.a_max, params.v_max

    def covered(total: float) -> float:
        def vel(t: float) -> float:
            return min(a * t, v, a * (total - t))

        knots = {0.0, total / 2.0, total}
        if a * total / 2.0 > v:
            knots.update((v / a, total - v / a))
        ks = sorted(knots)
        return sum(
            (vel(t0) + vel(t1)) / 2.0 * (t1 - t0) for t0, t1 in zip(ks, ks[1:])
        )

    lo, hi = 0.0, 2.0 * (dist_target / v + 2.0 * v / a)
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if covered(mid) < dist_target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def test_zero_distance_is_instant():
    assert kinematic_time(0) == 0.0
    assert move_time(0).total == pytest.approx(120e-6, abs=1e-15)


def test_single_site_triangular_branch():
    # 5 um is below the 6.145 um needed for two full ramps
    t = kinematic_time(1)
    assert t == pytest.approx(oracle_travel_time(1), abs=1e-9)
    assert t == pytest.approx(85.3e-6, abs=0.1e-6)
    assert move_time(1).total == pytest.approx(205.3e-6, abs=0.1e-6)


def test_ten_sites_trapezoidal_branch():
    t = kinematic_time(10)
    assert t == pytest.approx(oracle_travel_time(10), abs=1e-9)
    assert t == pytest.approx(431.9e-6, abs=0.1e-6)
    assert move_time(10).total == pytest.approx(551.9e-6, abs=0.1e-6)


def test_matches_numeric_oracle_across_distances():
    for d in range(1, 201):
        assert kinematic_time(d) == pytest.approx(oracle_travel_time(d), abs=1e-9), d


def test_branch_boundary_continuity():
    # at exactly two ramp distances both formulas give 2 v/a
    boundary = 2.0 * PARAMS.accel_distance
    params = PhysicsParams(d_site=boundary)  # one site = the boundary distance
    t = kinematic_time(1, params)
    assert t == pytest.approx(2.0 * PARAMS.v_max / PARAMS.a_max, rel=1e-12)


def test_strictly_increasing_in_distance():
    times = [kinematic_time(d) for d in range(1, 100)]
    assert all(b > a for a, b in zip(times, times[1:]))


def test_top_speed_lower_bound():
    for d in (1, 5, 17, 60, 200):
        assert kinematic_time(d) >= d * PARAMS.d_site / PARAMS.v_max


def test_negative_distance_rejected():
    with pytest.raises(ValueError):
        kinematic_time(-1)


def test_move_total_is_kinematic_plus_two_transfers():
    mt = move_time(7)
    assert mt.total == mt.kinematic + 2 * PARAMS.t_transfer


def test_segmented_time_sums_per_leg():
    assert segmented_kinematic_time([3, 4]) == pytest.approx(
        kinematic_time(3) + kinematic_time(4), rel=1e-15
    )
    # stopping at the corner costs time versus one straight sweep
    assert segmented_kinematic_time([5, 5]) > kinematic_time(10)


def test_params_must_be_positive():
    with pytest.raises(ValueError):
        PhysicsParams(a_max=0)
    with pytest.raises(ValueError):
        PhysicsParams(t_transfer=-1e-6)
