import math
import os

import numpy as np
import pytest

from atomsort import (
    Lattice,
    RngStream,
    SimConfig,
    TargetZone,
    fill_rate,
    fit_power_law,
    load_random,
    retention_rate,
    sweep,
)
from atomsort.harness import (
    read_csv_rows,
    reports_to_csv,
    select_fit_points,
    summaries_to_json,
    write_atomic,
)


def test_fill_rate_trivial_cases():
    zone = TargetZone(offset=1, side=3)
    full = Lattice.empty(5)
    full.occupancy[1:4, 1:4] = True
    assert fill_rate(full, zone) == 1.0
    assert fill_rate(Lattice.empty(5), zone) == 0.0


def test_fill_rate_partial():
    zone = TargetZone(offset=0, side=10)
    lat = Lattice.empty(10)
    lat.occupancy[:, :] = True
    lat.occupancy[3, 3] = False
    assert fill_rate(lat, zone) == pytest.approx(0.99)


def test_retention_rate_values():
    assert retention_rate(10, 10) == 1.0
    assert retention_rate(225, 300) == pytest.approx(0.75)
    assert retention_rate(267, 300) == pytest.approx(0.89)
    with pytest.raises(ValueError):
        retention_rate(5, 0)


def test_fit_power_law_exact():
    fit = fit_power_law([(10.0, math.sqrt(10.0)), (100.0, 10.0)])
    assert fit.exponent == pytest.approx(0.5, abs=1e-12)
    assert fit.prefactor == pytest.approx(1.0, abs=1e-9)


def test_fit_power_law_flat_data():
    fit = fit_power_law([(1.0, 4.0), (10.0, 4.0), (100.0, 4.0)])
    assert fit.exponent == pytest.approx(0.0, abs=1e-12)
    assert fit.prefactor == pytest.approx(4.0)


def test_fit_power_law_recovers_planted_exponent():
    rng = np.random.default_rng(0)
    xs = rng.uniform(1.0, 500.0, size=40)
    points = [(x, 2.7 * x**0.55) for x in xs]
    fit = fit_power_law(points)
    assert fit.exponent == pytest.approx(0.55, abs=1e-10)
    assert fit.prefactor == pytest.approx(2.7, rel=1e-9)
    assert fit.residual < 1e-18


def test_fit_power_law_input_validation():
    with pytest.raises(ValueError):
        fit_power_law([(1.0, 2.0)])
    with pytest.raises(ValueError):
        fit_power_law([(1.0, 2.0), (1.0, 3.0)])
    with pytest.raises(ValueError):
        fit_power_law([(1.0, 2.0), (-2.0, 3.0)])
    with pytest.raises(ValueError):
        fit_power_law([(1.0, 0.0), (2.0, 3.0)])


def _mini_sweep(jobs=1):
    grid = [
        SimConfig(width=10, p_occ=0.6, p_loss=0.0),
        SimConfig(width=10, p_occ=0.6, p_loss=0.05),
    ]
    return sweep(grid, seeds=range(4), jobs=jobs)


def test_sweep_runs_every_pair_and_aggregates():
    reports, summaries, failures = _mini_sweep()
    assert len(reports) == 8
    assert failures == []
    assert [s.n for s in summaries] == [4, 4]
    lossless = summaries[0]
    assert lossless.means["fill_rate"] == 1.0
    assert lossless.stds["fill_rate"] == 0.0
    assert lossless.means["iterations"] == 1.0


def test_sweep_failures_recorded_not_raised():
    grid = [SimConfig(width=10, p_occ=0.0, p_loss=0.0)]  # no atoms: infeasible
    reports, summaries, failures = sweep(grid, seeds=range(3))
    assert reports == []
    assert len(failures) == 3
    assert summaries[0].n == 0
    assert "InfeasibleTargetError" in failures[0].error


def test_sweep_deterministic_and_order_invariant():
    r1, s1, _ = _mini_sweep(jobs=1)
    r2, s2, _ = _mini_sweep(jobs=2)
    key = lambda r: (r.width, r.p_occ, r.p_loss, r.seed)
    for a, b in zip(sorted(r1, key=key), sorted(r2, key=key)):
        assert a.fill_rate == b.fill_rate
        assert a.total_moves == b.total_moves
        assert a.iterations_used == b.iterations_used
    assert [s.means["fill_rate"] for s in s1] == [s.means["fill_rate"] for s in s2]


def test_csv_roundtrip(tmp_path):
    reports, summaries, failures = _mini_sweep()
    path = os.path.join(tmp_path, "out", "sweep.csv")
    write_atomic(path, reports_to_csv(reports))
    rows = read_csv_rows(path)
    assert len(rows) == 8
    first = rows[0]
    assert first["W"] == 10 and first["M"] == 100
    assert first["N"] == first["L"] ** 2
    assert isinstance(first["compressed"], bool)
    # identical sweep -> identical CSV apart from the wall-clock column
    again, _, _ = _mini_sweep()
    strip = lambda text: [
        ",".join(v for i, v in enumerate(line.split(",")) if i != 12)
        for line in text.splitlines()
    ]
    assert strip(reports_to_csv(reports)) == strip(reports_to_csv(again))


def test_summary_json_mentions_population_convention():
    reports, summaries, failures = _mini_sweep()
    text = summaries_to_json(summaries, failures)
    assert '"std_convention": "population"' in text


def test_select_fit_points_filters():
    rows = [
        {"W": 10, "M": 100, "p_occ": 0.7, "batches": 30},
        {"W": 50, "M": 2500, "p_occ": 0.7, "batches": 160},
        {"W": 50, "M": 2500, "p_occ": 0.5, "batches": 150},
    ]
    pts = select_fit_points(rows, "M", "batches", where={"p_occ": 0.7})
    assert pts == [(100.0, 30.0), (2500.0, 160.0)]
    pts = select_fit_points(rows, "M", "batches", where={"p_occ": 0.7}, min_x=2000)
    assert pts == [(2500.0, 160.0)]
