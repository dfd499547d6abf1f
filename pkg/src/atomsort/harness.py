"""Monte Carlo sweeps, metric aggregation, CSV I/O, and scaling fits.

Sweep work items are independent (config, seed) pairs; each derives its own
stream from the seed, so results never depend on scheduling. Rows are sorted
by (config index, seed) before writing, which makes repeated sweeps
bit-identical except for the wall-clock column.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .config import SimConfig
from .executor import RunReport, run_until_filled
from .lattice import Lattice, TargetZone

CSV_SCHEMA_COMMENT = "# atomsort sweep results, schema v1"
CSV_COLUMNS = [
    "W",
    "p_occ",
    "p_loss",
    "seed",
    "L",
    "delta",
    "fill_rate",
    "retention",
    "iterations",
    "moves",
    "batches",
    "physical_time_s",
    "compute_time_s",
    "compressed",
]

SUMMARY_METRICS = [
    "fill_rate",
    "retention",
    "iterations",
    "moves",
    "batches",
    "physical_time_s",
    "compute_time_s",
]


def fill_rate(lattice: Lattice, zone: TargetZone) -> float:
    """Occupied fraction of the target zone."""
    if zone.offset < 0 or zone.stop > lattice.width:
        raise ValueError("target zone does not fit inside the lattice")
    return lattice.zone_atom_count(zone) / (zone.side * zone.side)


def retention_rate(final_in_zone: int, initial_atoms: int) -> float:
    """Atoms delivered to the zone divided by atoms initially loaded."""
    if initial_atoms < 1:
        raise ValueError("initial atom count must be >= 1")
    return final_in_zone / initial_atoms


@dataclass(frozen=True)
class SweepFailure:
    config: SimConfig
    seed: int
    error: str


@dataclass(frozen=True)
class SweepSummary:
    """Per-config aggregates over seeds; std uses the population convention."""

    config: SimConfig
    n: int
    means: dict
    stds: dict

    def to_json_dict(self) -> dict:
        return {
            "W": self.config.width,
            "p_occ": self.config.p_occ,
            "p_loss": self.config.p_loss,
            "compressed": self.config.compress_enabled,
            "n": self.n,
            "mean": self.means,
            "std": self.stds,
            "std_convention": "population",
        }


def _run_item(args: tuple[SimConfig, int]) -> tuple[str, object]:
    config, seed = args
    try:
        return ("ok", run_until_filled(replace(config, seed=seed)))
    except Exception as exc:  # failures are data, the sweep must go on
        return ("err", f"{type(exc).__name__}: {exc}")


def sweep(
    grid: Sequence[SimConfig],
    seeds: Iterable[int],
    jobs: int = 1,
) -> tuple[list[RunReport], list[SweepSummary], list[SweepFailure]]:
    """Run every (config, seed) pair; never aborts on individual failures."""
    seed_list = list(seeds)
    if not grid or not seed_list:
        raise ValueError("sweep needs a non-empty grid and seed range")
    items = [(ci, seed) for ci in range(len(grid)) for seed in seed_list]
    work = [(grid[ci], seed) for ci, seed in items]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_item, work, chunksize=4))
    else:
        outcomes = [_run_item(it) for it in work]

    reports: list[RunReport] = []
    failures: list[SweepFailure] = []
    per_config: dict[int, list[RunReport]] = {i: [] for i in range(len(grid))}
    for (ci, seed), (status, payload) in zip(items, outcomes):
        if status == "ok":
            report = payload  # type: ignore[assignment]
            reports.append(report)
            per_config[ci].append(report)
        else:
            failures.append(SweepFailure(config=grid[ci], seed=seed, error=str(payload)))

    summaries = []
    for i, cfg in enumerate(grid):
        rows = per_config[i]
        if not rows:
            summaries.append(SweepSummary(config=cfg, n=0, means={}, stds={}))
            continue
        values = {
            "fill_rate": [r.fill_rate for r in rows],
            "retention": [r.retention for r in rows],
            "iterations": [r.iterations_used for r in rows],
            "moves": [r.total_moves for r in rows],
            "batches": [r.total_batches for r in rows],
            "physical_time_s": [r.physical_time for r in rows],
            "compute_time_s": [r.computation_time for r in rows],
        }
        means = {k: float(np.mean(v)) for k, v in values.items()}
        stds = {k: float(np.std(v)) for k, v in values.items()}
        summaries.append(SweepSummary(config=cfg, n=len(rows), means=means, stds=stds))
    return reports, summaries, failures


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------


def write_atomic(path: str, content: str) -> None:
    """Write via temp file + rename so interrupted runs never truncate output."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def reports_to_csv(reports: Sequence[RunReport]) -> str:
    buf = io.StringIO()
    buf.write(CSV_SCHEMA_COMMENT + "\n")
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    ordered = sorted(reports, key=lambda r: (r.width, r.p_occ, r.p_loss, r.compressed, r.seed))
    for r in ordered:
        writer.writerow(
            [
                r.width,
                r.p_occ,
                r.p_loss,
                r.seed,
                r.target_side,
                r.target_offset,
                f"{r.fill_rate:.10g}",
                f"{r.retention:.10g}",
                r.iterations_used,
                r.total_moves,
                r.total_batches,
                f"{r.physical_time:.12g}",
                f"{r.computation_time:.6g}",
                str(r.compressed).lower(),
            ]
        )
    return buf.getvalue()


def read_csv_rows(path: str) -> list[dict]:
    """Parse a sweep CSV back into typed row dicts (comment lines skipped)."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = []
    for raw in csv.DictReader(lines):
        row: dict = {}
        for key, val in raw.items():
            if key == "compressed":
                row[key] = val.strip().lower() == "true"
            elif key in ("W", "seed", "L", "delta", "iterations", "moves", "batches"):
                row[key] = int(val)
            else:
                row[key] = float(val)
        row["M"] = row["W"] * row["W"]
        row["N"] = row["L"] * row["L"]
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# scaling fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares power law y = prefactor * x**exponent on log-log axes."""

    exponent: float
    prefactor: float
    residual: float
    n_points: int

    def to_json_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "prefactor": self.prefactor,
            "residual": self.residual,
            "n_points": self.n_points,
        }


def fit_power_law(points: Sequence[tuple[float, float]]) -> ScalingFit:
    """Fit log y = a log x + c; residual is the summed squared log error."""
    if len(points) < 2:
        raise ValueError("power-law fit needs at least 2 points")
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    if (xs <= 0).any() or (ys <= 0).any():
        raise ValueError("power-law fit needs strictly positive coordinates")
    if np.unique(xs).size < 2:
        raise ValueError("power-law fit needs at least 2 distinct x values")
    lx, ly = np.log(xs), np.log(ys)
    (slope, intercept), res = np.polyfit(lx, ly, 1, full=True)[:2]
    residual = float(res[0]) if len(res) else 0.0
    return ScalingFit(
        exponent=float(slope),
        prefactor=float(math.exp(intercept)),
        residual=residual,
        n_points=len(points),
    )


def select_fit_points(
    rows: Sequence[dict],
    x_col: str,
    y_col: str,
    where: dict | None = None,
    min_x: float | None = None,
) -> list[tuple[float, float]]:
    """Extract (x, y) pairs from CSV rows with equality filters and an x floor."""
    pts = []
    for row in rows:
        if where and any(not _matches(row.get(k), v) for k, v in where.items()):
            continue
        if x_col not in row or y_col not in row:
            raise ValueError(f"CSV rows lack column {x_col!r} or {y_col!r}")
        x, y = float(row[x_col]), float(row[y_col])
        if min_x is not None and x < min_x:
            continue
        pts.append((x, y))
    return pts


def _matches(value, expected) -> bool:
    if value is None:
        return False
    if isinstance(value, bool) or isinstance(expected, bool):
        return bool(value) == bool(expected)
    try:
        return math.isclose(float(value), float(expected), rel_tol=1e-9, abs_tol=1e-12)
    except (TypeError, ValueError):
        return str(value) == str(expected)


def summaries_to_json(summaries: Sequence[SweepSummary], failures: Sequence[SweepFailure]) -> str:
    return json.dumps(
        {
            "configs": [s.to_json_dict() for s in summaries],
            "failures": [
                {
                    "W": f.config.width,
                    "p_occ": f.config.p_occ,
                    "p_loss": f.config.p_loss,
                    "seed": f.seed,
                    "error": f.error,
                }
                for f in failures
            ],
        },
        indent=2,
    )
