#!/usr/bin/env python3
"""Batch-compression scaling study over large target sizes (L = 60..200).

Plans each lattice, compresses the plan under the six transport rules, and
fits the parallel-move count against the achieved target size N = L^2. With
10 seeds per size this takes a few minutes; widths are chosen so the sized
targets span the requested side range at p_occ = 0.7.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from atomsort import SimConfig, fit_power_law, sweep
from atomsort.harness import reports_to_csv, write_atomic

WIDTHS = (74, 123, 172, 245)  # sized targets near L = 60, 100, 140, 200


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--jobs", type=int, default=2)
    args = parser.parse_args()

    grid = [
        SimConfig(width=w, p_occ=0.7, p_loss=0.0, compress_enabled=True) for w in WIDTHS
    ]
    reports, summaries, failures = sweep(grid, seeds=range(args.seeds), jobs=args.jobs)
    if failures:
        raise SystemExit(f"{len(failures)} runs failed: {failures[0].error}")

    os.makedirs(args.out_dir, exist_ok=True)
    write_atomic(os.path.join(args.out_dir, "compressed_scaling.csv"), reports_to_csv(reports))

    fit = fit_power_law([(r.target_side**2, r.total_batches) for r in reports])
    sides = sorted({r.target_side for r in reports})
    print(f"target sides: {sides}")
    print(f"parallel moves ~ N^{fit.exponent:.3f} (prefactor {fit.prefactor:.3f}, "
          f"{fit.n_points} points)")


if __name__ == "__main__":
    main()
