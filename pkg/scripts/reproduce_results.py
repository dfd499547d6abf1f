#!/usr/bin/env python3
"""Reproduce the headline benchmark numbers end to end.

Runs the full published grid (5 widths x 3 loads x 3 loss levels x 100
seeds), then computes the scaling fits quoted in the docs:

  * parallel-move count vs total sites M at p_occ = 0.7 (full range and
    M >= 2500)
  * initial side vs achieved target side per loss level

Results land in --out-dir (sweep.csv, summary.json, fit_*.json). Expect
roughly 20-40 minutes at --jobs 2 on a laptop-class machine; pass --seeds
0..9 for a quick smoke version. Figures can then be rendered from the CSV
with the separate sweepfigs package (see plots/).
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from atomsort.cli import main as atomsort_main


def run(argv):
    print("+ atomsort " + " ".join(argv))
    code = atomsort_main(argv)
    if code != 0:
        raise SystemExit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--seeds", default="0..99")
    parser.add_argument("--jobs", type=int, default=2)
    args = parser.parse_args()

    out = args.out_dir
    run(["sweep", "--paper-grid", "--seeds", args.seeds, "--jobs", str(args.jobs),
         "--out-dir", out])

    csv = os.path.join(out, "sweep.csv")
    run(["fit", "--csv", csv, "--x", "M", "--y", "batches",
         "--where", "p_occ=0.7", "--where", "p_loss=0",
         "--out", os.path.join(out, "fit_moves_vs_M.json")])
    run(["fit", "--csv", csv, "--x", "M", "--y", "batches",
         "--where", "p_occ=0.7", "--where", "p_loss=0", "--min-x", "2500",
         "--out", os.path.join(out, "fit_moves_vs_M_large.json")])
    for p_loss in ("0", "0.01", "0.05"):
        run(["fit", "--csv", csv, "--x", "N", "--y", "M",
             "--where", "p_occ=0.7", "--where", f"p_loss={p_loss}",
             "--out", os.path.join(out, f"fit_M_vs_N_loss{p_loss}.json")])
    print(f"done; results in {out}/")


if __name__ == "__main__":
    main()
