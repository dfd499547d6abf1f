"""Render sweep-CSV figures from the command line.

Example:
    sweepfigs --figure fill_vs_iteration --csv sweep.csv --out figs/fill \\
        --where W=50 --where p_occ=0.7
"""

from __future__ import annotations

import argparse
import os
import sys

from .figures import FIGURE_IDS, FigureSpec, render


def _parse_where(clauses: list[str] | None) -> dict:
    filters: dict = {}
    for clause in clauses or []:
        if "=" not in clause:
            raise ValueError(f"--where expects key=value, got {clause!r}")
        key, val = clause.split("=", 1)
        key = key.strip()
        val = val.strip()
        try:
            filters[key] = int(val) if key in ("W", "seed", "L") else float(val)
        except ValueError:
            filters[key] = val
    return filters


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sweepfigs", description=__doc__)
    parser.add_argument("--figure", required=True, choices=FIGURE_IDS)
    parser.add_argument("--csv", required=True, help="sweep results CSV")
    parser.add_argument("--out", required=True, help="output path base (.png/.svg appended)")
    parser.add_argument("--where", action="append", help="equality filter key=value, repeatable")
    parser.add_argument("--fit-json", dest="fit_json", help="overlay a fitted power law")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            figure=args.figure,
            csv_path=args.csv,
            out_base=args.out,
            filters=_parse_where(args.where),
            fit_json=args.fit_json,
        )
        out_dir = os.path.dirname(os.path.abspath(spec.out_base))
        os.makedirs(out_dir, exist_ok=True)
        paths, _ = render(spec)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("wrote " + " ".join(paths))
    return 0


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
