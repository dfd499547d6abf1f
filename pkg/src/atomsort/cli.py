"""Command-line entry point: run, sweep, validate, and fit subcommands.

Exit codes: 0 success, 1 usage or configuration error, 2 validation
failures, 3 internal consistency error. The default output directory comes
from $ATOMSORT_OUT (falls back to the working directory); all file outputs
are written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .config import SimConfig
from .errors import InfeasibleTargetError, PlanConsistencyError
from .harness import (
    fit_power_law,
    read_csv_rows,
    reports_to_csv,
    select_fit_points,
    summaries_to_json,
    sweep,
    write_atomic,
)
from .kinematics import PhysicsParams
from .lattice import Lattice, RngStream, apply_batch_lossless, load_random
from .parallel import validate_batch
from .planner import Plan, SizingParams, plan, size_target
from .executor import run_until_filled

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_INTERNAL = 3

PAPER_WIDTHS = [10, 20, 50, 75, 100]
PAPER_P_OCCS = [0.5, 0.7, 0.9]
PAPER_P_LOSSES = [0.0, 0.01, 0.05]


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for
    validation findings, so force usage errors to 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _out_dir(args) -> str:
    path = args.out_dir or os.environ.get("ATOMSORT_OUT") or "."
    os.makedirs(path, exist_ok=True)
    return path


def _read_config_file(path: str) -> dict:
    """Plain key = value lines; '#' starts a comment."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected 'key = value'")
            key, val = line.split("=", 1)
            values[key.strip()] = val.strip()
    return values

CONFIG_KEYS = {
    "width": int,
    "p_occ": float,
    "p_loss": float,
    "seed": int,
    "iteration_cap": int,
    "compress": lambda v: v.lower() in ("1", "true", "yes"),
    "a_max": float,
    "v_max": float,
    "t_transfer": float,
    "d_site": float,
    "ref_width": float,
    "base_moves": float,
    "safety_margin": float,
}


def _build_config(args) -> SimConfig:
    file_vals: dict = {}
    if getattr(args, "config", None):
        raw = _read_config_file(args.config)
        unknown = set(raw) - set(CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        file_vals = {k: CONFIG_KEYS[k](v) for k, v in raw.items()}

    def pick(flag_name: str, file_key: str, default):
        flag = getattr(args, flag_name, None)
        if flag is not None:
            return flag
        return file_vals.get(file_key, default)

    physics = PhysicsParams(
        a_max=pick("a_max", "a_max", 2750.0),
        v_max=pick("v_max", "v_max", 0.13),
        t_transfer=pick("t_transfer", "t_transfer", 60e-6),
        d_site=pick("d_site", "d_site", 5e-6),
    )
    sizing = SizingParams(
        reference_width=pick("ref_width", "ref_width", 30.0),
        base_move_count=pick("base_moves", "base_moves", 2.0),
        safety_margin=pick("safety_margin", "safety_margin", 0.95),
    )
    width = pick("width", "width", None)
    p_occ = pick("p_occ", "p_occ", None)
    if width is None or p_occ is None:
        raise ValueError("width and p_occ are required (flag or config file)")
    compress_flag = getattr(args, "compress", False) or file_vals.get("compress", False)
    return SimConfig(
        width=int(width),
        p_occ=float(p_occ),
        p_loss=float(pick("p_loss", "p_loss", 0.0)),
        seed=int(pick("seed", "seed", 0)),
        iteration_cap=int(pick("iteration_cap", "iteration_cap", 6)),
        compress_enabled=bool(compress_flag),
        physics=physics,
        sizing=sizing,
    )


def _add_common_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--out-dir", help="output directory (default $ATOMSORT_OUT or .)")
    p.add_argument("--iteration-cap", type=int, dest="iteration_cap")
    p.add_argument("--compress", action="store_true", help="compress plans before executing")
    p.add_argument("--a-max", type=float, dest="a_max", help="max acceleration [m/s^2]")
    p.add_argument("--v-max", type=float, dest="v_max", help="max speed [m/s]")
    p.add_argument("--t-transfer", type=float, dest="t_transfer", help="trap transfer time [s]")
    p.add_argument("--d-site", type=float, dest="d_site", help="site pitch [m]")
    p.add_argument("--ref-width", type=float, dest="ref_width", help="sizing reference width")
    p.add_argument("--base-moves", type=float, dest="base_moves", help="sizing base move count")
    p.add_argument("--safety-margin", type=float, dest="safety_margin", help="sizing safety margin")


def _parse_seed_range(text: str) -> list[int]:
    """Either 'a..b' (inclusive) or a comma list."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",") if s.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(s) for s in text.split(",") if s.strip()]


def _parse_int_list(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    config = _build_config(args)
    out_dir = _out_dir(args)

    if args.dump_plan or args.dump_lattices:
        # reproduce the run's first-iteration artifacts for inspection
        rng = RngStream(config.seed)
        lat = load_random(config.width, config.p_occ, rng)
        zone = size_target(lat.atom_count, config.width, config.p_loss, config.sizing)
        first_plan = plan(lat, zone)
        if args.dump_plan:
            write_atomic(os.path.join(out_dir, "plan.json"), json.dumps(first_plan.to_json_dict()))
            write_atomic(os.path.join(out_dir, "lattice_planned.txt"), lat.to_text())
        if args.dump_lattices:
            write_atomic(os.path.join(out_dir, "lattice_before.txt"), lat.to_text())

    report = run_until_filled(config)
    write_atomic(os.path.join(out_dir, "run.json"), json.dumps(report.to_json_dict(), indent=2))
    if args.dump_lattices:
        # replay deterministically to dump the final occupancy
        final = _replay_final_lattice(config)
        write_atomic(os.path.join(out_dir, "lattice_after.txt"), final.to_text())
    print(
        f"fill_rate={report.fill_rate:.6g} retention={report.retention:.6g} "
        f"iterations={report.iterations_used}"
    )
    return EXIT_OK


def _replay_final_lattice(config: SimConfig) -> Lattice:
    from .executor import execute_plan
    from .parallel import compress

    rng = RngStream(config.seed)
    lat = load_random(config.width, config.p_occ, rng)
    zone = size_target(lat.atom_count, config.width, config.p_loss, config.sizing)
    n_target = zone.side * zone.side
    for _ in range(config.iteration_cap):
        p = plan(lat, zone)
        if config.compress_enabled and p.batches:
            p = compress(p, lat)
        execute_plan(p, lat, config.p_loss, rng, config.physics)
        if lat.zone_atom_count(zone) == n_target or p.total_moves == 0:
            break
    return lat


def cmd_sweep(args) -> int:
    out_dir = _out_dir(args)
    base = _build_sweep_base(args)
    if args.paper_grid:
        widths, p_occs, p_losses = PAPER_WIDTHS, PAPER_P_OCCS, PAPER_P_LOSSES
    else:
        if not (args.widths and args.p_occs is not None and args.p_losses is not None):
            raise ValueError("provide --widths/--p-occs/--p-losses or --paper-grid")
        widths = _parse_int_list(args.widths)
        p_occs = _parse_float_list(args.p_occs)
        p_losses = _parse_float_list(args.p_losses)
    seeds = _parse_seed_range(args.seeds)
    grid = [
        replace(base, width=w, p_occ=po, p_loss=pl)
        for w in widths
        for po in p_occs
        for pl in p_losses
    ]
    reports, summaries, failures = sweep(grid, seeds, jobs=args.jobs)
    csv_path = os.path.join(out_dir, args.csv_name)
    write_atomic(csv_path, reports_to_csv(reports))
    write_atomic(os.path.join(out_dir, "summary.json"), summaries_to_json(summaries, failures))
    print(f"wrote {len(reports)} rows to {csv_path} ({len(failures)} failures)")
    return EXIT_OK


def _build_sweep_base(args) -> SimConfig:
    shadow = argparse.Namespace(**vars(args))
    shadow.width = 10  # placeholder, replaced per grid point
    shadow.p_occ = 0.5
    shadow.p_loss = 0.0
    shadow.seed = 0
    return _build_config(shadow)


def cmd_validate(args) -> int:
    with open(args.plan) as fh:
        plan_ = Plan.from_json_dict(json.load(fh))
    with open(args.lattice) as fh:
        text = fh.read()
    lattice = Lattice.from_json(text) if args.lattice.endswith(".json") else Lattice.from_text(text)

    any_violation = False
    current = lattice
    for bi, batch in enumerate(plan_.batches):
        violations = validate_batch(batch, current)
        for v in violations:
            any_violation = True
            print(f"batch {bi}: rule {v.rule_id} moves {list(v.move_indices)}: {v.detail}")
        try:
            current = apply_batch_lossless(current, batch)
        except PlanConsistencyError as exc:
            any_violation = True
            print(f"batch {bi}: replay impossible: {exc}")
            break
    if not any_violation:
        print(f"plan valid: {len(plan_.batches)} batches, {plan_.total_moves} moves")
    return EXIT_VALIDATION if any_violation else EXIT_OK


def cmd_fit(args) -> int:
    rows = read_csv_rows(args.csv)
    where = {}
    for clause in args.where or []:
        if "=" not in clause:
            raise ValueError(f"--where expects key=value, got {clause!r}")
        key, val = clause.split("=", 1)
        where[key.strip()] = val.strip()
    points = select_fit_points(rows, args.x, args.y, where=where, min_x=args.min_x)
    if not points:
        raise ValueError("no rows match the given filters")
    fit = fit_power_law(points)
    print(
        f"exponent={fit.exponent:.6g} prefactor={fit.prefactor:.6g} "
        f"residual={fit.residual:.6g} n={fit.n_points}"
    )
    if args.out:
        write_atomic(args.out, json.dumps(fit.to_json_dict(), indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="atomsort", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one seeded run, prints fill/retention/iterations")
    p_run.add_argument("--width", type=int)
    p_run.add_argument("--p-occ", type=float, dest="p_occ")
    p_run.add_argument("--p-loss", type=float, dest="p_loss")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--dump-plan", action="store_true", help="write first-iteration plan.json")
    p_run.add_argument("--dump-lattices", action="store_true", help="write before/after grids")
    _add_common_config_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="Monte Carlo sweep over a config grid")
    p_sweep.add_argument("--widths", help="comma list, e.g. 10,20,50")
    p_sweep.add_argument("--p-occs", dest="p_occs", help="comma list, e.g. 0.5,0.7")
    p_sweep.add_argument("--p-losses", dest="p_losses", help="comma list, e.g. 0,0.01")
    p_sweep.add_argument("--seeds", default="0..99", help="range a..b or comma list")
    p_sweep.add_argument("--paper-grid", action="store_true", help="the full reference grid")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_sweep.add_argument("--csv-name", default="sweep.csv")
    _add_common_config_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="check a serialized plan against a lattice")
    p_val.add_argument("--plan", required=True, help="plan JSON path")
    p_val.add_argument("--lattice", required=True, help="lattice .txt grid or .json")
    p_val.set_defaults(func=cmd_validate)

    p_fit = sub.add_parser("fit", help="power-law fit over sweep CSV columns")
    p_fit.add_argument("--csv", required=True)
    p_fit.add_argument("--x", required=True, help="x column (CSV column, M, or N)")
    p_fit.add_argument("--y", required=True, help="y column")
    p_fit.add_argument("--where", action="append", help="equality filter key=value, repeatable")
    p_fit.add_argument("--min-x", type=float, dest="min_x", help="drop rows with x below this")
    p_fit.add_argument("--out", help="write fit JSON here")
    p_fit.set_defaults(func=cmd_fit)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InfeasibleTargetError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PlanConsistencyError as exc:
        print(f"internal consistency error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
