"""Replay planned batches on the real lattice with per-segment transport loss.

Loss model: each surviving move draws one Bernoulli(p_loss) trial per path
segment, in path order, stopping at the first failure; a failed trial removes
the atom entirely (source already cleared, destination stays empty). Trials
are drawn in (batch, move, segment) order from the run's stream, which is
part of the reproducibility contract. Filtered moves (source atom already
lost) draw nothing.

Batch timing follows the hardware model: one pickup, one sweep whose duration
is set by the longest Manhattan distance in the batch, one dropoff.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .config import SimConfig
from .errors import PlanConsistencyError
from .kinematics import PhysicsParams, move_time
from .lattice import Lattice, RngStream, load_random
from .parallel import compress
from .planner import Plan, plan, size_target

STATUS_OK = "ok"
STATUS_LOST = "lost"
STATUS_FILTERED = "filtered"


@dataclass(frozen=True)
class BatchRecord:
    """Outcome of one executed batch."""

    index: int
    statuses: tuple[str, ...]
    max_distance: int
    physical_time: float


@dataclass
class ExecutionReport:
    """Per-plan execution tally; attempted = succeeded + lost + filtered."""

    batches_executed: int = 0
    moves_attempted: int = 0
    moves_succeeded: int = 0
    moves_lost: int = 0
    moves_filtered: int = 0
    physical_time: float = 0.0
    batch_records: list[BatchRecord] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "batches_executed": self.batches_executed,
            "moves_attempted": self.moves_attempted,
            "moves_succeeded": self.moves_succeeded,
            "moves_lost": self.moves_lost,
            "moves_filtered": self.moves_filtered,
            "physical_time_s": self.physical_time,
            "batches": [
                {
                    "index": r.index,
                    "statuses": list(r.statuses),
                    "max_distance": r.max_distance,
                    "physical_time_s": r.physical_time,
                }
                for r in self.batch_records
            ],
        }


@dataclass(frozen=True)
class RunReport:
    """Final metrics of one iterate-until-filled run."""

    width: int
    p_occ: float
    p_loss: float
    seed: int
    target_side: int
    target_offset: int
    fill_rate: float
    retention: float
    iterations_used: int
    total_moves: int
    total_batches: int
    physical_time: float
    computation_time: float
    compressed: bool
    initial_atoms: int
    final_zone_atoms: int

    def to_json_dict(self) -> dict:
        return {
            "W": self.width,
            "p_occ": self.p_occ,
            "p_loss": self.p_loss,
            "seed": self.seed,
            "L": self.target_side,
            "delta": self.target_offset,
            "fill_rate": self.fill_rate,
            "retention": self.retention,
            "iterations": self.iterations_used,
            "moves": self.total_moves,
            "batches": self.total_batches,
            "physical_time_s": self.physical_time,
            "compute_time_s": self.computation_time,
            "compressed": self.compressed,
            "initial_atoms": self.initial_atoms,
            "final_zone_atoms": self.final_zone_atoms,
        }


def execute_plan(
    plan_: Plan,
    lattice: Lattice,
    p_loss: float,
    rng: RngStream,
    params: PhysicsParams = PhysicsParams(),
) -> ExecutionReport:
    """Replay a plan on ``lattice`` (mutated in place) under transport loss.

    The plan must have been computed from a lattice identical in occupancy to
    this one; a batch whose moves all lost their source is skipped entirely
    (no pickup happens, so it costs no time and does not count as executed).
    """
    if not 0 <= p_loss <= 1:
        raise ValueError(f"p_loss must be in [0, 1], got {p_loss}")
    occ = lattice.occupancy
    report = ExecutionReport()
    for bi, batch in enumerate(plan_.batches):
        statuses: list[str] = [STATUS_FILTERED] * len(batch.moves)
        surviving = [(k, m) for k, m in enumerate(batch.moves) if occ[m.source]]
        report.moves_attempted += len(batch.moves)
        report.moves_filtered += len(batch.moves) - len(surviving)
        if not surviving:
            batch.physical_time = 0.0
            batch.outcomes = [False] * len(batch.moves)
            continue
        d_max = max(m.manhattan for _, m in surviving)
        t_batch = move_time(d_max, params).total
        report.physical_time += t_batch
        report.batches_executed += 1
        for _, m in surviving:
            occ[m.source] = False
        for k, m in surviving:
            lost = False
            for _segment in m.segments:
                if rng.uniform() < p_loss:
                    lost = True
                    break
            if lost:
                statuses[k] = STATUS_LOST
                report.moves_lost += 1
            else:
                if occ[m.dest]:
                    raise PlanConsistencyError(
                        f"batch {bi}: destination {m.dest} occupied at execution"
                    )
                occ[m.dest] = True
                statuses[k] = STATUS_OK
                report.moves_succeeded += 1
        batch.physical_time = t_batch
        batch.outcomes = [s == STATUS_OK for s in statuses]
        report.batch_records.append(
            BatchRecord(
                index=bi, statuses=tuple(statuses), max_distance=d_max, physical_time=t_batch
            )
        )
    return report


def run_until_filled(config: SimConfig) -> RunReport:
    """Load, size the target once, then plan-and-execute until full or capped.

    The zone is sized from the initial atom count and held fixed; later
    iterations replan steps 2-7 on the actual post-loss lattice. Stops early
    when a plan has no moves at all, since the lattice can then never change.
    """
    config.validate()
    t0 = time.perf_counter()
    rng = RngStream(config.seed)
    lattice = load_random(config.width, config.p_occ, rng)
    initial_atoms = lattice.atom_count
    zone = size_target(initial_atoms, config.width, config.p_loss, config.sizing)
    n_target = zone.side * zone.side

    total_moves = 0
    total_batches = 0
    physical_time = 0.0
    iterations_used = 0
    for _ in range(config.iteration_cap):
        iterations_used += 1
        p = plan(lattice, zone)
        if config.compress_enabled and p.batches:
            p = compress(p, lattice)
        rep = execute_plan(p, lattice, config.p_loss, rng, config.physics)
        total_moves += rep.moves_succeeded + rep.moves_lost
        total_batches += rep.batches_executed
        physical_time += rep.physical_time
        if lattice.zone_atom_count(zone) == n_target:
            break
        if p.total_moves == 0:
            break
    final_zone_atoms = lattice.zone_atom_count(zone)
    return RunReport(
        width=config.width,
        p_occ=config.p_occ,
        p_loss=config.p_loss,
        seed=config.seed,
        target_side=zone.side,
        target_offset=zone.offset,
        fill_rate=final_zone_atoms / n_target,
        retention=final_zone_atoms / initial_atoms,
        iterations_used=iterations_used,
        total_moves=total_moves,
        total_batches=total_batches,
        physical_time=physical_time,
        computation_time=time.perf_counter() - t0,
        compressed=config.compress_enabled,
        initial_atoms=initial_atoms,
        final_zone_atoms=final_zone_atoms,
    )
