"""Loss-aware assembly of defect-free atom arrays in optical-trap lattices.

Plan on a lossless virtual lattice, execute under per-segment transport loss,
iterate until the centered target zone is full, and sweep the whole thing
Monte Carlo style.
"""

from .config import SimConfig
from .errors import AtomsortError, InfeasibleTargetError, PlanConsistencyError
from .executor import ExecutionReport, RunReport, execute_plan, run_until_filled
from .harness import (
    ScalingFit,
    SweepSummary,
    fill_rate,
    fit_power_law,
    retention_rate,
    sweep,
)
from .kinematics import MoveTime, PhysicsParams, kinematic_time, move_time, segmented_kinematic_time
from .lattice import (
    Coord,
    Lattice,
    Move,
    MoveBatch,
    RngStream,
    TargetZone,
    apply_batch_lossless,
    load_random,
)
from .parallel import RuleViolation, compress, validate_batch
from .planner import (
    Plan,
    SizingParams,
    center_columns,
    center_rows,
    corner_moves,
    plan,
    repair_defects,
    size_target,
    spread_and_squeeze,
)

__all__ = [
    "AtomsortError",
    "Coord",
    "ExecutionReport",
    "InfeasibleTargetError",
    "Lattice",
    "Move",
    "MoveBatch",
    "MoveTime",
    "PhysicsParams",
    "Plan",
    "PlanConsistencyError",
    "RngStream",
    "RuleViolation",
    "RunReport",
    "ScalingFit",
    "SimConfig",
    "SizingParams",
    "SweepSummary",
    "TargetZone",
    "apply_batch_lossless",
    "center_columns",
    "center_rows",
    "compress",
    "corner_moves",
    "execute_plan",
    "fill_rate",
    "fit_power_law",
    "kinematic_time",
    "load_random",
    "move_time",
    "plan",
    "repair_defects",
    "retention_rate",
    "run_until_filled",
    "segmented_kinematic_time",
    "size_target",
    "spread_and_squeeze",
    "sweep",
    "validate_batch",
]

__version__ = "0.1.0"
