"""Run configuration shared by the executor, sweep harness, and CLI."""

from __future__ import annotations

from dataclasses import dataclass, field

from .kinematics import PhysicsParams
from .planner import SizingParams


@dataclass(frozen=True)
class SimConfig:
    """Everything one Monte Carlo run depends on, seed included."""

    width: int
    p_occ: float
    p_loss: float
    seed: int = 0
    iteration_cap: int = 6
    compress_enabled: bool = False
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    sizing: SizingParams = field(default_factory=SizingParams)

    def validate(self) -> None:
        if self.width < 2:
            raise ValueError(f"width must be >= 2, got {self.width}")
        if not 0 <= self.p_occ <= 1:
            raise ValueError(f"p_occ must be in [0, 1], got {self.p_occ}")
        if not 0 <= self.p_loss <= 1:
            raise ValueError(f"p_loss must be in [0, 1], got {self.p_loss}")
        if self.iteration_cap < 1:
            raise ValueError(f"iteration_cap must be >= 1, got {self.iteration_cap}")
