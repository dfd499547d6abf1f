"""Trapezoidal-velocity transport timing.

A move accelerates at ``a_max`` to ``v_max``, coasts, and decelerates
symmetrically; short moves degenerate to a triangular profile that never
reaches top speed. Trap pickup and dropoff each cost a fixed transfer time.

All quantities are double-precision SI seconds/meters internally; the lattice
pitch converts site distances at this boundary so no mixed-unit arithmetic
leaks elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicsParams:
    """Transport constraints of the trap hardware.

    Defaults: 2750 m/s^2 peak acceleration, 0.13 m/s peak speed, 60 us trap
    transfer each way, 5 um site pitch.
    """

    a_max: float = 2750.0
    v_max: float = 0.13
    t_transfer: float = 60e-6
    d_site: float = 5e-6

    def __post_init__(self) -> None:
        for name in ("a_max", "v_max", "t_transfer", "d_site"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def accel_distance(self) -> float:
        """Distance needed to reach top speed from rest."""
        return self.v_max**2 / (2.0 * self.a_max)


@dataclass(frozen=True)
class MoveTime:
    """Kinematic travel time plus the two fixed trap transfers."""

    kinematic: float
    total: float


def kinematic_time(d: int, params: PhysicsParams = PhysicsParams()) -> float:
    """Travel time for a straight sweep of ``d`` lattice sites, from rest to rest.

    Trapezoidal when the distance fits two full acceleration ramps, else the
    triangular accelerate-decelerate profile.
    """
    if d < 0:
        raise ValueError(f"distance must be >= 0, got {d}")
    dist = d * params.d_site
    ramp = params.accel_distance
    if 2.0 * ramp <= dist:
        return 2.0 * params.v_max / params.a_max + (dist - 2.0 * ramp) / params.v_max
    return 2.0 * math.sqrt(dist / params.a_max)


def move_time(d: int, params: PhysicsParams = PhysicsParams()) -> MoveTime:
    """Total wall time to transport an atom ``d`` sites: transfers + travel."""
    kin = kinematic_time(d, params)
    return MoveTime(kinematic=kin, total=2.0 * params.t_transfer + kin)


def segmented_kinematic_time(
    segment_lengths: list[int] | tuple[int, ...], params: PhysicsParams = PhysicsParams()
) -> float:
    """Kinematic time of a multi-segment path.

    Each axis-aligned leg starts and ends at rest (the trap must stop to turn
    a corner), so legs sum; this is the conservative reading consistent with
    drawing one loss trial per leg.
    """
    return sum(kinematic_time(d, params) for d in segment_lengths)
