"""Occupancy-grid data model: lattice state, moves, batches, seeded loading.

The lattice is a dense W x W boolean grid (True = atom present). Dense is the
right call here: W stays in the low hundreds and every planning subroutine
scans whole rows or columns, so ``numpy`` slices beat sparse sets.

Reproducibility contract: loading draws one uniform per site in row-major
order from the run's :class:`RngStream`; loss trials (see ``executor``) draw
in (batch, move, segment) order. Fixed seed means bit-identical results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .errors import PlanConsistencyError


class Coord(NamedTuple):
    """Lattice site address, row-major: (row, col)."""

    row: int
    col: int


Segment = tuple[Coord, Coord]


class RngStream:
    """Seeded PCG64 stream with a platform-stable draw sequence.

    A thin wrapper so the draw-order contract has a single owner. Identical
    seeds produce identical sequences on every platform numpy supports.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self) -> float:
        """One draw from U[0, 1)."""
        return float(self._gen.random())

    def uniform_grid(self, rows: int, cols: int) -> np.ndarray:
        """A rows x cols block of U[0, 1) draws, filled in row-major order."""
        return self._gen.random((rows, cols))


@dataclass(frozen=True)
class Move:
    """One atom transport: source -> dest along axis-aligned segments.

    The explicit segment list matters because transport loss is drawn per
    segment, so an L-shaped path is two trials while a straight path of the
    same Manhattan length is one.
    """

    source: Coord
    dest: Coord
    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("move needs at least one segment")
        if self.segments[0][0] != self.source or self.segments[-1][1] != self.dest:
            raise ValueError("segments must run from source to dest")
        prev_end = None
        for a, b in self.segments:
            if a.row != b.row and a.col != b.col:
                raise ValueError(f"segment {a}->{b} is not axis-aligned")
            if a == b:
                raise ValueError(f"segment {a}->{b} has zero length")
            if prev_end is not None and a != prev_end:
                raise ValueError("consecutive segments must share an endpoint")
            prev_end = b

    @classmethod
    def through(cls, waypoints: list[Coord] | tuple[Coord, ...]) -> "Move":
        """Build a move from an ordered waypoint list (turn points included)."""
        pts = [Coord(int(p[0]), int(p[1])) for p in waypoints]
        segs = tuple((a, b) for a, b in zip(pts, pts[1:]))
        return cls(source=pts[0], dest=pts[-1], segments=segs)

    @property
    def manhattan(self) -> int:
        return sum(abs(a.row - b.row) + abs(a.col - b.col) for a, b in self.segments)

    def path_cells(self) -> list[Coord]:
        """Every lattice cell visited, in order, source first and dest last."""
        cells = [self.source]
        for a, b in self.segments:
            dr = (b.row > a.row) - (b.row < a.row)
            dc = (b.col > a.col) - (b.col < a.col)
            r, c = a
            while (r, c) != (b.row, b.col):
                r, c = r + dr, c + dc
                cells.append(Coord(r, c))
        return cells

    def to_json_dict(self) -> dict:
        return {
            "source": list(self.source),
            "dest": list(self.dest),
            "segments": [[list(a), list(b)] for a, b in self.segments],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Move":
        return cls(
            source=Coord(*d["source"]),
            dest=Coord(*d["dest"]),
            segments=tuple((Coord(*a), Coord(*b)) for a, b in d["segments"]),
        )


@dataclass
class MoveBatch:
    """Moves executed simultaneously under the AOD constraints.

    ``physical_time`` and ``outcomes`` stay ``None`` until the executor replays
    the batch; planning never touches them.
    """

    moves: tuple[Move, ...]
    physical_time: float | None = None
    outcomes: list[bool] | None = None

    def __len__(self) -> int:
        return len(self.moves)

    def max_manhattan(self) -> int:
        return max((m.manhattan for m in self.moves), default=0)

    def to_json_dict(self) -> dict:
        return {"moves": [m.to_json_dict() for m in self.moves]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "MoveBatch":
        return cls(moves=tuple(Move.from_json_dict(m) for m in d["moves"]))


@dataclass(frozen=True)
class TargetZone:
    """Centered L x L region to be made defect-free: offset delta, side L."""

    offset: int
    side: int

    @classmethod
    def centered(cls, width: int, side: int) -> "TargetZone":
        if not 1 <= side <= width:
            raise ValueError(f"target side {side} not in [1, {width}]")
        return cls(offset=(width - side) // 2, side=side)

    @property
    def stop(self) -> int:
        return self.offset + self.side

    def contains(self, row: int, col: int) -> bool:
        return self.offset <= row < self.stop and self.offset <= col < self.stop

    def cells(self) -> Iterator[Coord]:
        for r in range(self.offset, self.stop):
            for c in range(self.offset, self.stop):
                yield Coord(r, c)


@dataclass
class Lattice:
    """W x W boolean occupancy grid.

    A lattice is either immutable by convention (planning inputs) or owned
    exclusively by one run (the executor's live state); nothing shares
    mutable lattices across threads.
    """

    width: int
    occupancy: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.occupancy = np.asarray(self.occupancy, dtype=bool)
        if self.occupancy.shape != (self.width, self.width):
            raise ValueError(
                f"occupancy shape {self.occupancy.shape} != ({self.width}, {self.width})"
            )

    @classmethod
    def empty(cls, width: int) -> "Lattice":
        return cls(width=width, occupancy=np.zeros((width, width), dtype=bool))

    @property
    def atom_count(self) -> int:
        return int(self.occupancy.sum())

    def copy(self) -> "Lattice":
        return Lattice(width=self.width, occupancy=self.occupancy.copy())

    def zone_atom_count(self, zone: TargetZone) -> int:
        return int(self.occupancy[zone.offset : zone.stop, zone.offset : zone.stop].sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Lattice):
            return NotImplemented
        return self.width == other.width and bool(np.array_equal(self.occupancy, other.occupancy))

    # -- serialization ------------------------------------------------------

    def to_text(self) -> str:
        """One row per line, '1' = atom, '0' = empty."""
        return "\n".join("".join("1" if v else "0" for v in row) for row in self.occupancy) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Lattice":
        rows = [line.strip() for line in text.splitlines() if line.strip()]
        if not rows:
            raise ValueError("empty lattice text")
        width = len(rows)
        if any(len(r) != width for r in rows) or any(set(r) - {"0", "1"} for r in rows):
            raise ValueError("lattice text must be a square grid of 0/1 characters")
        occ = np.array([[ch == "1" for ch in r] for r in rows], dtype=bool)
        return cls(width=width, occupancy=occ)

    def to_json(self) -> str:
        bits = [int(v) for v in self.occupancy.ravel()]
        return json.dumps({"width": self.width, "bits": bits})

    @classmethod
    def from_json(cls, text: str) -> "Lattice":
        d = json.loads(text)
        width = int(d["width"])
        bits = d["bits"]
        if len(bits) != width * width:
            raise ValueError("bit list length does not match width")
        occ = np.array(bits, dtype=bool).reshape(width, width)
        return cls(width=width, occupancy=occ)


def load_random(width: int, p_occ: float, rng: RngStream) -> Lattice:
    """Stochastically load a lattice: each site holds an atom with ``p_occ``.

    Sites are sampled in row-major order so a fixed seed reproduces the same
    pattern everywhere.
    """
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    if not 0.0 <= p_occ <= 1.0:
        raise ValueError(f"p_occ must be in [0, 1], got {p_occ}")
    draws = rng.uniform_grid(width, width)
    return Lattice(width=width, occupancy=draws < p_occ)


def apply_batch_lossless(lattice: Lattice, batch: MoveBatch) -> Lattice:
    """Apply a batch assuming perfect transport; returns a new lattice.

    Simultaneous semantics: all sources lift off before any destination is
    checked, so chained moves (one move's dest equals another's source) are
    legal within a batch. Any inconsistent state is a planner bug.
    """
    occ = lattice.occupancy.copy()
    for m in batch.moves:
        if not occ[m.source]:
            raise PlanConsistencyError(f"source {m.source} is empty")
        occ[m.source] = False
    for m in batch.moves:
        if occ[m.dest]:
            raise PlanConsistencyError(f"destination {m.dest} is occupied")
        occ[m.dest] = True
    return Lattice(width=lattice.width, occupancy=occ)
