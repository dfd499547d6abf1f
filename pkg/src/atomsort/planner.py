"""Lossless planning: compute the ordered batches that fill the target zone.

All subroutines run on a virtual lattice assuming perfect transport; the
executor replays the result under loss. The pipeline is, in order:

  1. size the centered target zone from the atom budget and expected loss
  2. row-wise centering        (one parallel batch per target row)
  3. column-wise centering     (one parallel batch per target column)
  4. spread-and-squeeze cycles (compact rows outside the band toward the
                                zone's edge columns, then center columns)
  5. corner-block shifts       (slide the four offset x offset corner regions
                                inward, most parallel combination first)
  6. a shorter spread-and-squeeze
  7. per-defect repair         (nearest outside atom, straight / L-shaped /
                                A* path, one sequential batch per defect)

Determinism: ties break toward smaller row-major index everywhere, so a plan
is a pure function of the input lattice and zone.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleTargetError
from .lattice import Coord, Lattice, Move, MoveBatch, TargetZone
from .parallel import validate_batch

PHASE_CENTER_ROW = "centering-row"
PHASE_CENTER_COL = "centering-col"
PHASE_SPREAD = "spread"
PHASE_SQUEEZE = "squeeze"
PHASE_CORNER = "corner"
PHASE_REPAIR = "repair"

_Step = tuple[str, MoveBatch]


@dataclass(frozen=True)
class SizingParams:
    """Knobs of the loss-aware target sizing rule."""

    reference_width: float = 30.0
    base_move_count: float = 2.0
    safety_margin: float = 0.95

    def __post_init__(self) -> None:
        if self.reference_width < 1:
            raise ValueError("reference_width must be >= 1")
        if self.base_move_count <= 0:
            raise ValueError("base_move_count must be > 0")
        if not 0 < self.safety_margin <= 1:
            raise ValueError("safety_margin must be in (0, 1]")


@dataclass(frozen=True)
class Plan:
    """Ordered move batches plus a phase tag per batch.

    ``unrepaired`` lists target cells the repair step could not fill (the only
    way a lossless replay can end below a full zone).
    """

    width: int
    batches: tuple[MoveBatch, ...]
    phase_labels: tuple[str, ...]
    unrepaired: tuple[Coord, ...] = ()

    @property
    def total_moves(self) -> int:
        return sum(len(b) for b in self.batches)

    def to_json_dict(self) -> dict:
        return {
            "width": self.width,
            "batches": [
                {"phase": label, **batch.to_json_dict()}
                for label, batch in zip(self.phase_labels, self.batches)
            ],
            "unrepaired": [list(c) for c in self.unrepaired],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Plan":
        batches = tuple(MoveBatch.from_json_dict(b) for b in d["batches"])
        labels = tuple(b["phase"] for b in d["batches"])
        return cls(
            width=int(d["width"]),
            batches=batches,
            phase_labels=labels,
            unrepaired=tuple(Coord(*c) for c in d.get("unrepaired", [])),
        )


def size_target(
    atom_count: int, width: int, p_loss: float, params: SizingParams = SizingParams()
) -> TargetZone:
    """Loss-aware target sizing: budget the expected per-atom transport loss.

    Scales the per-atom move estimate with sqrt(width / reference width),
    discounts the atom budget by expected survival and the safety margin, and
    takes the largest square that fits.
    """
    if not 0 <= p_loss < 1:
        raise ValueError(f"p_loss must be in [0, 1), got {p_loss}")
    if atom_count < 1:
        raise InfeasibleTargetError("no atoms loaded, cannot size a target zone")
    moves_est = params.base_move_count * math.sqrt(width / params.reference_width)
    effective = atom_count * (1.0 - p_loss) ** moves_est * params.safety_margin
    side = int(math.floor(math.sqrt(effective)))
    if side < 1:
        raise InfeasibleTargetError(
            f"effective atom budget {effective:.3f} cannot fill even a 1x1 target"
        )
    return TargetZone.centered(width, side)


# ---------------------------------------------------------------------------
# centering
# ---------------------------------------------------------------------------


def _half_split(zone: TargetZone) -> int:
    """Last index of the left/top half; the middle cell belongs to it."""
    return zone.offset + (zone.side + 1) // 2 - 1


def _center_line(line: np.ndarray, lo: int, hi: int, mid: int) -> list[tuple[int, int]]:
    """Center-out defect filling along one occupancy line (a row or column view).

    Left-half defects (indices lo..mid) pair with the nearest atom on their
    low side, processed from the middle outward; the high half mirrors this.
    Chained pulls of already-placed atoms are intended: an atom cannot sweep
    over its occupied neighbour, so gaps close by shifting the whole run.
    Mutates ``line`` and returns (src, dst) index pairs.
    """
    pairs: list[tuple[int, int]] = []
    for c in range(mid, lo - 1, -1):
        if line[c]:
            continue
        left = np.flatnonzero(line[:c])
        if len(left) == 0:
            continue
        s = int(left[-1])
        pairs.append((s, c))
        line[s] = False
        line[c] = True
    for c in range(mid + 1, hi):
        if line[c]:
            continue
        right = np.flatnonzero(line[c + 1 :])
        if len(right) == 0:
            continue
        s = int(c + 1 + right[0])
        pairs.append((s, c))
        line[s] = False
        line[c] = True
    return pairs


def _center_rows_steps(occ: np.ndarray, zone: TargetZone) -> list[_Step]:
    steps = []
    mid = _half_split(zone)
    for r in range(zone.offset, zone.stop):
        pairs = _center_line(occ[r], zone.offset, zone.stop, mid)
        if pairs:
            moves = tuple(Move.through([Coord(r, s), Coord(r, d)]) for s, d in pairs)
            steps.append((PHASE_CENTER_ROW, MoveBatch(moves)))
    return steps


def _center_cols_steps(occ: np.ndarray, zone: TargetZone, label: str = PHASE_CENTER_COL) -> list[_Step]:
    steps = []
    mid = _half_split(zone)
    for c in range(zone.offset, zone.stop):
        pairs = _center_line(occ[:, c], zone.offset, zone.stop, mid)
        if pairs:
            moves = tuple(Move.through([Coord(s, c), Coord(d, c)]) for s, d in pairs)
            steps.append((label, MoveBatch(moves)))
    return steps


# ---------------------------------------------------------------------------
# spread and squeeze
# ---------------------------------------------------------------------------


def _compaction_pairs(line: np.ndarray, toward_low: bool) -> list[tuple[int, int]]:
    """Slide every atom of a line as far toward one end as it can stack."""
    cells = np.flatnonzero(line)
    pairs = []
    if toward_low:
        for k, c in enumerate(cells):
            if k != c:
                pairs.append((int(c), int(k)))
    else:
        top = len(line) - 1
        for k, c in enumerate(cells[::-1]):
            if top - k != c:
                pairs.append((int(c), int(top - k)))
    return pairs


def _edge_relief_steps(occ: np.ndarray, zone: TargetZone, width: int) -> list[_Step]:
    """Feed zone edges that coincide with the lattice boundary.

    When the zone touches the field edge there is no band on that side, so
    centering (which only pulls defects from their outward side) starves the
    touching rows/columns. Compacting such a starved line flush against the
    boundary closes the leading defects with the line's own atoms plus
    whatever the opposite band supplies, and pushes any residual hole to the
    zone's inner edge where squeeze or repair can reach it.
    """
    steps: list[_Step] = []
    lo, hi = zone.offset, zone.stop

    def compact(line: np.ndarray, toward_low: bool, as_row: bool, index: int) -> None:
        pairs = _compaction_pairs(line, toward_low)
        if not pairs:
            return
        for s, d in pairs:
            line[s] = False
            line[d] = True
        if as_row:
            moves = tuple(Move.through([Coord(index, s), Coord(index, d)]) for s, d in pairs)
        else:
            moves = tuple(Move.through([Coord(s, index), Coord(d, index)]) for s, d in pairs)
        steps.append((PHASE_SPREAD, MoveBatch(moves)))

    if lo == 0:
        for r in range(lo, hi):
            if not occ[r, 0]:
                compact(occ[r], True, as_row=True, index=r)
        for c in range(lo, hi):
            if not occ[0, c]:
                compact(occ[:, c], True, as_row=False, index=c)
    if hi == width:
        for r in range(lo, hi):
            if not occ[r, width - 1]:
                compact(occ[r], False, as_row=True, index=r)
        for c in range(lo, hi):
            if not occ[width - 1, c]:
                compact(occ[:, c], False, as_row=False, index=c)
    return steps


def _spread_once(occ: np.ndarray, zone: TargetZone, width: int) -> list[_Step]:
    """Compact every outside row's in-span atoms toward the zone edge columns.

    Centering fills the zone from the middle out, so leftover defects sit in
    the zone's outer columns; stacking spare atoms against the span edges
    lines them up with exactly those columns for the squeeze that follows.
    """
    steps = []
    lo, hi = zone.offset, zone.stop
    mid = _half_split(zone)
    for r in [*range(0, zone.offset), *range(zone.stop, width)]:
        row = occ[r]
        pairs: list[tuple[int, int]] = []
        left_cols = np.flatnonzero(row[lo : mid + 1]) + lo
        for k, c in enumerate(left_cols):
            if lo + k != c:
                pairs.append((int(c), lo + k))
        right_cols = np.flatnonzero(row[mid + 1 : hi]) + mid + 1
        for k, c in enumerate(right_cols[::-1]):
            if hi - 1 - k != c:
                pairs.append((int(c), hi - 1 - k))
        if pairs:
            for s, d in pairs:
                row[s] = False
                row[d] = True
            moves = tuple(Move.through([Coord(r, s), Coord(r, d)]) for s, d in pairs)
            steps.append((PHASE_SPREAD, MoveBatch(moves)))
    steps += _edge_relief_steps(occ, zone, width)
    return steps


def _spread_squeeze_steps(
    occ: np.ndarray, zone: TargetZone, width: int, max_cycles: int
) -> list[_Step]:
    if max_cycles < 1:
        raise ValueError("max_cycles must be >= 1")
    steps: list[_Step] = []
    for _ in range(max_cycles):
        cycle = _spread_once(occ, zone, width)
        cycle += _center_cols_steps(occ, zone, label=PHASE_SQUEEZE)
        steps += cycle
        if not cycle:
            break
    return steps


# ---------------------------------------------------------------------------
# corner blocks
# ---------------------------------------------------------------------------


def _corner_steps(occ: np.ndarray, zone: TargetZone, width: int) -> list[_Step]:
    delta = zone.offset
    steps: list[_Step] = []
    if delta >= 1:
        lo_rows = range(0, delta)
        hi_rows = range(width - delta, width)
        lo_cols = range(0, delta)
        hi_cols = range(width - delta, width)
        blocks = {
            "TL": (lo_rows, lo_cols, delta, delta),
            "TR": (lo_rows, hi_cols, delta, -delta),
            "BL": (hi_rows, lo_cols, -delta, delta),
            "BR": (hi_rows, hi_cols, -delta, -delta),
        }

        def block_moves(name: str) -> list[Move]:
            rows, cols, dr, dc = blocks[name]
            moves = []
            for r in rows:
                for c in cols:
                    if occ[r, c]:
                        # horizontal leg first, then vertical; two legs means
                        # two loss trials at execution time
                        moves.append(Move.through([Coord(r, c), Coord(r, c + dc), Coord(r + dr, c + dc)]))
            return moves

        remaining = {"TL", "TR", "BL", "BR"}
        combos = [
            ("TL", "TR", "BL", "BR"),
            ("TL", "TR"),
            ("BL", "BR"),
            ("TL", "BL"),
            ("TR", "BR"),
            ("TL",),
            ("TR",),
            ("BL",),
            ("BR",),
        ]
        lattice_view = Lattice(width=width, occupancy=occ)
        for combo in combos:
            if not set(combo) <= remaining:
                continue
            moves = [m for name in combo for m in block_moves(name)]
            if not moves:
                remaining -= set(combo)
                continue
            if any(occ[m.dest] for m in moves):
                continue
            batch = MoveBatch(moves=tuple(moves))
            if validate_batch(batch, lattice_view):
                continue
            for m in moves:
                occ[m.source] = False
            for m in moves:
                occ[m.dest] = True
            steps.append((PHASE_CORNER, batch))
            remaining -= set(combo)
    steps += _center_cols_steps(occ, zone, label=PHASE_SQUEEZE)
    return steps


# ---------------------------------------------------------------------------
# defect repair
# ---------------------------------------------------------------------------


def _straight_path(occ: np.ndarray, src: Coord, dst: Coord) -> list[Coord] | None:
    if src.row == dst.row:
        step = 1 if dst.col > src.col else -1
        if all(not occ[src.row, c] for c in range(src.col + step, dst.col, step)):
            return [src, dst]
        return None
    if src.col == dst.col:
        step = 1 if dst.row > src.row else -1
        if all(not occ[r, src.col] for r in range(src.row + step, dst.row, step)):
            return [src, dst]
    return None


def _l_path(occ: np.ndarray, src: Coord, dst: Coord, corner: Coord) -> list[Coord] | None:
    if occ[corner]:
        return None
    for leg_start, leg_end in ((src, corner), (corner, dst)):
        dr = (leg_end.row > leg_start.row) - (leg_end.row < leg_start.row)
        dc = (leg_end.col > leg_start.col) - (leg_end.col < leg_start.col)
        r, c = leg_start
        while (r, c) != tuple(leg_end):
            r, c = r + dr, c + dc
            if (r, c) != tuple(dst) and (r, c) != tuple(corner) and occ[r, c]:
                return None
    if occ[dst]:
        return None
    return [src, corner, dst]


def _astar_path(occ: np.ndarray, src: Coord, dst: Coord, width: int) -> list[Coord] | None:
    """4-neighbour A* over empty sites, deterministic tie-breaking."""

    def h(r: int, c: int) -> int:
        return abs(r - dst.row) + abs(c - dst.col)

    start = (src.row, src.col)
    goal = (dst.row, dst.col)
    best: dict[tuple[int, int], int] = {start: 0}
    frontier: list[tuple[int, int, int, int]] = [(h(*start), *start, 0)]
    came: dict[tuple[int, int], tuple[int, int]] = {}
    while frontier:
        _, r, c, g = heapq.heappop(frontier)
        if (r, c) == goal:
            cells = [goal]
            while cells[-1] != start:
                cells.append(came[cells[-1]])
            cells.reverse()
            return _condense([Coord(*p) for p in cells])
        if g > best.get((r, c), g):
            continue
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            nr, nc = r + dr, c + dc
            if not (0 <= nr < width and 0 <= nc < width):
                continue
            if occ[nr, nc] and (nr, nc) != goal:
                continue
            ng = g + 1
            if ng < best.get((nr, nc), 1 << 30):
                best[(nr, nc)] = ng
                came[(nr, nc)] = (r, c)
                heapq.heappush(frontier, (ng + h(nr, nc), nr, nc, ng))
    return None


def _condense(cells: list[Coord]) -> list[Coord]:
    """Collapse a unit-step cell path into its turn-point waypoints."""
    if len(cells) < 3:
        return cells
    out = [cells[0]]
    for prev, here, nxt in zip(cells, cells[1:], cells[2:]):
        if (here.row - prev.row, here.col - prev.col) != (nxt.row - here.row, nxt.col - here.col):
            out.append(here)
    out.append(cells[-1])
    return out


def _find_path(occ: np.ndarray, src: Coord, dst: Coord, width: int) -> list[Coord] | None:
    if src.row == dst.row or src.col == dst.col:
        return _straight_path(occ, src, dst)
    for corner in (Coord(src.row, dst.col), Coord(dst.row, src.col)):
        path = _l_path(occ, src, dst, corner)
        if path:
            return path
    return _astar_path(occ, src, dst, width)


def _defect_depths(occ: np.ndarray, zone: TargetZone, width: int) -> np.ndarray:
    """BFS distance of every empty cell from the empty space outside the zone."""
    dist = np.full((width, width), -1, dtype=np.int32)
    frontier = []
    for r in range(width):
        for c in range(width):
            if not occ[r, c] and not zone.contains(r, c):
                dist[r, c] = 0
                frontier.append((r, c))
    queue = deque(frontier)
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            nr, nc = r + dr, c + dc
            if 0 <= nr < width and 0 <= nc < width and not occ[nr, nc] and dist[nr, nc] < 0:
                dist[nr, nc] = dist[r, c] + 1
                queue.append((nr, nc))
    return dist


def _repair_steps(
    occ: np.ndarray, zone: TargetZone, width: int
) -> tuple[list[_Step], list[Coord]]:
    steps: list[_Step] = []
    unrepaired: list[Coord] = []
    lo, hi = zone.offset, zone.stop
    defects = [
        Coord(r, c) for r in range(lo, hi) for c in range(lo, hi) if not occ[r, c]
    ]
    if not defects:
        return steps, unrepaired

    # deepest defects first: filling a cell whose escape route runs through
    # shallower (still empty) defects can never strand them, while the
    # opposite order walls off the interior
    depth = _defect_depths(occ, zone, width)
    defects.sort(key=lambda d: (0, -depth[d], d.row, d.col) if depth[d] >= 0 else (1, d.row, d.col))

    rows, cols = np.nonzero(occ)
    outside = (rows < lo) | (rows >= hi) | (cols < lo) | (cols >= hi)
    candidates = {(int(r), int(c)) for r, c in zip(rows[outside], cols[outside])}

    for defect in defects:
        order = sorted(
            candidates,
            key=lambda rc: (abs(rc[0] - defect.row) + abs(rc[1] - defect.col), rc[0], rc[1]),
        )
        move = None
        for rc in order:
            src = Coord(*rc)
            path = _find_path(occ, src, defect, width)
            if path is not None:
                move = Move.through(path)
                break
        if move is None:
            unrepaired.append(defect)
            continue
        occ[move.source] = False
        occ[move.dest] = True
        candidates.discard(tuple(move.source))
        steps.append((PHASE_REPAIR, MoveBatch(moves=(move,))))
    return steps, unrepaired


# ---------------------------------------------------------------------------
# public subroutine API (each mutates the virtual lattice it is given)
# ---------------------------------------------------------------------------


def center_rows(lattice: Lattice, zone: TargetZone) -> list[MoveBatch]:
    return [b for _, b in _center_rows_steps(lattice.occupancy, zone)]


def center_columns(lattice: Lattice, zone: TargetZone) -> list[MoveBatch]:
    return [b for _, b in _center_cols_steps(lattice.occupancy, zone)]


def spread_and_squeeze(lattice: Lattice, zone: TargetZone, max_cycles: int = 4) -> list[MoveBatch]:
    return [b for _, b in _spread_squeeze_steps(lattice.occupancy, zone, lattice.width, max_cycles)]


def corner_moves(lattice: Lattice, zone: TargetZone) -> list[MoveBatch]:
    return [b for _, b in _corner_steps(lattice.occupancy, zone, lattice.width)]


def repair_defects(lattice: Lattice, zone: TargetZone) -> tuple[list[MoveBatch], list[Coord]]:
    steps, unrepaired = _repair_steps(lattice.occupancy, zone, lattice.width)
    return [b for _, b in steps], unrepaired


def plan(lattice: Lattice, zone: TargetZone) -> Plan:
    """Run the full subroutine pipeline on a virtual copy of ``lattice``."""
    occ = lattice.occupancy.copy()
    width = lattice.width
    steps: list[_Step] = []
    steps += _center_rows_steps(occ, zone)
    steps += _center_cols_steps(occ, zone)
    steps += _spread_squeeze_steps(occ, zone, width, max_cycles=4)
    steps += _corner_steps(occ, zone, width)
    steps += _spread_squeeze_steps(occ, zone, width, max_cycles=3)
    repair, unrepaired = _repair_steps(occ, zone, width)
    steps += repair
    return Plan(
        width=width,
        batches=tuple(b for _, b in steps),
        phase_labels=tuple(label for label, _ in steps),
        unrepaired=tuple(unrepaired),
    )
