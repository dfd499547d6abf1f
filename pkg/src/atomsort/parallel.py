"""Six-rule AOD batch validation and greedy plan compression.

Crossed 1D deflectors move whole rows/columns of traps at once, which forbids
tone crossings and imposes ordering constraints on simultaneous moves. The
validator checks a batch against the rule set below; the compressor greedily
merges moves of a plan into earlier batches whenever the merged batch still
validates against the correctly reconstructed pre-batch lattice state.

Rules (ids match the canonical enumeration):
  1 static blocking      - a path may not sweep over a non-moving atom
  2 no crossing lines    - a phantom trap (row tone of one move crossed with
                           the column tone of another) may not transit over a
                           static atom; ending aligned on one is allowed
  3 unique endpoints     - no two moves share a source, none share a dest
  4 no path intersection - no two moving atoms may ever occupy the same cell
                           while the batch plays out cell-by-cell
  5 ordering in a line   - moves starting in one row (column) keep their
                           left-right (top-bottom) order
  6 ordering across lines- relative column order of moves on different rows
                           (and row order on different columns) never inverts;
                           moves picked up on a shared line must displace that
                           line consistently (equal perpendicular shift)

Rules 4-6 are evaluated on stepped trajectories (every move advances one cell
per tick along its own path, then dwells at its destination). A pair violates
order when the sign of their coordinate difference strictly flips at any two
ticks. The "consistent endpoints" clause of rule 6 is interpreted as: moves
whose sources share a row (column) must have equal net row (column)
displacement, since both atoms ride the same tone. That clause models tone
sharing and is intentionally invisible to a pure collision simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import PlanConsistencyError
from .lattice import Coord, Lattice, Move, MoveBatch

KIND_STATIC_BLOCK = "static-block"
KIND_PHANTOM_CROSS = "phantom-cross"
KIND_DUPLICATE_SOURCE = "duplicate-source"
KIND_DUPLICATE_DEST = "duplicate-dest"
KIND_COLLISION = "collision"
KIND_ORDER_INVERSION = "order-inversion"
KIND_TONE_MISMATCH = "tone-mismatch"


@dataclass(frozen=True)
class RuleViolation:
    rule_id: int
    move_indices: tuple[int, ...]
    detail: str
    kind: str


def _trajectories(paths: Sequence[list[Coord]]) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-move cell paths into (n, T) row/col arrays with end dwell."""
    n = len(paths)
    horizon = max(len(p) for p in paths)
    rows = np.empty((n, horizon), dtype=np.int32)
    cols = np.empty((n, horizon), dtype=np.int32)
    for i, p in enumerate(paths):
        k = len(p)
        rows[i, :k] = [c.row for c in p]
        cols[i, :k] = [c.col for c in p]
        rows[i, k:] = p[-1].row
        cols[i, k:] = p[-1].col
    return rows, cols


def _statics_grid(lattice: Lattice, moves: Sequence[Move]) -> np.ndarray:
    statics = lattice.occupancy.copy()
    for m in moves:
        statics[m.source] = False
    return statics


def validate_batch(batch: MoveBatch, lattice: Lattice) -> list[RuleViolation]:
    """Check every rule; returns violations as data (empty list = valid).

    The lattice must reflect the state immediately before the batch executes.
    """
    moves = batch.moves
    n = len(moves)
    if n == 0:
        return []
    width = lattice.width
    paths = [m.path_cells() for m in moves]
    for i, p in enumerate(paths):
        for cell in p:
            if not (0 <= cell.row < width and 0 <= cell.col < width):
                raise ValueError(f"move {i} leaves the lattice at {cell}")

    out: list[RuleViolation] = []
    statics = _statics_grid(lattice, moves)

    # rule 1: own path sweeping over a static atom (source cell holds the
    # moving atom itself and is skipped)
    for i, p in enumerate(paths):
        for cell in p[1:]:
            if statics[cell]:
                out.append(
                    RuleViolation(1, (i,), f"move {i} sweeps over static atom at {cell}", KIND_STATIC_BLOCK)
                )
                break

    # rule 3: endpoint uniqueness
    by_source: dict[Coord, list[int]] = {}
    by_dest: dict[Coord, list[int]] = {}
    for i, m in enumerate(moves):
        by_source.setdefault(m.source, []).append(i)
        by_dest.setdefault(m.dest, []).append(i)
    for cell, idx in by_source.items():
        if len(idx) > 1:
            out.append(RuleViolation(3, tuple(idx), f"moves {idx} share source {cell}", KIND_DUPLICATE_SOURCE))
    for cell, idx in by_dest.items():
        if len(idx) > 1:
            out.append(RuleViolation(3, tuple(idx), f"moves {idx} share destination {cell}", KIND_DUPLICATE_DEST))

    rows, cols = _trajectories(paths)
    srow = np.array([m.source.row for m in moves], dtype=np.int32)
    scol = np.array([m.source.col for m in moves], dtype=np.int32)
    drow = np.array([m.dest.row - m.source.row for m in moves], dtype=np.int32)
    dcol = np.array([m.dest.col - m.source.col for m in moves], dtype=np.int32)

    for i in range(n):
        out.extend(_checks_against(i, np.arange(i + 1, n), rows, cols, srow, scol, drow, dcol))
        out.extend(_phantom_checks(i, rows, cols, statics))
    out.sort(key=lambda v: (v.rule_id, v.move_indices, v.kind))
    return out


def _checks_against(
    i: int,
    js: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    srow: np.ndarray,
    scol: np.ndarray,
    drow: np.ndarray,
    dcol: np.ndarray,
) -> list[RuleViolation]:
    """Unordered pair rules (4, 5, 6) of move ``i`` against moves ``js``."""
    out: list[RuleViolation] = []
    if len(js) == 0:
        return out
    ro, co = rows[js], cols[js]

    collide = ((ro == rows[i]) & (co == cols[i])).any(axis=1)
    for j in js[collide]:
        out.append(
            RuleViolation(4, (i, int(j)), f"moves {i} and {j} occupy one cell mid-flight", KIND_COLLISION)
        )

    dr = rows[i][None, :] - ro
    dc = cols[i][None, :] - co
    row_flip = (dr > 0).any(axis=1) & (dr < 0).any(axis=1)
    col_flip = (dc > 0).any(axis=1) & (dc < 0).any(axis=1)
    same_row = srow[js] == srow[i]
    same_col = scol[js] == scol[i]
    for j, flip, shared in ((j, f, s) for j, f, s in zip(js, col_flip, same_row) if f):
        rule = 5 if shared else 6
        out.append(
            RuleViolation(rule, (i, int(j)), f"moves {i} and {j} invert column order", KIND_ORDER_INVERSION)
        )
    for j, flip, shared in ((j, f, s) for j, f, s in zip(js, row_flip, same_col) if f):
        rule = 5 if shared else 6
        out.append(
            RuleViolation(rule, (i, int(j)), f"moves {i} and {j} invert row order", KIND_ORDER_INVERSION)
        )

    # shared pickup line must shift consistently: equal perpendicular
    # displacement, else the one tone holding both atoms would have to split
    for j in js[same_row & (drow[js] != drow[i])]:
        out.append(
            RuleViolation(
                6, (i, int(j)), f"moves {i} and {j} start in one row but shift it differently", KIND_TONE_MISMATCH
            )
        )
    for j in js[same_col & (dcol[js] != dcol[i])]:
        out.append(
            RuleViolation(
                6, (i, int(j)), f"moves {i} and {j} start in one column but shift it differently", KIND_TONE_MISMATCH
            )
        )
    return out


def _phantom_checks(i: int, rows: np.ndarray, cols: np.ndarray, statics: np.ndarray) -> list[RuleViolation]:
    """Rule 2 for every ordered pair (i, j): phantom trap (row of i, col of j).

    The crossed tones of two simultaneously active moves create a spurious
    trap at their intersection; sweeping it over a static atom disturbs that
    atom. A phantom parked on its own final cell is the allowed
    "ends aligned" case.
    """
    n = rows.shape[0]
    if n == 1:
        return []
    ph_static = statics[rows[i][None, :], cols]  # (n, T)
    coincide = (cols == cols[i][None, :]) | (rows == rows[i][None, :])
    aligned = (rows[i] == rows[i, -1])[None, :] & (cols == cols[:, -1:])
    bad = ph_static & ~coincide & ~aligned
    bad[i, :] = False
    out = []
    for j in np.flatnonzero(bad.any(axis=1)):
        t = int(bad[j].argmax())
        cell = Coord(int(rows[i, t]), int(cols[j, t]))
        out.append(
            RuleViolation(
                2,
                (i, int(j)),
                f"tone crossing of moves {i},{j} sweeps phantom trap over static atom at {cell}",
                KIND_PHANTOM_CROSS,
            )
        )
    return out


# ---------------------------------------------------------------------------
# plan compression
# ---------------------------------------------------------------------------


class _BatchInfo:
    """Cached geometry of one batch during compression."""

    __slots__ = ("moves", "paths", "rows", "cols", "srow", "scol", "drow", "dcol",
                 "sources", "dests", "row_counts", "col_counts", "statics")

    def __init__(self, moves: list[Move]):
        self.moves = moves
        self.rebuild()

    def rebuild(self) -> None:
        self.paths = [m.path_cells() for m in self.moves]
        if self.moves:
            self.rows, self.cols = _trajectories(self.paths)
        else:
            self.rows = np.empty((0, 1), dtype=np.int32)
            self.cols = np.empty((0, 1), dtype=np.int32)
        self.srow = np.array([m.source.row for m in self.moves], dtype=np.int32)
        self.scol = np.array([m.source.col for m in self.moves], dtype=np.int32)
        self.drow = np.array([m.dest.row - m.source.row for m in self.moves], dtype=np.int32)
        self.dcol = np.array([m.dest.col - m.source.col for m in self.moves], dtype=np.int32)
        self.sources = {m.source for m in self.moves}
        self.dests = {m.dest for m in self.moves}
        self.row_counts: dict[int, int] = {}
        self.col_counts: dict[int, int] = {}
        for p in self.paths:
            for r in {c.row for c in p}:
                self.row_counts[r] = self.row_counts.get(r, 0) + 1
            for c in {c.col for c in p}:
                self.col_counts[c] = self.col_counts.get(c, 0) + 1
        self.statics: np.ndarray | None = None  # lazily derived, see _statics_for

    def touches(self, cell: Coord) -> bool:
        # every path cell and every phantom cell of this batch lies in the
        # row-set x col-set product, so a cell outside it cannot interact
        return cell.row in self.row_counts and cell.col in self.col_counts

    def touches_excluding(self, cell: Coord, member: Move, member_path: list[Coord]) -> bool:
        """Same product test with one member move left out."""
        rows = self.row_counts.get(cell.row, 0)
        cols = self.col_counts.get(cell.col, 0)
        if cell.row in {c.row for c in member_path}:
            rows -= 1
        if cell.col in {c.col for c in member_path}:
            cols -= 1
        return rows >= 1 and cols >= 1


def _statics_for(info: _BatchInfo, state: np.ndarray) -> np.ndarray:
    """Static-atom grid for a batch, cached until the batch or state changes."""
    if info.statics is None:
        statics = state.copy()
        for mv in info.moves:
            statics[mv.source] = False
        info.statics = statics
    return info.statics


def _pad_to(arr: np.ndarray, horizon: int) -> np.ndarray:
    if arr.shape[1] >= horizon:
        return arr
    pad = np.repeat(arr[:, -1:], horizon - arr.shape[1], axis=1)
    return np.concatenate([arr, pad], axis=1)


def _can_join(info: _BatchInfo, m: Move, mpath: list[Coord], state: np.ndarray) -> bool:
    """Would batch ``info`` still validate with ``m`` added, given pre-batch state?

    Exact incremental equivalent of revalidating the merged batch: every rule
    is per-move or per-pair, the batch is already valid on its own, and adding
    a move only removes its source from the static set (a pure relaxation for
    the existing moves). Checks run cheapest first.
    """
    if not state[m.source] or state[m.dest]:
        return False
    if m.source in info.sources or m.dest in info.dests:
        return False

    statics = _statics_for(info, state)
    for cell in mpath[1:]:
        if statics[cell]:
            return False

    n = len(info.moves)
    if n == 0:
        return True

    same_row = info.srow == m.source.row
    same_col = info.scol == m.source.col
    if (same_row & (info.drow != (m.dest.row - m.source.row))).any():
        return False
    if (same_col & (info.dcol != (m.dest.col - m.source.col))).any():
        return False

    horizon = max(info.rows.shape[1], len(mpath))
    ro = _pad_to(info.rows, horizon)
    co = _pad_to(info.cols, horizon)
    mr = np.full(horizon, mpath[-1].row, dtype=np.int32)
    mc = np.full(horizon, mpath[-1].col, dtype=np.int32)
    mr[: len(mpath)] = [c.row for c in mpath]
    mc[: len(mpath)] = [c.col for c in mpath]

    if ((ro == mr[None, :]) & (co == mc[None, :])).any():
        return False

    dr = mr[None, :] - ro
    dc = mc[None, :] - co
    if ((dr > 0).any(axis=1) & (dr < 0).any(axis=1)).any():
        return False
    if ((dc > 0).any(axis=1) & (dc < 0).any(axis=1)).any():
        return False

    # rule 2, both phantom orientations; m's own source must not count as
    # static, so mask it out of the cached grid positionally
    coincide = (co == mc[None, :]) | (ro == mr[None, :])
    msrc = (mr[None, :] == m.source.row) & (co == m.source.col)
    ph = statics[mr[None, :], co]
    aligned = (mr == mr[-1])[None, :] & (co == co[:, -1:])
    if (ph & ~coincide & ~aligned & ~msrc).any():
        return False
    msrc = (ro == m.source.row) & (mc[None, :] == m.source.col)
    ph = statics[ro, mc[None, :]]
    aligned = (ro == ro[:, -1:]) & (mc == mc[-1])[None, :]
    if (ph & ~coincide & ~aligned & ~msrc).any():
        return False
    return True


def compress(plan, initial_lattice: Lattice):
    """Greedily merge plan moves into earlier batches (fewer, larger batches).

    Pass semantics: in plan order, each move tries the earliest batch whose
    merged form still validates against the reconstructed pre-batch state; a
    move may only jump over batches that never touch its source or destination
    cells (conservatively: their visited row x column product), which keeps
    every skipped batch valid and the final lattice bit-identical. Passes
    repeat until none merges. Raises PlanConsistencyError if the compressed
    plan stops replaying to the original final state.
    """
    from .lattice import apply_batch_lossless  # local to avoid cycle noise

    batches = [list(b.moves) for b in plan.batches]
    labels = list(plan.phase_labels)
    occ0 = initial_lattice.occupancy.copy()

    # states[k] = occupancy before batch k; states[-1] = final occupancy
    states = [occ0]
    cur = occ0
    for mvs in batches:
        cur = cur.copy()
        for m in mvs:
            cur[m.source] = False
        for m in mvs:
            cur[m.dest] = True
        states.append(cur)
    target_final = states[-1].copy()

    infos = [_BatchInfo(mvs) for mvs in batches]

    changed = True
    while changed:
        changed = False
        bi = 1
        while bi < len(batches):
            for m in list(batches[bi]):
                mpath = m.path_cells()
                # leaving early parks this atom on its destination while the
                # rest of its former batch still runs; forbid that whenever a
                # batchmate's sweep (or phantom) could reach the parked cell
                if infos[bi].touches_excluding(m.dest, m, mpath):
                    continue
                # earliest candidate: just after the last earlier batch that
                # touches either endpoint of this move
                j_min = 0
                for k in range(bi - 1, -1, -1):
                    if infos[k].touches(m.source) or infos[k].touches(m.dest):
                        j_min = k + 1
                        break
                target = None
                for j in range(j_min, bi):
                    if _can_join(infos[j], m, mpath, states[j]):
                        target = j
                        break
                if target is None:
                    continue
                batches[bi].remove(m)
                infos[bi].rebuild()
                batches[target].append(m)
                infos[target].rebuild()
                for k in range(target + 1, bi + 1):
                    states[k][m.source] = False
                    states[k][m.dest] = True
                    infos[k].statics = None  # cached grids no longer match states[k]
                changed = True
            bi += 1
        keep = [k for k, mvs in enumerate(batches) if mvs]
        if len(keep) != len(batches):
            batches = [batches[k] for k in keep]
            labels = [labels[k] for k in keep]
            infos = [infos[k] for k in keep]
            states = [states[k] for k in keep] + [states[-1]]

    new_batches = tuple(MoveBatch(moves=tuple(mvs)) for mvs in batches)
    out = replace(plan, batches=new_batches, phase_labels=tuple(labels))

    check = initial_lattice
    for b in out.batches:
        check = apply_batch_lossless(check, b)
    if not np.array_equal(check.occupancy, target_final):
        raise PlanConsistencyError("compressed plan does not replay to the original final state")
    return out
