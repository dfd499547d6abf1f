import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomsort import (
    Coord,
    Lattice,
    Move,
    MoveBatch,
    RngStream,
    apply_batch_lossless,
    compress,
    load_random,
    plan,
    size_target,
    validate_batch,
)
from atomsort.parallel import (
    KIND_COLLISION,
    KIND_ORDER_INVERSION,
    KIND_TONE_MISMATCH,
)
from atomsort.planner import Plan


def _lattice(rows):
    return Lattice.from_text("\n".join(rows))


def _mv(*waypoints):
    return Move.through([Coord(*p) for p in waypoints])


# ---------------------------------------------------------------------------
# single-rule hand cases
# ---------------------------------------------------------------------------


def test_valid_pair_same_row_no_violations():
    lat = _lattice(["100100", "000000", "000000", "000000", "000000", "000000"])
    batch = MoveBatch(moves=(_mv((0, 0), (0, 1)), _mv((0, 3), (0, 2))))
    assert validate_batch(batch, lat) == []


def test_duplicate_destination_is_rule_3():
    lat = _lattice(["100100", "000000", "000000", "000000", "000000", "000000"])
    batch = MoveBatch(moves=(_mv((0, 0), (0, 2)), _mv((0, 3), (0, 2))))
    rules = {v.rule_id for v in validate_batch(batch, lat)}
    assert 3 in rules


def test_crossing_same_row_moves_flag_rules_4_and_5():
    lat = _lattice(["101000", "000000", "000000", "000000", "000000", "000000"])
    batch = MoveBatch(moves=(_mv((0, 0), (0, 3)), _mv((0, 2), (0, 1))))
    rules = {v.rule_id for v in validate_batch(batch, lat)}
    assert 4 in rules and 5 in rules


def test_static_atom_on_path_is_rule_1():
    lat = _lattice(["101000", "000000", "000000", "000000", "000000", "000000"])
    batch = MoveBatch(moves=(_mv((0, 0), (0, 3)),))
    violations = validate_batch(batch, lat)
    assert [v.rule_id for v in violations] == [1]


def test_phantom_trap_crossing_is_rule_2():
    # A sweeps row 2 leftward, B drops one row in column 0; the phantom trap
    # (row of B, col of A) visits (1,5),(1,4),(1,3),(1,2) and ends at (1,1),
    # so a static atom at (1,2) is crossed even though no real path touches it
    lat = _lattice(["100000", "001000", "000001", "000000", "000000", "000000"])
    batch = MoveBatch(moves=(_mv((2, 5), (2, 1)), _mv((0, 0), (1, 0))))
    violations = validate_batch(batch, lat)
    assert {v.rule_id for v in violations} == {2}


def test_phantom_end_aligned_is_allowed():
    # identical geometry, static atom moved to the phantom's final rest cell
    lat = _lattice(["100000", "010000", "000001", "000000", "000000", "000000"])
    batch = MoveBatch(moves=(_mv((2, 5), (2, 1)), _mv((0, 0), (1, 0))))
    assert validate_batch(batch, lat) == []


def test_order_inversion_across_rows_is_rule_6():
    lat = _lattice(["100000", "000010", "000000", "000000", "000000", "000000"])
    batch = MoveBatch(moves=(_mv((0, 0), (0, 5)), _mv((1, 4), (1, 1))))
    violations = validate_batch(batch, lat)
    assert {v.rule_id for v in violations} == {6}
    assert all(v.kind == KIND_ORDER_INVERSION for v in violations)


def test_shared_start_row_inconsistent_shift_is_rule_6():
    lat = _lattice(["100100", "000000", "000000", "000000", "000000", "000000"])
    batch = MoveBatch(moves=(_mv((0, 0), (2, 0)), _mv((0, 3), (1, 3))))
    violations = validate_batch(batch, lat)
    assert {v.rule_id for v in violations} == {6}
    assert all(v.kind == KIND_TONE_MISMATCH for v in violations)


def test_chained_same_row_batch_is_legal():
    # dest of one move is the source of another; the sweep keeps order
    lat = _lattice(["110000", "000000", "000000", "000000", "000000", "000000"])
    batch = MoveBatch(moves=(_mv((0, 1), (0, 3)), _mv((0, 0), (0, 2))))
    assert validate_batch(batch, lat) == []


def test_empty_batch_is_valid():
    assert validate_batch(MoveBatch(moves=()), Lattice.empty(4)) == []


# ---------------------------------------------------------------------------
# brute-force simultaneous stepper agreement (rules 4-6)
# ---------------------------------------------------------------------------


def stepper_flags(batch: MoveBatch) -> bool:
    """Step all moves cell-by-cell at once; flag co-occupancy or a strict
    sign flip of any pair's coordinate ordering. Dumb on purpose."""
    paths = [m.path_cells() for m in batch.moves]
    horizon = max(len(p) for p in paths)

    def pos(i, t):
        p = paths[i]
        return p[min(t, len(p) - 1)]

    n = len(paths)
    for t in range(horizon):
        seen = set()
        for i in range(n):
            cell = pos(i, t)
            if cell in seen:
                return True
            seen.add(cell)
    for i in range(n):
        for j in range(i + 1, n):
            for axis in (0, 1):
                signs = set()
                for t in range(horizon):
                    d = pos(i, t)[axis] - pos(j, t)[axis]
                    signs.add(0 if d == 0 else (1 if d > 0 else -1))
                if 1 in signs and -1 in signs:
                    return True
    return False


def validator_flags_motion(batch: MoveBatch, lattice: Lattice) -> bool:
    """The validator's intersection/ordering verdict: rules 4-6, excluding the
    tone-consistency clause the collision stepper cannot observe."""
    return any(
        v.kind in (KIND_COLLISION, KIND_ORDER_INVERSION)
        for v in validate_batch(batch, lattice)
    )


FIXTURE = _lattice(
    [
        "100100",
        "000000",
        "010000",
        "000010",
        "000000",
        "001000",
    ]
)


def _enumerate_moves(lattice: Lattice, max_dist: int) -> list[Move]:
    occ = lattice.occupancy
    sources = [Coord(r, c) for r, c in zip(*np.nonzero(occ))]
    moves = []
    for s in sources:
        for r in range(6):
            for c in range(6):
                d = Coord(r, c)
                if occ[d] or d == s or abs(d.row - s.row) + abs(d.col - s.col) > max_dist:
                    continue
                if d.row == s.row or d.col == s.col:
                    moves.append(Move.through([s, d]))
                else:
                    moves.append(Move.through([s, Coord(s.row, d.col), d]))
                    moves.append(Move.through([s, Coord(d.row, s.col), d]))
    return moves


def test_stepper_agreement_all_pairs():
    moves = _enumerate_moves(FIXTURE, max_dist=3)
    for a, b in itertools.combinations(moves, 2):
        batch = MoveBatch(moves=(a, b))
        assert stepper_flags(batch) == validator_flags_motion(batch, FIXTURE), (a, b)


def test_stepper_agreement_sampled_triples():
    moves = _enumerate_moves(FIXTURE, max_dist=3)
    rng = random.Random(20240901)
    for _ in range(4000):
        trio = rng.sample(moves, 3)
        batch = MoveBatch(moves=tuple(trio))
        assert stepper_flags(batch) == validator_flags_motion(batch, FIXTURE), trio


# ---------------------------------------------------------------------------
# compression
# ---------------------------------------------------------------------------


def test_compress_single_batch_plan_unchanged():
    lat = _lattice(["100000", "000000", "000000", "000000", "000000", "000000"])
    p = Plan(width=6, batches=(MoveBatch(moves=(_mv((0, 0), (0, 1)),)),), phase_labels=("repair",))
    cp = compress(p, lat)
    assert cp.batches == p.batches


def test_compress_merges_disjoint_row_moves():
    lat = _lattice(["100000", "000000", "000001", "000000", "000000", "000000"])
    p = Plan(
        width=6,
        batches=(
            MoveBatch(moves=(_mv((0, 0), (0, 1)),)),
            MoveBatch(moves=(_mv((2, 5), (2, 4)),)),
        ),
        phase_labels=("repair", "repair"),
    )
    cp = compress(p, lat)
    assert len(cp.batches) == 1
    assert len(cp.batches[0]) == 2


def test_compress_respects_state_dependency():
    # second move departs from the first move's destination; merging would
    # need the atom before it arrives
    lat = _lattice(["100000", "000000", "000000", "000000", "000000", "000000"])
    p = Plan(
        width=6,
        batches=(
            MoveBatch(moves=(_mv((0, 0), (0, 2)),)),
            MoveBatch(moves=(_mv((0, 2), (0, 4)),)),
        ),
        phase_labels=("repair", "repair"),
    )
    cp = compress(p, lat)
    assert len(cp.batches) == 2


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=60, deadline=None)
def test_compress_replay_equivalence_and_validity(seed):
    rng = RngStream(seed)
    width = 8 + (seed % 4) * 2
    lat = load_random(width, 0.35 + 0.05 * (seed % 6), rng)
    if lat.atom_count < 2:
        return
    zone = size_target(lat.atom_count, width, 0.0)
    p = plan(lat, zone)
    if not p.batches:
        return
    cp = compress(p, lat)
    assert cp.total_moves == p.total_moves
    assert len(cp.batches) <= len(p.batches)
    ref = lat
    for b in p.batches:
        ref = apply_batch_lossless(ref, b)
    cur = lat
    for b in cp.batches:
        assert validate_batch(b, cur) == []
        cur = apply_batch_lossless(cur, b)
    assert cur == ref
