from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from corecode.matrix import FailureMatrix, is_recoverable
from corecode.params import CodeParams, IrrecoverableError
from corecode.scheduler import (
    SCHEDULERS,
    RepairSchedule,
    compute_hv,
    horizontal,
    plan_repair,
    replay,
    schedule_cost,
    schedule_rgs,
    schedule_time,
    scheduler_comparison,
    vertical,
)

STEP = [(2, 0), (3, 0), (3, 1)]
PLUS = [(1, 1), (2, 0), (2, 1), (2, 2), (3, 1)]

TABLE = {
    ("step", "row-first"): (["H 3", "H 2"], 24),
    ("step", "column-first"): (["V 3 1", "H 2", "V 3 0"], 22),
    ("step", "rgs"): (["H 3", "V 2 0"], 17),
    ("plus", "row-first"): (["H 1", "H 3", "V 2 0", "H 2"], 41),
    ("plus", "column-first"): (["V 2 0", "V 2 2", "H 1", "H 2", "V 3 1"], 39),
    ("plus", "rgs"): (["V 2 0", "H 2", "H 1", "V 3 1"], 34),
}


def _apply_by_hand(params, cells, schedule):
    """Set-based replay that checks each action is legal when it runs."""
    failed = set(cells)
    for a in schedule.actions:
        if a.kind == "H":
            hit = {c for c in failed if c[0] == a.row}
            assert 0 < len(hit) <= params.m and a.blocks_read == params.k
            failed -= hit
        else:
            col = {c for c in failed if c[1] == a.col}
            assert col == {(a.row, a.col)} and a.blocks_read == params.t
            failed -= col
    return failed


@pytest.mark.parametrize("key", sorted(TABLE))
def test_worked_examples(wide, key):
    pattern, name = key
    cells = STEP if pattern == "step" else PLUS
    s = SCHEDULERS[name](FailureMatrix.from_cells(wide, cells))
    actions, cost = TABLE[key]
    assert [str(a) for a in s.actions] == actions
    assert schedule_cost(s) == cost


def test_hv_of_worked_examples(wide):
    step = compute_hv(FailureMatrix.from_cells(wide, STEP))
    plus = compute_hv(FailureMatrix.from_cells(wide, PLUS))
    assert (step.v, step.h) == (0, 1)
    assert (plus.v, plus.h) == (1, 2)


def test_single_failure_is_vertical(small):
    fm = FailureMatrix.from_cells(small, [(1, 4)])
    for name in ("column-first", "rgs"):
        s = SCHEDULERS[name](fm)
        assert [str(a) for a in s.actions] == ["V 1 4"]
        assert s.total_blocks_read == 3
    assert SCHEDULERS["row-first"](fm).total_blocks_read == 6


def test_row_pair_prefers_verticals_when_cheaper(wide):
    s = schedule_rgs(FailureMatrix.from_cells(wide, [(0, 3), (0, 7)]))
    assert s.total_blocks_read == 10
    # three in one row: 15 > 12, so a single decode wins
    fm = FailureMatrix.from_cells(CodeParams(14, 11, 5), [(0, 1), (0, 2), (0, 3)])
    assert [str(a) for a in schedule_rgs(fm).actions] == ["H 0"]


def test_irrecoverable_raises(wide):
    fm = FailureMatrix.from_cells(wide, [(r, c) for r in range(3) for c in range(3)])
    for plan in SCHEDULERS.values():
        with pytest.raises(IrrecoverableError):
            plan(fm)


@st.composite
def recoverable_patterns(draw):
    p = draw(st.sampled_from([CodeParams(9, 6, 3), CodeParams(14, 12, 5), CodeParams(8, 5, 4)]))
    cells = draw(st.sets(st.tuples(st.integers(0, p.rows - 1), st.integers(0, p.n - 1)), min_size=1, max_size=16))
    fm = FailureMatrix.from_cells(p, cells)
    return fm


@given(recoverable_patterns())
def test_schedules_are_valid_and_complete(fm):
    if not is_recoverable(fm):
        return
    for plan in SCHEDULERS.values():
        s = plan(fm)
        assert not replay(fm, s)
        assert _apply_by_hand(fm.params, fm.cells(), s) == set()
        # RGS never reads more than one full decode per failure
        assert s.total_blocks_read <= fm.count * fm.params.k


@given(recoverable_patterns())
def test_planning_is_deterministic(fm):
    if not is_recoverable(fm):
        return
    for plan in SCHEDULERS.values():
        assert plan(fm).format() == plan(fm.copy()).format()


@given(recoverable_patterns())
def test_schedule_text_roundtrip(fm):
    if not is_recoverable(fm):
        return
    s = schedule_rgs(fm)
    back = RepairSchedule.parse(s.format(), fm.params)
    assert back.actions == s.actions and back.normalized_time == s.normalized_time


@given(recoverable_patterns())
def test_per_cluster_plan_costs_match(fm):
    if not is_recoverable(fm):
        return
    s, left = plan_repair(fm, "rgs")
    assert not left
    assert _apply_by_hand(fm.params, fm.cells(), s) == set()


def test_plan_repair_leaves_irrecoverable_cluster(wide):
    bad = [(r, c) for r in range(3) for c in range(3)]
    fm = FailureMatrix.from_cells(wide, bad + [(5, 10)])
    s, left = plan_repair(fm, "rgs")
    assert [str(a) for a in s.actions] == ["V 5 10"]
    assert sorted(left.cells()) == bad


def test_schedule_parse_rejects_garbage(wide):
    with pytest.raises(ValueError):
        RepairSchedule.parse("X 1", wide)


def test_replay_rejects_illegal_action(wide):
    fm = FailureMatrix.from_cells(wide, [(0, 0), (1, 0)])
    with pytest.raises(ValueError):
        replay(fm, RepairSchedule([vertical(0, 0, wide)]))


class TestWaveTime:
    def test_single_vertical(self, wide):
        fm = FailureMatrix.from_cells(wide, [(0, 4)])
        assert schedule_time(RepairSchedule([vertical(0, 4, wide)]), fm) == Fraction(5, 12)

    def test_disjoint_verticals_share_a_wave(self, wide):
        fm = FailureMatrix.from_cells(wide, [(0, 4), (2, 9)])
        s = RepairSchedule([vertical(0, 4, wide), vertical(2, 9, wide)])
        assert schedule_time(s, fm) == Fraction(5, 12)

    def test_decode_after_dependent_vertical_waits(self, wide):
        # the decode of row 0 reads column 0, just rebuilt by the vertical
        fm = FailureMatrix.from_cells(wide, [(0, 0), (0, 1), (0, 2), (1, 1)])
        s = RepairSchedule([vertical(0, 0, wide), horizontal(0, wide)])
        assert schedule_time(s, fm) == Fraction(5, 12) + 1

    def test_single_decode(self, wide):
        fm = FailureMatrix.from_cells(wide, [(3, 0), (3, 1)])
        assert schedule_time(RepairSchedule([horizontal(3, wide)]), fm) == 1

    def test_two_decodes_share_nodes(self, wide):
        fm = FailureMatrix.from_cells(wide, [(3, 0), (3, 1), (4, 5), (4, 6)])
        s = RepairSchedule([horizontal(3, wide), horizontal(4, wide)])
        assert schedule_time(s, fm) == 2

    def test_empty(self, wide):
        assert schedule_time(RepairSchedule(), FailureMatrix(wide)) == 0


def test_comparison_orders_planners(wide):
    rep = scheduler_comparison(wide, 5, 400, seed=11)
    means = {r.metric: r.mean for r in rep.rows}
    assert means["cost-rgs"] <= means["cost-column-first"] <= means["cost-row-first"]
    assert all(r.samples == 400 for r in rep.rows)
