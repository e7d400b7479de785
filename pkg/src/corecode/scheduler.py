"""Repair planning for a recoverable failure matrix.

Three planners are provided: row-first, column-first and RGS (recursively
generated schedule). A horizontal action decodes a whole row from k blocks
and restores every failed cell in it; a vertical action XORs the t other
blocks of a column to restore its single failed cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .matrix import (
    Cluster,
    FailureMatrix,
    _bits,
    _rng,
    find_clusters,
    is_recoverable,
    multi_columns,
    random_cells,
    residual_rows,
    single_columns,
)
from .params import CodeParams, IrrecoverableError
from .report import ExperimentReport, Moments, ReportRow, merge_moments, run_sharded

H = "H"
V = "V"


@dataclass(frozen=True)
class RepairAction:
    kind: str
    row: int
    col: int | None = None
    blocks_read: int = 0

    def __str__(self) -> str:
        return f"H {self.row}" if self.kind == H else f"V {self.row} {self.col}"


@dataclass
class RepairSchedule:
    actions: list[RepairAction] = field(default_factory=list)
    normalized_time: Fraction = Fraction(0)

    @property
    def total_blocks_read(self) -> int:
        return sum(a.blocks_read for a in self.actions)

    def __len__(self) -> int:
        return len(self.actions)

    def format(self) -> str:
        lines = [str(a) for a in self.actions]
        lines.append(f"# blocks_read={self.total_blocks_read} time={self.normalized_time}")
        return "\n".join(lines)

    @classmethod
    def parse(cls, text: str, params: CodeParams) -> "RepairSchedule":
        actions = []
        time = Fraction(0)
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    key, _, val = tok.partition("=")
                    if key == "time":
                        time = Fraction(val)
                continue
            parts = line.split()
            if parts[0] == H and len(parts) == 2:
                actions.append(horizontal(int(parts[1]), params))
            elif parts[0] == V and len(parts) == 3:
                actions.append(vertical(int(parts[1]), int(parts[2]), params))
            else:
                raise ValueError(f"bad schedule line {line!r}")
        return cls(actions, time)


@dataclass(frozen=True)
class HVState:
    v: int
    h: int


def horizontal(row: int, params: CodeParams) -> RepairAction:
    return RepairAction(H, row, None, params.k)


def vertical(row: int, col: int, params: CodeParams) -> RepairAction:
    return RepairAction(V, row, col, params.t)


def compute_hv(fm: FailureMatrix) -> HVState:
    return _hv(fm.rows, fm.params)


def _hv(rows: list[int], params: CodeParams) -> HVState:
    m = params.m
    v = sum(max(0, r.bit_count() - m) for r in rows)
    # sum over columns of max(0, count - 1) == failures - occupied columns
    union = 0
    total = 0
    for r in rows:
        union |= r
        total += r.bit_count()
    return HVState(v, total - union.bit_count())


def _best_row(rows: list[int], m: int, within: int | None = None) -> int | None:
    """Repairable row with the most failures (lowest index on ties).

    With ``within`` set, only rows touching one of those columns qualify.
    """
    best, best_count = None, 0
    for i, r in enumerate(rows):
        cnt = r.bit_count()
        if 0 < cnt <= m and cnt > best_count and (within is None or r & within):
            best, best_count = i, cnt
    return best


def _lowest_single(rows: list[int], row_filter: int | None = None) -> tuple[int, int] | None:
    """Lowest column with exactly one failure, and the row holding it.

    ``row_filter`` is a bitmask over row indices the failed cell must lie in.
    """
    single = single_columns(rows)
    if row_filter is not None:
        allowed = 0
        for i, r in enumerate(rows):
            if row_filter >> i & 1:
                allowed |= r
        single &= allowed
    if not single:
        return None
    c = (single & -single).bit_length() - 1
    for i, r in enumerate(rows):
        if r >> c & 1:
            return i, c
    raise AssertionError("unreachable")


def _require_recoverable(fm: FailureMatrix) -> None:
    rec = is_recoverable(fm)
    if not rec:
        raise IrrecoverableError(f"failure pattern is not recoverable; residual {rec.residual.format()}",
                                 rec.residual)


def _apply(rows: list[int], action: RepairAction) -> None:
    if action.kind == H:
        rows[action.row] = 0
    else:
        rows[action.row] &= ~(1 << action.col)


def _finish(fm: FailureMatrix, actions: list[RepairAction]) -> RepairSchedule:
    s = RepairSchedule(actions)
    s.normalized_time = schedule_time(s, fm)
    return s


def schedule_row_first(fm: FailureMatrix) -> RepairSchedule:
    _require_recoverable(fm)
    p = fm.params
    rows = list(fm.rows)
    actions = []
    while any(rows):
        r = _best_row(rows, p.m)
        if r is not None:
            a = horizontal(r, p)
        else:
            cell = _lowest_single(rows)
            if cell is None:
                raise IrrecoverableError("row-first planner is stuck", FailureMatrix(p, rows))
            a = vertical(*cell, p)
        _apply(rows, a)
        actions.append(a)
    return _finish(fm, actions)


def schedule_column_first(fm: FailureMatrix) -> RepairSchedule:
    _require_recoverable(fm)
    p = fm.params
    rows = list(fm.rows)
    actions = []
    while any(rows):
        cell = _lowest_single(rows)
        if cell is not None:
            a = vertical(*cell, p)
        else:
            r = _best_row(rows, p.m)
            if r is None:
                raise IrrecoverableError("column-first planner is stuck", FailureMatrix(p, rows))
            a = horizontal(r, p)
        _apply(rows, a)
        actions.append(a)
    return _finish(fm, actions)


def schedule_rgs(fm: FailureMatrix) -> RepairSchedule:
    """Critical repairs first (driving v then h to zero), then the cheaper of
    one horizontal or r verticals for each remaining row."""
    _require_recoverable(fm)
    p = fm.params
    rows = list(fm.rows)
    actions = []

    while True:
        hv = _hv(rows, p)
        if hv.v == 0 and hv.h == 0:
            break
        a = None
        if hv.v > 0:
            overfull = sum(1 << i for i, r in enumerate(rows) if r.bit_count() > p.m)
            cell = _lowest_single(rows, overfull)
            if cell is not None:
                a = vertical(*cell, p)
        if a is None:
            r = _best_row(rows, p.m, within=multi_columns(rows))
            if r is None:
                raise IrrecoverableError("RGS planner is stuck", FailureMatrix(p, rows))
            a = horizontal(r, p)
        _apply(rows, a)
        actions.append(a)

    # Every remaining failure is now alone in its column and its row is repairable.
    for i, r in enumerate(rows):
        cnt = r.bit_count()
        if not cnt:
            continue
        if p.k < cnt * p.t:
            actions.append(horizontal(i, p))
        else:
            actions.extend(vertical(i, c, p) for c in _bits(r))
        rows[i] = 0
    return _finish(fm, actions)


SCHEDULERS: dict[str, Callable[[FailureMatrix], RepairSchedule]] = {
    "row-first": schedule_row_first,
    "column-first": schedule_column_first,
    "rgs": schedule_rgs,
}


def schedule_cost(s: RepairSchedule) -> int:
    return s.total_blocks_read


def _lowest_bits(mask: int, count: int) -> int:
    out = 0
    for _ in range(count):
        low = mask & -mask
        if not low:
            break
        out |= low
        mask ^= low
    return out


def schedule_time(s: RepairSchedule, fm: FailureMatrix) -> Fraction:
    """Normalised repair time under a greedy wave model.

    Each column is one storage node. An action takes blocks_read / k units.
    Actions are packed in order into waves; an action starts a new wave when
    it reads a cell written earlier in the current wave or reads from a node
    another action in the wave already reads from. Waves run back to back and
    last as long as their slowest action.
    """
    p = fm.params
    full = (1 << p.n) - 1
    rows = list(fm.rows)
    total = wave = 0
    written = [0] * p.rows
    written_any = nodes = 0
    for a in s.actions:
        if a.kind == V:
            # the target cell is still failed, so any write in this column is another row's
            reads = 1 << a.col
            stale = written_any & reads
        else:
            # Opt1: a horizontal decode reads the k lowest live columns
            reads = _lowest_bits(~rows[a.row] & full, p.k)
            stale = written[a.row] & reads
        if wave and (stale or reads & nodes):
            total += wave
            wave = 0
            written = [0] * p.rows
            written_any = nodes = 0
        done = (1 << a.col) if a.kind == V else rows[a.row]
        written[a.row] |= done
        written_any |= done
        nodes |= reads
        if a.blocks_read > wave:
            wave = a.blocks_read
        _apply(rows, a)
    return Fraction(total + wave, p.k)


def replay(fm: FailureMatrix, s: RepairSchedule) -> FailureMatrix:
    """Execute ``s`` on a copy of ``fm``, checking each action's precondition."""
    p = fm.params
    rows = list(fm.rows)
    for a in s.actions:
        if a.kind == H:
            cnt = rows[a.row].bit_count()
            if not 0 < cnt <= p.m:
                raise ValueError(f"{a}: row has {cnt} failures")
            if a.blocks_read != p.k:
                raise ValueError(f"{a}: horizontal repair must read k blocks")
        else:
            bit = 1 << a.col
            col = 0
            for r in rows:
                if r & bit:
                    col += 1
            if col != 1 or not rows[a.row] >> a.col & 1:
                raise ValueError(f"{a}: column has {col} failures")
            if a.blocks_read != p.t:
                raise ValueError(f"{a}: vertical repair must read t blocks")
        _apply(rows, a)
    return FailureMatrix(p, rows)


def plan_repair(fm: FailureMatrix, scheduler: str = "rgs") -> tuple[RepairSchedule, FailureMatrix]:
    """Schedule every recoverable cluster independently and concatenate.

    Returns the combined schedule and the failures it leaves behind (cells of
    irrecoverable clusters; empty when everything can be repaired).
    """
    plan = SCHEDULERS[scheduler]
    actions: list[RepairAction] = []
    leftover = FailureMatrix(fm.params)
    for cl in find_clusters(fm):
        sub = fm.restrict(cl.cells)
        if is_recoverable(sub):
            actions.extend(plan(sub).actions)
        else:
            for cell in cl.cells:
                leftover.mark_failed(*cell)
    s = RepairSchedule(actions)
    s.normalized_time = schedule_time(s, fm)
    return s, leftover


def cluster_of(fm: FailureMatrix, row: int) -> Cluster | None:
    for cl in find_clusters(fm):
        if row in cl.rows:
            return cl
    return None


def _comparison_shard(size: int, ss, params: CodeParams, num_failures: int):
    rng = _rng(ss)
    costs: dict[str, list[int]] = {name: [] for name in SCHEDULERS}
    rejected = 0
    while len(costs["rgs"]) < size:
        rows = random_cells(params, num_failures, rng)
        if any(residual_rows(rows, params.m)):
            rejected += 1
            continue
        fm = FailureMatrix(params, rows)
        for name, plan in SCHEDULERS.items():
            costs[name].append(plan(fm).total_blocks_read)
    return {name: Moments.from_values(v, rejected) for name, v in costs.items()}


def scheduler_comparison(
    params: CodeParams, num_failures: int, iterations: int, seed: int, workers: int = 1
) -> ExperimentReport:
    """Mean blocks read by each planner over ``iterations`` random recoverable patterns.

    Patterns are uniform over placements of ``num_failures`` cells, conditioned
    on recoverability by rejection; every planner sees the same patterns.
    """
    if not 1 <= num_failures <= params.cells:
        raise ValueError(f"num_failures must be in [1, {params.cells}]")
    parts = run_sharded(_comparison_shard, iterations, seed, workers, params, num_failures)
    rows = []
    for name in SCHEDULERS:
        mom = merge_moments([part[name] for part in parts])
        rows.append(ReportRow("core", params.n, params.k, params.t, num_failures, f"cost-{name}",
                              mom.mean, mom.variance, mom.count, seed, mom.rejected))
    return ExperimentReport(rows, {"seed": seed, "iterations": iterations, "model": str(params)})
