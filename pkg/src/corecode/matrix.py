"""Failure patterns over a CORE group: clustering, bounds and recoverability.

A :class:`FailureMatrix` stores one bitmask per row (bit ``c`` set means the
block in column ``c`` is inaccessible). Everything here works on those masks
directly; ``to_array`` gives the boolean view.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .params import CodeParams, UnsupportedParams
from .report import ExperimentReport, Moments, ReportRow, merge_moments, nines, run_sharded

Cell = tuple[int, int]


def _bits(mask: int) -> Iterable[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class FailureMatrix:
    __slots__ = ("params", "rows")

    def __init__(self, params: CodeParams, rows: Iterable[int] | None = None):
        self.params = params
        self.rows = list(rows) if rows is not None else [0] * params.rows
        if len(self.rows) != params.rows:
            raise ValueError(f"expected {params.rows} rows, got {len(self.rows)}")
        full = (1 << params.n) - 1
        if any(r & ~full for r in self.rows):
            raise ValueError("failure mask has bits outside the grid")

    @classmethod
    def from_cells(cls, params: CodeParams, cells: Iterable[Cell]) -> "FailureMatrix":
        fm = cls(params)
        for r, c in cells:
            fm.mark_failed(r, c)
        return fm

    @classmethod
    def from_array(cls, params: CodeParams, mask) -> "FailureMatrix":
        a = np.asarray(mask, dtype=bool)
        if a.shape != (params.rows, params.n):
            raise ValueError(f"mask shape {a.shape} != {(params.rows, params.n)}")
        weights = 1 << np.arange(params.n, dtype=object)
        return cls(params, [int((weights * row).sum()) for row in a])

    def _check(self, r: int, c: int) -> None:
        if not (0 <= r < self.params.rows and 0 <= c < self.params.n):
            raise IndexError(f"cell ({r},{c}) outside {self.params.rows}x{self.params.n} grid")

    def mark_failed(self, r: int, c: int) -> None:
        self._check(r, c)
        self.rows[r] |= 1 << c

    def mark_repaired(self, r: int, c: int) -> None:
        self._check(r, c)
        self.rows[r] &= ~(1 << c)

    def is_failed(self, r: int, c: int) -> bool:
        self._check(r, c)
        return bool(self.rows[r] >> c & 1)

    def cells(self) -> list[Cell]:
        return [(r, c) for r, mask in enumerate(self.rows) for c in _bits(mask)]

    @property
    def count(self) -> int:
        return sum(r.bit_count() for r in self.rows)

    def row_count(self, r: int) -> int:
        return self.rows[r].bit_count()

    def col_count(self, c: int) -> int:
        return sum(r >> c & 1 for r in self.rows)

    def col_counts(self) -> list[int]:
        return [self.col_count(c) for c in range(self.params.n)]

    def copy(self) -> "FailureMatrix":
        return FailureMatrix(self.params, self.rows)

    def restrict(self, cells: Iterable[Cell]) -> "FailureMatrix":
        return FailureMatrix.from_cells(self.params, (cell for cell in cells if self.is_failed(*cell)))

    def to_array(self) -> np.ndarray:
        cols = np.arange(self.params.n)
        return np.array([(r >> cols) & 1 for r in self.rows], dtype=bool)

    def __bool__(self) -> bool:
        return any(self.rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, FailureMatrix) and self.params == other.params and self.rows == other.rows

    def __repr__(self) -> str:
        return f"FailureMatrix({self.params}, {self.format()!r})"

    def format(self) -> str:
        """One-line text form, e.g. ``6x14;2,0;3,0;3,1``."""
        head = f"{self.params.rows}x{self.params.n}"
        return ";".join([head] + [f"{r},{c}" for r, c in self.cells()])

    @classmethod
    def parse(cls, text: str, params: CodeParams) -> "FailureMatrix":
        parts = [p.strip() for p in text.strip().split(";") if p.strip()]
        if not parts:
            raise ValueError("empty failure pattern")
        try:
            rows, cols = (int(x) for x in parts[0].lower().split("x"))
        except ValueError as exc:
            raise ValueError(f"bad dimension header {parts[0]!r}") from exc
        if (rows, cols) != (params.rows, params.n):
            raise ValueError(f"pattern is {rows}x{cols}, group is {params.rows}x{params.n}")
        cells = []
        for p in parts[1:]:
            try:
                r, c = (int(x) for x in p.split(","))
            except ValueError as exc:
                raise ValueError(f"bad cell {p!r}") from exc
            cells.append((r, c))
        return cls.from_cells(params, cells)


def parse_dimensions(text: str) -> tuple[int, int]:
    head = text.strip().split(";", 1)[0]
    rows, cols = (int(x) for x in head.lower().split("x"))
    return rows, cols


# -- clusters ----------------------------------------------------------------


@dataclass(frozen=True)
class Cluster:
    cells: frozenset[Cell]
    rows: frozenset[int]
    cols: frozenset[int]

    def __len__(self) -> int:
        return len(self.cells)


def find_clusters(fm: FailureMatrix) -> list[Cluster]:
    """Partition failed cells into groups that share no failed row or column.

    Union-find over row and column nodes: each failed cell joins its row with
    its column, so cells end up together exactly when linked by a chain of
    shared rows/columns.
    """
    nrows = fm.params.rows
    parent = list(range(nrows + fm.params.n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    cells = fm.cells()
    for r, c in cells:
        a, b = find(r), find(nrows + c)
        if a != b:
            parent[max(a, b)] = min(a, b)
    groups: dict[int, list[Cell]] = {}
    for cell in cells:
        groups.setdefault(find(cell[0]), []).append(cell)
    out = [
        Cluster(frozenset(g), frozenset(r for r, _ in g), frozenset(c for _, c in g))
        for g in groups.values()
    ]
    out.sort(key=lambda cl: min(cl.cells))
    return out


def cluster_submatrix(fm: FailureMatrix, cluster: Cluster) -> FailureMatrix:
    return fm.restrict(cluster.cells)


def count_clusters(rows: list[int]) -> int:
    """Number of clusters, computed by growing column sets over row masks."""
    remaining = [r for r in rows if r]
    count = 0
    while remaining:
        cols = remaining.pop()
        grown = True
        while grown:
            grown = False
            keep = []
            for r in remaining:
                if r & cols:
                    cols |= r
                    grown = True
                else:
                    keep.append(r)
            remaining = keep
        count += 1
    return count


# -- bounds and recoverability -----------------------------------------------


@dataclass(frozen=True)
class RepairBounds:
    L: int
    U: int


def bounds(params: CodeParams) -> RepairBounds:
    """Failure-count thresholds for a group.

    Every pattern with fewer than L failures is recoverable. U is the nominal
    ceiling used to cap experiments; some structured patterns above it (whole
    columns plus scattered singles) are still recoverable.
    """
    n, k, t = params.n, params.k, params.t
    if 2 * k < n:
        raise UnsupportedParams("upper bound needs 2k >= n")
    lower = 2 * (n - k + 1)
    upper = t * (n - k) + (2 * k - n)
    if lower > upper + 1:
        raise UnsupportedParams(f"bounds inconsistent for {params}: L={lower} > U+1={upper + 1}")
    return RepairBounds(lower, upper)


def single_columns(rows: Iterable[int]) -> int:
    """Bitmask of columns holding exactly one failure."""
    once = twice = 0
    for r in rows:
        twice |= once & r
        once |= r
    return once & ~twice


def multi_columns(rows: Iterable[int]) -> int:
    """Bitmask of columns holding two or more failures."""
    once = twice = 0
    for r in rows:
        twice |= once & r
        once |= r
    return twice


def residual_rows(rows: Iterable[int], m: int) -> list[int]:
    """Clear vertically then horizontally repairable failures until nothing changes."""
    rows = list(rows)
    changed = True
    while changed:
        changed = False
        single = single_columns(rows)
        if single:
            for i, r in enumerate(rows):
                if r & single:
                    rows[i] = r & ~single
            changed = True
        for i, r in enumerate(rows):
            if r and r.bit_count() <= m:
                rows[i] = 0
                changed = True
    return rows


@dataclass(frozen=True)
class Recoverability:
    recoverable: bool
    residual: FailureMatrix

    def __bool__(self) -> bool:
        return self.recoverable


def is_recoverable(fm: FailureMatrix) -> Recoverability:
    rest = residual_rows(fm.rows, fm.params.m)
    residual = FailureMatrix(fm.params, rest)
    return Recoverability(not any(rest), residual)


def recoverable_batch(masks: np.ndarray, m: int) -> np.ndarray:
    """Vectorised recoverability for a stack of boolean masks shaped (N, rows, n)."""
    masks = np.array(masks, dtype=bool, copy=True)
    active = np.flatnonzero(masks.any(axis=(1, 2)))
    while active.size:
        sub = masks[active]
        before = sub.sum(axis=(1, 2))
        sub &= ~(sub.sum(axis=1) == 1)[:, None, :]
        sub &= ~(sub.sum(axis=2) <= m)[:, :, None]
        masks[active] = sub
        after = sub.sum(axis=(1, 2))
        active = active[(after < before) & (after > 0)]
    return ~masks.any(axis=(1, 2))


# -- experiments ---------------------------------------------------------------


def random_cells(params: CodeParams, num_failures: int, rng: random.Random) -> list[int]:
    """Row masks for ``num_failures`` distinct cells drawn uniformly."""
    rows = [0] * params.rows
    n = params.n
    for idx in rng.sample(range(params.cells), num_failures):
        rows[idx // n] |= 1 << (idx % n)
    return rows


def random_failure_matrix(params: CodeParams, num_failures: int, rng: random.Random) -> FailureMatrix:
    return FailureMatrix(params, random_cells(params, num_failures, rng))


def _rng(ss: np.random.SeedSequence) -> random.Random:
    return random.Random(int(ss.generate_state(2, dtype=np.uint64)[0]))


def _check_count(params: CodeParams, num_failures: int) -> None:
    if not 1 <= num_failures <= params.cells:
        raise ValueError(f"num_failures must be in [1, {params.cells}], got {num_failures}")


def _cluster_shard(size: int, ss, params: CodeParams, num_failures: int) -> Moments:
    rng = _rng(ss)
    return Moments.from_values([count_clusters(random_cells(params, num_failures, rng)) for _ in range(size)])


def cluster_count_experiment(
    params: CodeParams, num_failures: int, iterations: int, seed: int, workers: int = 1
) -> ExperimentReport:
    _check_count(params, num_failures)
    mom = merge_moments(run_sharded(_cluster_shard, iterations, seed, workers, params, num_failures))
    row = ReportRow("core", params.n, params.k, params.t, num_failures, "clusters",
                    mom.mean, mom.variance, mom.count, seed)
    return ExperimentReport([row], {"seed": seed, "iterations": iterations, "model": str(params)})


def random_masks(params: CodeParams, num_failures: int, size: int, gen: np.random.Generator) -> np.ndarray:
    """``size`` boolean masks, each with ``num_failures`` distinct failed cells."""
    keys = gen.random((size, params.cells))
    picks = np.argpartition(keys, num_failures - 1, axis=1)[:, :num_failures]
    flat = np.zeros((size, params.cells), dtype=bool)
    np.put_along_axis(flat, picks, True, axis=1)
    return flat.reshape(size, params.rows, params.n)


def _recoverability_shard(size: int, ss, params: CodeParams, num_failures: int) -> Moments:
    gen = np.random.default_rng(ss)
    ok = recoverable_batch(random_masks(params, num_failures, size, gen), params.m)
    return Moments.from_values(ok.astype(float))


def recoverability_experiment(
    params: CodeParams, num_failures: int, iterations: int, seed: int, workers: int = 1
) -> ExperimentReport:
    _check_count(params, num_failures)
    b = bounds(params)
    if num_failures > b.U:
        raise ValueError(f"{num_failures} failures exceed the recoverability bound U={b.U}")
    mom = merge_moments(run_sharded(_recoverability_shard, iterations, seed, workers, params, num_failures))
    meta = {"seed": seed, "iterations": iterations, "model": str(params), "L": b.L, "U": b.U}
    rows = [
        ReportRow("core", params.n, params.k, params.t, num_failures, "recoverable",
                  mom.mean, mom.variance, mom.count, seed),
        ReportRow("core", params.n, params.k, params.t, num_failures, "nines",
                  nines(mom.mean), 0.0, mom.count, seed),
    ]
    return ExperimentReport(rows, meta)
