"""Experiment result containers, streaming moments and sharded execution."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, TextIO

import numpy as np

log = logging.getLogger(__name__)

CSV_COLUMNS = ["code", "n", "k", "t", "stretch", "p", "metric", "mean", "variance", "samples", "seed"]

# Iterations per shard. Fixed so results do not depend on the worker count.
SHARD_SIZE = 20_000


@dataclass
class Moments:
    """Running count/mean/M2 (Welford), mergeable with Chan's formula."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    rejected: int = 0

    def add(self, x: float) -> None:
        self.count += 1
        d = x - self.mean
        self.mean += d / self.count
        self.m2 += d * (x - self.mean)

    @classmethod
    def from_values(cls, values, rejected: int = 0) -> "Moments":
        a = np.asarray(values, dtype=float)
        if a.size == 0:
            return cls(rejected=rejected)
        mean = float(a.mean())
        return cls(count=int(a.size), mean=mean, m2=float(((a - mean) ** 2).sum()), rejected=rejected)

    def merge(self, other: "Moments") -> "Moments":
        n = self.count + other.count
        out = Moments(rejected=self.rejected + other.rejected)
        if n == 0:
            return out
        d = other.mean - self.mean
        out.count = n
        out.mean = self.mean + d * other.count / n
        out.m2 = self.m2 + other.m2 + d * d * self.count * other.count / n
        return out

    @property
    def variance(self) -> float:
        if self.count == 0:
            return 0.0
        v = self.m2 / self.count
        if v < 0:
            log.warning("negative variance %g clamped to 0", v)
            v = 0.0
        return v

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count else math.inf


@dataclass
class ReportRow:
    code: str
    n: int
    k: int
    t: int | None
    x: float
    metric: str
    mean: float
    variance: float
    samples: int
    seed: int | None = None
    rejected: int = 0

    @property
    def stretch(self) -> float:
        if self.code == "core" and self.t:
            return self.n * (self.t + 1) / (self.k * self.t)
        return self.n / self.k


@dataclass
class ExperimentReport:
    rows: list[ReportRow] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def extend(self, other: "ExperimentReport") -> None:
        self.rows.extend(other.rows)

    def select(self, metric: str) -> list[ReportRow]:
        return [r for r in self.rows if r.metric == metric]

    def means(self, metric: str) -> list[float]:
        return [r.mean for r in self.select(metric)]

    def write_csv(self, out: TextIO) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([
                r.code, r.n, r.k, "" if r.t is None else r.t, f"{r.stretch:.4f}", _fmt(r.x),
                r.metric, _fmt(r.mean), _fmt(r.variance), r.samples, "" if r.seed is None else r.seed,
            ])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "∞" if x > 0 else "-∞"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def nines(pi: float) -> float:
    """log10(1 / (1 - pi)); infinite when pi == 1."""
    if not 0.0 <= pi <= 1.0:
        raise ValueError(f"probability out of range: {pi}")
    if pi >= 1.0:
        return math.inf
    return -math.log10(1.0 - pi)


def shard_seeds(seed: int, iterations: int) -> list[tuple[int, np.random.SeedSequence]]:
    """Split ``iterations`` into fixed-size shards, each with its own child seed."""
    root = np.random.SeedSequence(seed)
    nshards = max(1, math.ceil(iterations / SHARD_SIZE))
    children = root.spawn(nshards)
    sizes = [SHARD_SIZE] * (nshards - 1) + [iterations - SHARD_SIZE * (nshards - 1)]
    return list(zip(sizes, children))


def run_sharded(fn: Callable[..., Any], iterations: int, seed: int, workers: int, *args) -> list[Any]:
    """Call ``fn(size, seedseq, *args)`` per shard; results come back in shard order."""
    shards = shard_seeds(seed, iterations)
    if workers <= 1 or len(shards) == 1:
        return [fn(size, ss, *args) for size, ss in shards]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, size, ss, *args) for size, ss in shards]
        return [f.result() for f in futures]


def merge_moments(parts: list[Moments]) -> Moments:
    out = Moments()
    for p in parts:
        out = out.merge(p)
    return out
