"""Closed-form resilience and Monte Carlo repair/read cost models for RS, LRC and CORE.

Costs are in blocks and normalised by k (the size of one object). Times are
normalised by the time one node needs to download k blocks.

LRC(n, k) block layout used by the simulators: columns ``0..k/2-1`` and
``k/2..k-1`` are the two local groups' data, ``k`` and ``k+1`` their local
parities, and ``k+2..n-1`` the global parities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .matrix import FailureMatrix, find_clusters, is_recoverable, recoverable_batch, single_columns
from .params import CodeParams, CoreError, UnsupportedParams
from .report import ExperimentReport, Moments, ReportRow, merge_moments, nines, run_sharded
from .scheduler import plan_repair

__all__ = [
    "CodeModel", "resilience_mds", "resilience_lrc", "resilience_core_lb", "nines",
    "lrc_avg_single_repair", "simulate_repair", "simulate_degraded_read", "sweep_stretch",
    "empirical_resilience", "repair_cost", "degraded_read_cost",
]

KINDS = ("rs", "lrc", "core")


class NoRepairableSamples(CoreError):
    pass


@dataclass(frozen=True)
class CodeModel:
    kind: str
    n: int
    k: int
    t: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedParams(f"unknown code kind {self.kind!r}")
        if not 1 <= self.k < self.n:
            raise UnsupportedParams(f"need 1 <= k < n, got ({self.n},{self.k})")
        if self.kind == "lrc":
            _check_lrc(self.n, self.k)
        if self.kind == "core":
            if self.t is None:
                raise UnsupportedParams("CORE model needs t")
            CodeParams(self.n, self.k, self.t)

    @property
    def m(self) -> int:
        return self.n - self.k

    @property
    def params(self) -> CodeParams:
        return CodeParams(self.n, self.k, self.t)

    @property
    def stretch(self) -> float:
        if self.kind == "core":
            return self.params.stretch
        return self.n / self.k

    def __str__(self) -> str:
        if self.kind == "core":
            return f"core({self.n},{self.k},{self.t})"
        return f"{self.kind}({self.n},{self.k})"


def _check_lrc(n: int, k: int) -> None:
    if k % 2 or n < k + 2:
        raise UnsupportedParams(f"LRC needs even k and n >= k+2, got ({n},{k})")


# -- closed forms --------------------------------------------------------------
# These accept floats or Fractions; Fractions give exact results.


def _pmf(n: int, i: int, p):
    return math.comb(n, i) * p**i * (1 - p) ** (n - i)


def _cdf(n: int, p, m: int):
    if m < 0:
        return 0 * p
    if m >= n:
        return 1 + 0 * p
    if isinstance(p, float) and p < 0.5:
        # 1 - upper tail keeps precision when the result is close to 1
        return 1 - sum(_pmf(n, i, p) for i in range(m + 1, n + 1))
    return sum(_pmf(n, i, p) for i in range(m + 1))


def _check_p(p) -> None:
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0, 1], got {p}")


def resilience_mds(n: int, k: int, p):
    """Probability that at most n-k of n blocks are lost."""
    _check_p(p)
    return _cdf(n, p, n - k)


def lrc_theta(k: int, p):
    return Fraction(k + 2, 2) * p * (1 - p) ** (k // 2)


def resilience_lrc(n: int, k: int, p):
    _check_lrc(n, k)
    _check_p(p)
    m = n - k
    theta = lrc_theta(k, p)
    return (
        _cdf(n, p, m - 2)
        + _pmf(n, m - 1, p) * 2 * theta * (1 - theta)
        + _pmf(n, m, p) * (1 - theta) ** 2
    )


def column_availability(t: int, p):
    """Probability that at most one of a column's t+1 blocks is lost."""
    return (1 - p) ** (t + 1) + (t + 1) * p * (1 - p) ** t


def resilience_core_lb(n: int, k: int, t: int, p):
    """Lower bound: at most n-k columns hold two or more lost blocks."""
    if t < 1:
        raise UnsupportedParams("t must be >= 1")
    _check_p(p)
    return _cdf(n, 1 - column_availability(t, p), n - k)


def resilience(model: CodeModel, p):
    if model.kind == "rs":
        return resilience_mds(model.n, model.k, p)
    if model.kind == "lrc":
        return resilience_lrc(model.n, model.k, p)
    return resilience_core_lb(model.n, model.k, model.t, p)


def lrc_avg_single_repair(n: int, k: int) -> Fraction:
    """Mean blocks read to repair one lost LRC block."""
    _check_lrc(n, k)
    return Fraction(2 * k * n - k * k - 2 * k, 2 * n)


# -- per-sample cost models ----------------------------------------------------


def _lrc_groups(k: int) -> tuple[int, int]:
    half = k // 2
    g1 = ((1 << half) - 1) | (1 << k)
    g2 = (((1 << half) - 1) << half) | (1 << (k + 1))
    return g1, g2


def _lrc_plan(n: int, k: int, mask: int) -> tuple[int, bool, int] | None:
    """(local repairs, global decode needed, failures left for it) or None if stuck."""
    local = 0
    for g in _lrc_groups(k):
        if (mask & g).bit_count() == 1:
            local += 1
            mask &= ~g
    rest = mask.bit_count()
    if rest > n - k - 2:
        return None
    return local, rest > 0, rest


def repair_cost(model: CodeModel, mask) -> tuple[float, float] | None:
    """(traffic W, time T) to repair one failure sample, or None if unrepairable.

    ``mask`` is an int bitmask over n blocks for RS/LRC and a FailureMatrix
    for CORE. Values are per repair event in object-size units; for CORE that
    is the whole group's RGS traffic and wave-model time.
    """
    k = model.k
    if model.kind == "rs":
        f = mask.bit_count()
        if f > model.m:
            return None
        return (1.0, 1.0) if f else (0.0, 0.0)
    if model.kind == "lrc":
        plan = _lrc_plan(model.n, k, mask)
        if plan is None:
            return None
        local, glob, _ = plan
        w = (local * (k / 2) + (k if glob else 0)) / k
        time = (0.5 if local else 0.0) + (1.0 if glob else 0.0)
        return w, time
    fm = mask
    if not fm:
        return 0.0, 0.0
    if not is_recoverable(fm):
        return None
    sched, _ = plan_repair(fm, "rgs")
    return sched.total_blocks_read / k, float(sched.normalized_time)


def _core_row_read(fm: FailureMatrix, row: int) -> int | None:
    """Blocks fetched to obtain all k systematic blocks of ``row``."""
    p = fm.params
    k, m, t = p.k, p.m, p.t
    r = fm.rows[row]
    sys_missing = r & ((1 << k) - 1)
    s = sys_missing.bit_count()
    if not s:
        return k
    single = single_columns(fm.rows)
    options = []
    if sys_missing & ~single == 0:
        options.append(k - s + s * t)
    f = r.bit_count()
    if f <= m:
        options.append(k)
    elif (r & single).bit_count() >= f - m:
        options.append(k + (f - m) * t)
    if options:
        return min(options)
    return _cluster_repair(fm, row, extra=k - s)


def _cluster_repair(fm: FailureMatrix, row: int, extra: int) -> int | None:
    for cl in find_clusters(fm):
        if row in cl.rows:
            sub = fm.restrict(cl.cells)
            if not is_recoverable(sub):
                return None
            sched, _ = plan_repair(sub, "rgs")
            return sched.total_blocks_read + extra
    return None


def _core_distributed(fm: FailureMatrix, row: int) -> int | None:
    p = fm.params
    k, m, t = p.k, p.m, p.t
    r = fm.rows[row]
    single = single_columns(fm.rows)
    f = r.bit_count()
    if f <= m:
        fallback = k
    elif (r & single).bit_count() >= f - m:
        fallback = k + (f - m) * t
    else:
        fallback = None
    total = 0
    for c in range(k):
        if not r >> c & 1:
            total += 1
        elif single >> c & 1:
            total += t
        else:
            if fallback is None:
                fallback = _cluster_repair(fm, row, extra=0)
                if fallback is None:
                    return None
            total += fallback
    return total


def degraded_read_cost(model: CodeModel, mode: str, mask) -> float | None:
    """Normalised blocks fetched to read one object (row 0 for CORE), or None if unreadable."""
    k = model.k
    if mode not in ("centralized", "distributed"):
        raise ValueError(f"unknown read mode {mode!r}")
    if model.kind == "core":
        fn = _core_row_read if mode == "centralized" else _core_distributed
        blocks = fn(mask, 0)
        return None if blocks is None else blocks / k
    sys_missing = mask & ((1 << k) - 1)
    s = sys_missing.bit_count()
    if not s:
        return 1.0
    if model.kind == "rs":
        if mask.bit_count() > model.m:
            return None
        return 1.0 if mode == "centralized" else (k - s + s * k) / k
    plan = _lrc_plan(model.n, k, mask)
    if plan is None:
        return None
    if mode == "centralized":
        return 1.0
    total = k - s
    for g in _lrc_groups(k):
        lost = (sys_missing & g).bit_count()
        total += lost * (k / 2 if (mask & g).bit_count() == 1 else k)
    return total / k


# -- Monte Carlo ---------------------------------------------------------------


def _sample_masks(model: CodeModel, p: float, size: int, gen: np.random.Generator):
    if model.kind == "core":
        prm = model.params
        draws = gen.random((size, prm.rows, prm.n)) < p
        weights = 1 << np.arange(prm.n, dtype=np.int64 if prm.n < 63 else object)
        packed = (draws * weights).sum(axis=2)
        return [FailureMatrix(prm, [int(x) for x in row]) for row in packed]
    draws = gen.random((size, model.n)) < p
    weights = [1 << i for i in range(model.n)]
    return [sum(w for w, d in zip(weights, row) if d) for row in draws.tolist()]


def _repair_shard(size: int, ss, model: CodeModel, p: float) -> tuple[Moments, Moments]:
    gen = np.random.default_rng(ss)
    # a CORE sample covers t objects; spread its cost over them
    share = model.t if model.kind == "core" else 1
    ws, ts, rejected = [], [], 0
    for mask in _sample_masks(model, p, size, gen):
        out = repair_cost(model, mask)
        if out is None:
            rejected += 1
            continue
        ws.append(out[0] / share)
        ts.append(out[1] / share)
    return Moments.from_values(ws, rejected), Moments.from_values(ts, rejected)


def _rows_for(model: CodeModel, p: float, seed: int, named: Sequence[tuple[str, Moments]]) -> list[ReportRow]:
    return [
        ReportRow(model.kind, model.n, model.k, model.t, p, name, mom.mean, mom.variance,
                  mom.count, seed, mom.rejected)
        for name, mom in named
    ]


def simulate_repair(model: CodeModel, p: float, iterations: int, seed: int, workers: int = 1) -> ExperimentReport:
    """E/Var of repair traffic W and time T per stored object, conditioned on repairability.

    RS and LRC samples are one object each; a CORE sample is a whole group,
    so its traffic and time are divided by the t objects it holds.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    _check_p(p)
    parts = run_sharded(_repair_shard, iterations, seed, workers, model, p)
    w = merge_moments([a for a, _ in parts])
    t = merge_moments([b for _, b in parts])
    if w.count == 0:
        raise NoRepairableSamples(
            f"{model} at p={p}: all {iterations} samples unrepairable; raise iterations or lower p")
    meta = {"seed": seed, "iterations": iterations, "model": str(model), "rejected": w.rejected}
    return ExperimentReport(_rows_for(model, p, seed, [("traffic", w), ("time", t)]), meta)


def _read_shard(size: int, ss, model: CodeModel, mode: str, p: float) -> Moments:
    gen = np.random.default_rng(ss)
    vals, rejected = [], 0
    for mask in _sample_masks(model, p, size, gen):
        out = degraded_read_cost(model, mode, mask)
        if out is None:
            rejected += 1
        else:
            vals.append(out)
    return Moments.from_values(vals, rejected)


def simulate_degraded_read(
    model: CodeModel, mode: str, p: float, iterations: int, seed: int, workers: int = 1
) -> ExperimentReport:
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    _check_p(p)
    mom = merge_moments(run_sharded(_read_shard, iterations, seed, workers, model, mode, p))
    if mom.count == 0:
        raise NoRepairableSamples(f"{model} at p={p}: no readable samples in {iterations}")
    meta = {"seed": seed, "iterations": iterations, "model": str(model), "mode": mode, "rejected": mom.rejected}
    return ExperimentReport(_rows_for(model, p, seed, [(f"read-{mode}", mom)]), meta)


def _resilience_shard(size: int, ss, model: CodeModel, p: float) -> Moments:
    gen = np.random.default_rng(ss)
    if model.kind == "core":
        prm = model.params
        ok = recoverable_batch(gen.random((size, prm.rows, prm.n)) < p, prm.m)
    elif model.kind == "rs":
        ok = (gen.random((size, model.n)) < p).sum(axis=1) <= model.m
    else:
        ok = np.array([_lrc_plan(model.n, model.k, m) is not None for m in _sample_masks(model, p, size, gen)])
    return Moments.from_values(ok.astype(float))


def empirical_resilience(model: CodeModel, p: float, iterations: int, seed: int, workers: int = 1) -> Moments:
    """Monte Carlo fraction of samples that are fully repairable.

    CORE samples a whole (t+1) x n group and asks the recoverability checker.
    """
    _check_p(p)
    return merge_moments(run_sharded(_resilience_shard, iterations, seed, workers, model, p))


# -- stretch sweeps ------------------------------------------------------------

METRICS = ("traffic", "time", "read")


def default_grid(kinds: Iterable[str] = KINDS) -> list[CodeModel]:
    """Parameter combinations covering stretch factors of roughly 1.1 to 2."""
    out = []
    for kind in kinds:
        for k in range(4, 17, 2):
            for n in range(k + 1, 2 * k + 1):
                if kind == "rs":
                    out.append(CodeModel("rs", n, k))
                elif kind == "lrc" and n >= k + 2:
                    out.append(CodeModel("lrc", n, k))
                elif kind == "core" and n - k <= 3:
                    for t in range(2, 7):
                        out.append(CodeModel("core", n, k, t))
    return [mdl for mdl in out if mdl.stretch <= 2.0 + 1e-9]


def sweep_stretch(
    models: Sequence[CodeModel],
    p: float,
    metric: str,
    iterations: int,
    seed: int,
    mode: str = "centralized",
    workers: int = 1,
    bucket: float = 0.1,
) -> ExperimentReport:
    """Best (minimum) mean metric per code family and stretch-factor bucket."""
    if not models:
        raise ValueError("empty parameter grid")
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    best: dict[tuple[str, float], ReportRow] = {}
    for mdl in models:
        try:
            if metric == "read":
                rows = simulate_degraded_read(mdl, mode, p, iterations, seed, workers).rows
            else:
                rows = simulate_repair(mdl, p, iterations, seed, workers).select(metric)
        except NoRepairableSamples:
            continue
        row = rows[0]
        key = (mdl.kind, round(round(mdl.stretch / bucket) * bucket, 6))
        if key not in best or row.mean < best[key].mean:
            best[key] = row
    ordered = sorted(best.items(), key=lambda kv: (KINDS.index(kv[0][0]), kv[0][1]))
    meta = {"seed": seed, "iterations": iterations, "metric": metric, "p": p, "bucket": bucket}
    return ExperimentReport([r for _, r in ordered], meta)
