"""Closed-form resilience next to Monte Carlo estimates for RS, LRC and CORE.

For CORE the closed form is a lower bound, and the simulated value comes from
the recoverability checker run on whole groups.
"""

import argparse
import sys
from dataclasses import dataclass, field

from corecode.analytics import CodeModel, empirical_resilience, resilience
from corecode.report import ExperimentReport, ReportRow, nines


@dataclass
class Config:
    probs: list[float] = field(default_factory=lambda: [0.001, 0.01, 0.05, 0.1])
    iterations: int = 1_000_000
    seed: int = 51
    workers: int = 1
    models: list[CodeModel] = field(default_factory=lambda: [
        CodeModel("rs", 14, 12), CodeModel("lrc", 16, 12), CodeModel("core", 14, 12, 5),
    ])


def run(cfg: Config) -> ExperimentReport:
    rep = ExperimentReport(metadata={"experiment": "resilience", "iterations": cfg.iterations})
    for mdl in cfg.models:
        for p in cfg.probs:
            closed = float(resilience(mdl, p))
            mc = empirical_resilience(mdl, p, cfg.iterations, cfg.seed, cfg.workers)
            label = "resilience-lb" if mdl.kind == "core" else "resilience"
            rep.rows += [
                ReportRow(mdl.kind, mdl.n, mdl.k, mdl.t, p, label, closed, 0.0, 1),
                ReportRow(mdl.kind, mdl.n, mdl.k, mdl.t, p, "resilience-mc", mc.mean, mc.variance, mc.count,
                          cfg.seed),
                ReportRow(mdl.kind, mdl.n, mdl.k, mdl.t, p, "nines", nines(closed), 0.0, 1),
            ]
            print(f"{str(mdl):15s} p={p:<6} closed={closed:.6f} mc={mc.mean:.6f} ±{mc.stderr:.1e}",
                  file=sys.stderr)
    return rep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--probs", default="0.001,0.01,0.05,0.1")
    ap.add_argument("--iterations", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=51)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None)
    a = ap.parse_args()
    cfg = Config([float(x) for x in a.probs.split(",")], a.iterations, a.seed, a.workers)
    rep = run(cfg)
    if a.out:
        with open(a.out, "w", newline="") as fh:
            rep.write_csv(fh)
    else:
        rep.write_csv(sys.stdout)


if __name__ == "__main__":
    main()
