"""Blocks read by each repair planner over random recoverable patterns."""

import argparse
import sys
from dataclasses import dataclass

from corecode.params import CodeParams
from corecode.report import ExperimentReport
from corecode.scheduler import SCHEDULERS, scheduler_comparison


@dataclass
class Config:
    n: int = 14
    k: int = 12
    t: int = 5
    max_failures: int = 20
    iterations: int = 10_000
    seed: int = 9
    workers: int = 1


def run(cfg: Config) -> ExperimentReport:
    params = CodeParams(cfg.n, cfg.k, cfg.t)
    rep = ExperimentReport(metadata={"experiment": "schedulers"})
    for f in range(1, cfg.max_failures + 1):
        rep.extend(scheduler_comparison(params, f, cfg.iterations, cfg.seed, cfg.workers))
    return rep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(Config()).items():
        ap.add_argument(f"--{name.replace('_', '-')}", type=int, default=default)
    ap.add_argument("--out", default=None)
    a = ap.parse_args()
    out = a.out
    rep = run(Config(**{k: v for k, v in vars(a).items() if k != "out"}))
    names = list(SCHEDULERS)
    print("fails " + " ".join(f"{n:>13}" for n in names), file=sys.stderr)
    for f in sorted({int(r.x) for r in rep.rows}):
        means = {r.metric: r.mean for r in rep.rows if int(r.x) == f}
        print(f"{f:5d} " + " ".join(f"{means['cost-' + n]:13.2f}" for n in names), file=sys.stderr)
    if out:
        with open(out, "w", newline="") as fh:
            rep.write_csv(fh)
    else:
        rep.write_csv(sys.stdout)


if __name__ == "__main__":
    main()
