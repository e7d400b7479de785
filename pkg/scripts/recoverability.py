"""Fraction of random failure patterns that can be fully repaired, by failure count.

Counts run from 1 up to the nominal ceiling U of the configuration.
"""

import argparse
import sys
from dataclasses import dataclass

from corecode.matrix import bounds, recoverability_experiment
from corecode.params import CodeParams
from corecode.report import ExperimentReport


@dataclass
class Config:
    n: int = 14
    k: int = 12
    t: int = 5
    iterations: int = 1_000_000
    seed: int = 7
    workers: int = 1


def run(cfg: Config) -> ExperimentReport:
    params = CodeParams(cfg.n, cfg.k, cfg.t)
    rep = ExperimentReport(metadata={"experiment": "recoverability"})
    for f in range(1, bounds(params).U + 1):
        rep.extend(recoverability_experiment(params, f, cfg.iterations, cfg.seed, cfg.workers))
    return rep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(Config()).items():
        ap.add_argument(f"--{name}", type=int, default=default)
    ap.add_argument("--out", default=None)
    a = ap.parse_args()
    out = a.out
    rep = run(Config(**{k: v for k, v in vars(a).items() if k != "out"}))
    for row in rep.select("nines"):
        print(f"{int(row.x):3d} failures  {row.mean:6.2f} nines", file=sys.stderr)
    if out:
        with open(out, "w", newline="") as fh:
            rep.write_csv(fh)
    else:
        rep.write_csv(sys.stdout)


if __name__ == "__main__":
    main()
