"""Mean number of failure clusters against the number of failed blocks."""

import argparse
import sys
from dataclasses import dataclass

from corecode.matrix import cluster_count_experiment
from corecode.params import CodeParams
from corecode.report import ExperimentReport


@dataclass
class Config:
    n: int = 14
    k: int = 12
    t: int = 5
    max_failures: int = 20
    iterations: int = 100_000
    seed: int = 6
    workers: int = 1


def run(cfg: Config) -> ExperimentReport:
    params = CodeParams(cfg.n, cfg.k, cfg.t)
    rep = ExperimentReport(metadata={"experiment": "clusters"})
    for f in range(1, cfg.max_failures + 1):
        rep.extend(cluster_count_experiment(params, f, cfg.iterations, cfg.seed, cfg.workers))
    return rep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(Config()).items():
        ap.add_argument(f"--{name.replace('_', '-')}", type=int, default=default)
    ap.add_argument("--out", default=None)
    a = ap.parse_args()
    out = a.out
    cfg = Config(**{k: v for k, v in vars(a).items() if k != "out"})
    rep = run(cfg)
    for row in rep.rows:
        print(f"{int(row.x):3d} failures  {row.mean:6.3f} clusters", file=sys.stderr)
    if out:
        with open(out, "w", newline="") as fh:
            rep.write_csv(fh)
    else:
        rep.write_csv(sys.stdout)


if __name__ == "__main__":
    main()
