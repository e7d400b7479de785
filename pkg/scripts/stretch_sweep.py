"""Best repair traffic, repair time or degraded-read cost per stretch factor.

Each code family is swept over its default parameter grid and the minimum
mean is kept in every stretch bucket.
"""

import argparse
import sys
from dataclasses import dataclass

from corecode.analytics import KINDS, METRICS, default_grid, sweep_stretch


@dataclass
class Config:
    p: float = 0.01
    metric: str = "traffic"
    mode: str = "centralized"
    iterations: int = 20_000
    seed: int = 52
    workers: int = 1


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=Config.p)
    ap.add_argument("--metric", choices=METRICS, default=Config.metric)
    ap.add_argument("--mode", choices=["centralized", "distributed"], default=Config.mode)
    ap.add_argument("--iterations", type=int, default=Config.iterations)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--workers", type=int, default=Config.workers)
    ap.add_argument("--out", default=None)
    a = ap.parse_args()
    cfg = Config(a.p, a.metric, a.mode, a.iterations, a.seed, a.workers)
    rep = sweep_stretch(default_grid(KINDS), cfg.p, cfg.metric, cfg.iterations, cfg.seed, cfg.mode, cfg.workers)
    for row in rep.rows:
        print(f"{row.code:5s} ({row.n},{row.k},{row.t}) stretch={row.stretch:.2f} {row.metric}={row.mean:.4f}",
              file=sys.stderr)
    if a.out:
        with open(a.out, "w", newline="") as fh:
            rep.write_csv(fh)
    else:
        rep.write_csv(sys.stdout)


if __name__ == "__main__":
    main()
