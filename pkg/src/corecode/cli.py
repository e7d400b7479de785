"""``core`` command-line entry point.

Exit codes: 0 ok, 1 user error, 2 irrecoverable or corrupted data, 3 internal error.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from pathlib import Path

from . import analytics, matrix, scheduler, store
from .analytics import CodeModel
from .params import CodeParams, CoreError, IrrecoverableError
from .report import ExperimentReport, ReportRow

EXIT_OK, EXIT_USER, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
DEFAULT_SEED = 20130101

log = logging.getLogger("corecode")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USER, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _int_range(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        lo, sep, hi = part.partition("-")
        out.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
    return out


def _add_code(p: argparse.ArgumentParser, need_t: bool = True, code: bool = False) -> None:
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=int, required=need_t, default=None)
    p.add_argument("--q", type=int, default=8)
    if code:
        p.add_argument("--code", choices=analytics.KINDS, default="core")


def _add_mc(p: argparse.ArgumentParser, iters: int) -> None:
    p.add_argument("--iters", type=int, default=iters)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=None, help="write CSV here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="core", description="CORE product-code storage toolkit")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="encode t files into a block group")
    _add_code(p)
    p.add_argument("--block-size", type=int, default=store.DEFAULT_BLOCK_SIZE)
    p.add_argument("--dir", type=Path, required=True)
    p.add_argument("files", nargs="+", type=Path)

    p = sub.add_parser("corrupt", help="delete block files following a failure pattern")
    p.add_argument("--dir", type=Path, required=True)
    p.add_argument("--pattern", default=None,
                   help="single:R,C | row-pair:R:C1,C2 | step | plus | random:COUNT | file")
    p.add_argument("--pattern-file", type=Path, default=None)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("scan", help="print the failure pattern of a group")
    p.add_argument("--dir", type=Path, required=True)

    p = sub.add_parser("repair", help="repair a group with a scheduler")
    p.add_argument("--dir", type=Path, required=True)
    p.add_argument("--scheduler", choices=list(scheduler.SCHEDULERS), default="rgs")

    p = sub.add_parser("verify", help="check block and object digests")
    p.add_argument("--dir", type=Path, required=True)

    p = sub.add_parser("check", help="recoverability, bounds, clusters and schedules for a pattern file")
    p.add_argument("--pattern-file", type=Path, required=True)
    p.add_argument("--k", type=int, required=True)

    an = sub.add_parser("analyze", help="closed-form analytics").add_subparsers(
        dest="what", required=True, parser_class=_Parser)
    for name in ("resilience", "nines"):
        p = an.add_parser(name)
        _add_code(p, need_t=False, code=True)
        p.add_argument("--p", type=_floats, required=True)
        p.add_argument("--out", type=Path, default=None)
    p = an.add_parser("lrc-cost")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", type=Path, default=None)

    sim = sub.add_parser("simulate", help="Monte Carlo experiments").add_subparsers(
        dest="what", required=True, parser_class=_Parser)
    p = sim.add_parser("repair")
    _add_code(p, need_t=False, code=True)
    p.add_argument("--p", type=_floats, required=True)
    _add_mc(p, 100_000)
    p = sim.add_parser("degraded-read")
    _add_code(p, need_t=False, code=True)
    p.add_argument("--p", type=_floats, required=True)
    p.add_argument("--mode", choices=["centralized", "distributed"], default="centralized")
    _add_mc(p, 100_000)
    for name, iters in (("clusters", 100_000), ("recoverability", 100_000), ("schedulers", 10_000)):
        p = sim.add_parser(name)
        _add_code(p)
        p.add_argument("--failures", type=_int_range, default=list(range(1, 21)))
        _add_mc(p, iters)

    p = sub.add_parser("sweep", help="best metric per stretch factor for each code family")
    p.add_argument("--code", default="rs,lrc,core", help="comma-separated families")
    p.add_argument("--metric", choices=analytics.METRICS, default="traffic")
    p.add_argument("--mode", choices=["centralized", "distributed"], default="centralized")
    p.add_argument("--p", type=float, required=True)
    _add_mc(p, 20_000)
    return ap


def _params(a) -> CodeParams:
    return CodeParams(a.n, a.k, a.t, a.q)


def _model(a) -> CodeModel:
    if a.code == "core" and a.t is None:
        raise UsageError("--t is required for --code core")
    if a.q != 8:
        raise UsageError("only --q 8 is supported")
    return CodeModel(a.code, a.n, a.k, a.t if a.code == "core" else None)


def _emit(report: ExperimentReport, out: Path | None) -> None:
    if out is None:
        report.write_csv(sys.stdout)
    else:
        with open(out, "w", newline="") as fh:
            report.write_csv(fh)
        log.info("wrote %d rows to %s", len(report.rows), out)


def _cmd_encode(a) -> int:
    man = store.encode_group(a.files, _params(a), a.dir, a.block_size)
    print(f"encoded {len(man.objects)} objects into {man.params.cells} blocks under {a.dir}", file=sys.stderr)
    return EXIT_OK


def _cmd_corrupt(a) -> int:
    if a.pattern is None and a.pattern_file is None:
        raise UsageError("give --pattern or --pattern-file")
    pattern = a.pattern or "file"
    cells = store.corrupt(a.dir, pattern, a.seed, a.pattern_file)
    man = store.read_manifest(a.dir)
    print(matrix.FailureMatrix.from_cells(man.params, cells).format())
    print(f"removed {len(cells)} blocks", file=sys.stderr)
    return EXIT_OK


def _cmd_scan(a) -> int:
    fm = store.scan(a.dir)
    print(fm.format())
    print(f"failed={fm.count}", file=sys.stderr)
    return EXIT_OK


def _cmd_repair(a) -> int:
    try:
        rep = store.repair(a.dir, a.scheduler)
    except IrrecoverableError as exc:
        rep = getattr(exc, "report", None)
        if rep is not None:
            print(f"partial repair: blocks_read={rep.blocks_read} actions={len(rep.actions)}", file=sys.stderr)
        print(f"irrecoverable: {exc}", file=sys.stderr)
        return EXIT_DATA
    sched = scheduler.RepairSchedule(rep.actions)
    sched.normalized_time = scheduler.schedule_time(sched, rep.failed)
    print(sched.format())
    print(f"blocks_read={rep.blocks_read} actions={len(rep.actions)} bytes_transferred={rep.bytes_transferred}",
          file=sys.stderr)
    return EXIT_OK


def _cmd_verify(a) -> int:
    res = store.verify(a.dir)
    for line in res.mismatches:
        print(line)
    print("ok" if res.ok else f"{len(res.mismatches)} mismatches", file=sys.stderr)
    return EXIT_OK if res.ok else EXIT_DATA


def _cmd_check(a) -> int:
    text = a.pattern_file.read_text()
    rows, n = matrix.parse_dimensions(text)
    params = CodeParams(n, a.k, rows - 1)
    fm = matrix.FailureMatrix.parse(text, params)
    b = matrix.bounds(params)
    rec = matrix.is_recoverable(fm)
    clusters = matrix.find_clusters(fm)
    hv = scheduler.compute_hv(fm)
    print(f"params={params} failures={fm.count} L={b.L} U={b.U}")
    print(f"clusters={len(clusters)} v={hv.v} h={hv.h}")
    for i, cl in enumerate(clusters):
        print(f"cluster {i}: " + " ".join(f"{r},{c}" for r, c in sorted(cl.cells)))
    if not rec:
        print(f"irrecoverable residual={rec.residual.format()}")
        return EXIT_DATA
    print("recoverable")
    for name, plan in scheduler.SCHEDULERS.items():
        s = plan(fm)
        print(f"{name}: " + ", ".join(str(x) for x in s.actions) +
              f"  blocks_read={s.total_blocks_read} time={s.normalized_time}")
    return EXIT_OK


def _cmd_analyze(a) -> int:
    rep = ExperimentReport(metadata={"kind": a.what})
    if a.what == "lrc-cost":
        val = analytics.lrc_avg_single_repair(a.n, a.k)
        rep.rows.append(ReportRow("lrc", a.n, a.k, None, 0.0, "single-repair-blocks", float(val), 0.0, 1))
    else:
        mdl = _model(a)
        for p in a.p:
            pi = analytics.resilience(mdl, p)
            val = pi if a.what == "resilience" else analytics.nines(pi)
            metric = a.what if mdl.kind != "core" or a.what == "nines" else "resilience-lb"
            rep.rows.append(ReportRow(mdl.kind, mdl.n, mdl.k, mdl.t, p, metric, float(val), 0.0, 1))
    _emit(rep, a.out)
    return EXIT_OK


def _cmd_simulate(a) -> int:
    rep = ExperimentReport(metadata={"kind": a.what, "seed": a.seed})
    if a.what in ("repair", "degraded-read"):
        mdl = _model(a)
        for p in a.p:
            if a.what == "repair":
                part = analytics.simulate_repair(mdl, p, a.iters, a.seed, a.workers)
            else:
                part = analytics.simulate_degraded_read(mdl, a.mode, p, a.iters, a.seed, a.workers)
            rep.extend(part)
            log.info("%s p=%g rejected=%s", mdl, p, part.metadata.get("rejected"))
    else:
        params = _params(a)
        fn = {
            "clusters": matrix.cluster_count_experiment,
            "recoverability": matrix.recoverability_experiment,
            "schedulers": scheduler.scheduler_comparison,
        }[a.what]
        for f in a.failures:
            rep.extend(fn(params, f, a.iters, a.seed, a.workers))
    _emit(rep, a.out)
    return EXIT_OK


def _cmd_sweep(a) -> int:
    kinds = [k.strip() for k in a.code.split(",") if k.strip()]
    bad = set(kinds) - set(analytics.KINDS)
    if bad:
        raise UsageError(f"unknown code families {sorted(bad)}")
    grid = analytics.default_grid(kinds)
    rep = analytics.sweep_stretch(grid, a.p, a.metric, a.iters, a.seed, a.mode, a.workers)
    _emit(rep, a.out)
    return EXIT_OK


COMMANDS = {
    "encode": _cmd_encode, "corrupt": _cmd_corrupt, "scan": _cmd_scan, "repair": _cmd_repair,
    "verify": _cmd_verify, "check": _cmd_check, "analyze": _cmd_analyze, "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[a.cmd](a)
    except IrrecoverableError as exc:
        print(f"core: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, CoreError, ValueError, OSError) as exc:
        print(f"core: error: {exc}", file=sys.stderr)
        return EXIT_USER
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


def main() -> None:
    with contextlib.suppress(BrokenPipeError):
        sys.exit(run())


if __name__ == "__main__":
    main()
