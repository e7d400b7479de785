"""One CORE group on local disk: one file per block plus a text manifest.

Layout of a group directory::

    MANIFEST.core
    g<gid>_r<row>_c<col>.blk    (row in [0, t], col in [0, n))

A cell counts as failed when its file is missing or its MD5 digest differs
from the manifest.
"""

from __future__ import annotations

import contextlib
import fcntl
import hashlib
import logging
import os
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from . import codec
from .matrix import Cell, FailureMatrix, random_cells
from .params import CodeParams, CoreError, IrrecoverableError
from .scheduler import SCHEDULERS, H, plan_repair

log = logging.getLogger(__name__)

MANIFEST = "MANIFEST.core"
LOCKFILE = ".lock"
FORMAT_VERSION = 1
DEFAULT_BLOCK_SIZE = 1 << 20


class ManifestError(CoreError):
    pass


def md5_hex(data: bytes) -> str:
    return hashlib.md5(data).hexdigest()


def block_name(gid: int, row: int, col: int) -> str:
    return f"g{gid}_r{row}_c{col}.blk"


@dataclass
class ObjectEntry:
    object_id: int
    filename: str
    length: int
    digest: str


@dataclass
class GroupManifest:
    params: CodeParams
    block_size: int
    gid: int = 0
    objects: list[ObjectEntry] = field(default_factory=list)
    digests: dict[Cell, str] = field(default_factory=dict)
    created: str = ""
    format_version: int = FORMAT_VERSION

    def block_digests(self, row: int) -> list[str]:
        return [self.digests[(row, c)] for c in range(self.params.n)]

    def dump(self) -> str:
        p = self.params
        lines = [
            "# CORE group manifest",
            f"format_version: {self.format_version}",
            f"group: {self.gid}",
            f"n: {p.n}",
            f"k: {p.k}",
            f"t: {p.t}",
            f"q: {p.q}",
            f"block_size: {self.block_size}",
            f"created: {self.created}",
        ]
        for o in self.objects:
            lines.append(f"object: {o.object_id} {o.length} {o.digest} {o.filename}")
        for (r, c), d in sorted(self.digests.items()):
            lines.append(f"block: {r} {c} {d}")
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str) -> "GroupManifest":
        fields: dict[str, str] = {}
        objects, digests = [], {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            key, sep, value = line.partition(": ")
            if not sep:
                raise ManifestError(f"line {lineno}: expected 'key: value'")
            if key == "object":
                oid, length, digest, name = value.split(" ", 3)
                objects.append(ObjectEntry(int(oid), name, int(length), digest))
            elif key == "block":
                r, c, d = value.split()
                digests[(int(r), int(c))] = d
            else:
                fields[key] = value
        try:
            version = int(fields["format_version"])
            if version != FORMAT_VERSION:
                raise ManifestError(f"unsupported manifest version {version}")
            params = CodeParams(int(fields["n"]), int(fields["k"]), int(fields["t"]), int(fields["q"]))
            m = cls(params, int(fields["block_size"]), int(fields["group"]), objects, digests,
                    fields.get("created", ""), version)
        except (KeyError, ValueError) as exc:
            raise ManifestError(f"malformed manifest: {exc}") from exc
        if len(objects) != params.t:
            raise ManifestError(f"manifest lists {len(objects)} objects, expected {params.t}")
        if len(digests) != params.cells:
            raise ManifestError(f"manifest lists {len(digests)} block digests, expected {params.cells}")
        return m


@contextlib.contextmanager
def _locked(group_dir: Path, exclusive: bool) -> Iterator[None]:
    group_dir.mkdir(parents=True, exist_ok=True)
    with open(group_dir / LOCKFILE, "a") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX if exclusive else fcntl.LOCK_SH)
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


def read_manifest(group_dir) -> GroupManifest:
    path = Path(group_dir) / MANIFEST
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read {path}: {exc}") from exc
    return GroupManifest.load(text)


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _split(data: bytes, k: int, block_size: int) -> list[bytes]:
    padded = data.ljust(k * block_size, b"\0")
    return [padded[i * block_size:(i + 1) * block_size] for i in range(k)]


def encode_group(
    input_files: Sequence, params: CodeParams, out_dir, block_size: int = DEFAULT_BLOCK_SIZE, gid: int = 0
) -> GroupManifest:
    """Encode t files into a (t+1) x n grid of block files under ``out_dir``."""
    if len(input_files) != params.t:
        raise ValueError(f"need exactly t={params.t} input files, got {len(input_files)}")
    if block_size < 1:
        raise ValueError("block_size must be positive")
    out = Path(out_dir)
    payloads = []
    for f in input_files:
        data = Path(f).read_bytes()
        if len(data) > params.k * block_size:
            raise ValueError(f"{f} is {len(data)} bytes; at most k*block_size={params.k * block_size} fit")
        payloads.append(data)
    objects = [_split(d, params.k, block_size) for d in payloads]
    grid = codec.core_encode(objects, params)
    with _locked(out, exclusive=True):
        digests = {}
        for r, row in enumerate(grid.rows):
            for c, blk in enumerate(row):
                _write_atomic(out / block_name(gid, r, c), blk)
                digests[(r, c)] = md5_hex(blk)
        manifest = GroupManifest(
            params, block_size, gid,
            [ObjectEntry(i, Path(f).name, len(d), md5_hex(d)) for i, (f, d) in enumerate(zip(input_files, payloads))],
            digests,
            datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        _write_atomic(out / MANIFEST, manifest.dump().encode("utf-8"))
    return manifest


# -- failure injection ---------------------------------------------------------


def step_cells(params: CodeParams) -> list[Cell]:
    if params.rows < 2 or params.n < 2:
        raise ValueError("step pattern needs at least a 2x2 grid")
    return [(0, 0), (1, 0), (1, 1)]


def plus_cells(params: CodeParams) -> list[Cell]:
    if params.rows < 3 or params.n < 3:
        raise ValueError("plus pattern needs at least a 3x3 grid")
    return [(0, 1), (1, 0), (1, 1), (1, 2), (2, 1)]


def pattern_cells(params: CodeParams, pattern: str, seed: int = 0, pattern_file=None) -> list[Cell]:
    """Resolve a pattern string to cells.

    Forms: ``single:R,C``, ``row-pair:R:C1,C2``, ``step``, ``plus``,
    ``random:COUNT`` (uses ``seed``) and ``file`` (reads ``pattern_file``).
    """
    kind, _, arg = pattern.partition(":")
    if kind == "single":
        r, c = (int(x) for x in arg.split(","))
        cells = [(r, c)]
    elif kind == "row-pair":
        r, cols = arg.split(":")
        cells = [(int(r), int(c)) for c in cols.split(",")]
        if len(cells) != 2:
            raise ValueError("row-pair needs exactly two columns")
    elif kind == "step":
        cells = step_cells(params)
    elif kind == "plus":
        cells = plus_cells(params)
    elif kind == "random":
        rows = random_cells(params, int(arg), random.Random(seed))
        cells = FailureMatrix(params, rows).cells()
    elif kind == "file":
        if pattern_file is None:
            raise ValueError("pattern 'file' needs a pattern file")
        cells = FailureMatrix.parse(Path(pattern_file).read_text(), params).cells()
    else:
        raise ValueError(f"unknown pattern {pattern!r}")
    for r, c in cells:
        if not (0 <= r < params.rows and 0 <= c < params.n):
            raise ValueError(f"cell ({r},{c}) outside the {params.rows}x{params.n} grid")
    return cells


def corrupt(group_dir, pattern: str | Iterable[Cell], seed: int = 0, pattern_file=None) -> list[Cell]:
    """Delete the block files named by ``pattern`` (a pattern string or explicit cells)."""
    gdir = Path(group_dir)
    man = read_manifest(gdir)
    if isinstance(pattern, str):
        cells = pattern_cells(man.params, pattern, seed, pattern_file)
    else:
        cells = list(pattern)
    with _locked(gdir, exclusive=True):
        for r, c in cells:
            path = gdir / block_name(man.gid, r, c)
            try:
                path.unlink()
            except FileNotFoundError:
                log.warning("block (%d,%d) already missing", r, c)
    return cells


# -- scanning and repair -------------------------------------------------------


def _cell_ok(gdir: Path, man: GroupManifest, r: int, c: int) -> bool:
    try:
        data = (gdir / block_name(man.gid, r, c)).read_bytes()
    except FileNotFoundError:
        return False
    return len(data) == man.block_size and md5_hex(data) == man.digests[(r, c)]


def _scan(gdir: Path, man: GroupManifest) -> FailureMatrix:
    fm = FailureMatrix(man.params)
    for r in range(man.params.rows):
        for c in range(man.params.n):
            if not _cell_ok(gdir, man, r, c):
                fm.mark_failed(r, c)
    return fm


def scan(group_dir) -> FailureMatrix:
    gdir = Path(group_dir)
    man = read_manifest(gdir)
    with _locked(gdir, exclusive=False):
        return _scan(gdir, man)


@dataclass
class RepairReport:
    blocks_read: int
    actions: list
    bytes_transferred: int
    failed: FailureMatrix
    residual: FailureMatrix

    @property
    def complete(self) -> bool:
        return not self.residual


class _Executor:
    """Applies repair actions to block files, counting every block read."""

    def __init__(self, gdir: Path, man: GroupManifest, failed: FailureMatrix):
        self.gdir, self.man, self.failed = gdir, man, failed.copy()
        self.blocks_read = 0

    def _path(self, r: int, c: int) -> Path:
        return self.gdir / block_name(self.man.gid, r, c)

    def read(self, r: int, c: int) -> bytes:
        if self.failed.is_failed(r, c):
            raise AssertionError(f"attempt to read failed block ({r},{c})")
        self.blocks_read += 1
        return self._path(r, c).read_bytes()

    def write(self, r: int, c: int, data: bytes) -> None:
        if md5_hex(data) != self.man.digests[(r, c)]:
            raise CoreError(f"repaired block ({r},{c}) does not match its recorded digest")
        _write_atomic(self._path(r, c), data)
        self.failed.mark_repaired(r, c)

    def run(self, action) -> None:
        p = self.man.params
        r = action.row
        if action.kind == H:
            live = [c for c in range(p.n) if not self.failed.is_failed(r, c)]
            missing = [c for c in range(p.n) if self.failed.is_failed(r, c)]
            sources = [(c, (lambda c=c: self.read(r, c))) for c in live]
            for c, blk in codec.rs_reconstruct(sources, missing, p).items():
                self.write(r, c, blk)
        else:
            c = action.col
            others = [self.read(i, c) for i in range(p.rows) if i != r]
            self.write(r, c, codec.vertical_repair(others, p.t))


def repair(group_dir, scheduler: str = "rgs") -> RepairReport:
    """Plan per cluster and rebuild every recoverable failed block.

    Raises IrrecoverableError (carrying the report) when some cluster cannot
    be repaired; the recoverable clusters are still fixed first.
    """
    if scheduler not in SCHEDULERS:
        raise ValueError(f"unknown scheduler {scheduler!r}")
    gdir = Path(group_dir)
    man = read_manifest(gdir)
    with _locked(gdir, exclusive=True):
        failed = _scan(gdir, man)
        sched, leftover = plan_repair(failed, scheduler)
        ex = _Executor(gdir, man, failed)
        for a in sched.actions:
            ex.run(a)
    if ex.blocks_read != sched.total_blocks_read:
        raise CoreError(f"executor read {ex.blocks_read} blocks, plan expected {sched.total_blocks_read}")
    report = RepairReport(ex.blocks_read, sched.actions, ex.blocks_read * man.block_size, failed, leftover)
    if leftover:
        err = IrrecoverableError(f"irrecoverable cells remain: {leftover.format()}", leftover)
        err.report = report
        raise err
    return report


@dataclass
class VerifyResult:
    mismatches: list[str]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def verify(group_dir) -> VerifyResult:
    """Recheck every block digest and every reassembled object against the manifest."""
    gdir = Path(group_dir)
    man = read_manifest(gdir)
    p = man.params
    problems = []
    with _locked(gdir, exclusive=False):
        blocks: dict[Cell, bytes | None] = {}
        for r in range(p.rows):
            for c in range(p.n):
                try:
                    data = (gdir / block_name(man.gid, r, c)).read_bytes()
                except FileNotFoundError:
                    problems.append(f"block ({r},{c}) missing")
                    blocks[(r, c)] = None
                    continue
                blocks[(r, c)] = data
                if md5_hex(data) != man.digests[(r, c)]:
                    problems.append(f"block ({r},{c}) digest mismatch")
        for obj in man.objects:
            parts = [blocks[(obj.object_id, c)] for c in range(p.k)]
            if any(b is None for b in parts):
                problems.append(f"object {obj.object_id} ({obj.filename}) incomplete")
                continue
            data = b"".join(parts)[: obj.length]
            if md5_hex(data) != obj.digest:
                problems.append(f"object {obj.object_id} ({obj.filename}) digest mismatch")
    return VerifyResult(problems)


def extract(group_dir, object_id: int) -> bytes:
    """Original bytes of one object, read from its systematic blocks."""
    gdir = Path(group_dir)
    man = read_manifest(gdir)
    obj = man.objects[object_id]
    with _locked(gdir, exclusive=False):
        data = b"".join((gdir / block_name(man.gid, object_id, c)).read_bytes() for c in range(man.params.k))
    return data[: obj.length]
