"""Systematic Reed-Solomon rows crossed with a single XOR parity row.

Blocks are ``bytes`` of equal length; field arithmetic is applied per byte
position. Row codewords are produced by a generator ``[I_k | H]`` with
``H[i][j] = alpha_i ** j`` and ``alpha_i = i + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from . import gf
from .params import CodeParams, UnrecoverableRow, UnsupportedParams

Block = bytes
# rs_decode accepts either the bytes or a zero-argument loader for them, so
# callers can hand over every available block while only k get read.
BlockSource = Union[bytes, bytearray, memoryview, Callable[[], bytes]]

# Beyond three parity columns some square minors of H vanish for these
# evaluation points (e.g. 1 ^ 2 ^ 3 == 0 kills the {0,1,3} minor).
MAX_PARITY = 3


@dataclass(frozen=True)
class GeneratorMatrix:
    k: int
    n: int
    entries: tuple[tuple[int, ...], ...]

    @property
    def parity(self) -> tuple[tuple[int, ...], ...]:
        return tuple(row[self.k:] for row in self.entries)

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(row[j] for row in self.entries)

    def submatrix(self, cols: Sequence[int]) -> list[list[int]]:
        return [[row[c] for c in cols] for row in self.entries]


def evaluation_points(k: int) -> list[int]:
    return list(range(1, k + 1))


@lru_cache(maxsize=None)
def _generator(n: int, k: int) -> GeneratorMatrix:
    m = n - k
    if m > MAX_PARITY:
        raise UnsupportedParams(
            f"Vandermonde parity with m={m} > {MAX_PARITY} is not MDS for the fixed evaluation points"
        )
    rows = []
    for i, a in enumerate(evaluation_points(k)):
        ident = [int(i == j) for j in range(k)]
        rows.append(tuple(ident + [gf.gf_pow(a, j) for j in range(m)]))
    return GeneratorMatrix(k=k, n=n, entries=tuple(rows))


def build_generator(params: CodeParams) -> GeneratorMatrix:
    return _generator(params.n, params.k)


@lru_cache(maxsize=4096)
def _decode_matrix(n: int, k: int, cols: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    inv = gf.mat_inv(_generator(n, k).submatrix(cols))
    return tuple(tuple(r) for r in inv)


def _as_array(block) -> np.ndarray:
    return np.frombuffer(bytes(block), dtype=np.uint8)


def _check_lengths(blocks: Sequence[bytes]) -> int:
    sizes = {len(b) for b in blocks}
    if len(sizes) > 1:
        raise ValueError(f"blocks have unequal lengths {sorted(sizes)}")
    return sizes.pop() if sizes else 0


def _combine(coefs: Sequence[int], arrays: Sequence[np.ndarray], size: int) -> np.ndarray:
    out = np.zeros(size, dtype=np.uint8)
    for c, a in zip(coefs, arrays):
        if c:
            out ^= gf.scale_block(c, a)
    return out


def rs_encode(data: Sequence[bytes], params: CodeParams) -> list[Block]:
    """Encode k data blocks into an n-block systematic codeword."""
    if len(data) != params.k:
        raise ValueError(f"expected {params.k} data blocks, got {len(data)}")
    size = _check_lengths(data)
    g = build_generator(params)
    arrays = [_as_array(b) for b in data]
    parity = [
        _combine([row[params.k + j] for row in g.entries], arrays, size).tobytes()
        for j in range(params.m)
    ]
    return [bytes(b) for b in data] + parity


def _load(src: BlockSource) -> bytes:
    return src() if callable(src) else bytes(src)


def select_decode_columns(cols: Iterable[int], k: int) -> list[int]:
    """The k columns a decode will actually read: lowest indices first."""
    chosen = sorted(cols)
    if len(set(chosen)) != len(chosen):
        raise ValueError("duplicate column indices")
    if len(chosen) < k:
        raise UnrecoverableRow(f"need {k} blocks to decode, only {len(chosen)} available")
    return chosen[:k]


def rs_decode(available: Iterable[tuple[int, BlockSource]], params: CodeParams) -> list[Block]:
    """Recover the k data blocks from any k available codeword blocks.

    Exactly k sources are loaded: those with the lowest column indices.
    """
    avail = dict()
    for col, src in available:
        if col in avail:
            raise ValueError(f"duplicate column index {col}")
        if not 0 <= col < params.n:
            raise ValueError(f"column {col} out of range for n={params.n}")
        avail[col] = src
    cols = select_decode_columns(avail, params.k)
    blocks = [_load(avail[c]) for c in cols]
    size = _check_lengths(blocks)
    if cols == list(range(params.k)):
        return blocks
    try:
        inv = _decode_matrix(params.n, params.k, tuple(cols))
    except ValueError as exc:
        raise UnrecoverableRow(f"columns {cols} do not span the code") from exc
    arrays = [_as_array(b) for b in blocks]
    # data_i = sum_j c_j * inv[j][i]
    return [_combine([inv[j][i] for j in range(params.k)], arrays, size).tobytes() for i in range(params.k)]


def rs_reconstruct(
    available: Iterable[tuple[int, BlockSource]], missing: Iterable[int], params: CodeParams
) -> dict[int, Block]:
    """Horizontal repair: decode from k blocks, then regenerate the missing cells."""
    data = rs_decode(available, params)
    codeword = rs_encode(data, params)
    return {c: codeword[c] for c in missing}


def spc_encode(rows: Sequence[Sequence[bytes]]) -> list[Block]:
    """Columnwise XOR of t rows."""
    if not rows:
        raise ValueError("need at least one row")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged rows")
    size = _check_lengths([b for r in rows for b in r])
    out = []
    for j in range(width):
        acc = np.zeros(size, dtype=np.uint8)
        for r in rows:
            acc ^= _as_array(r[j])
        out.append(acc.tobytes())
    return out


def vertical_repair(column_blocks: Sequence[bytes], t: int | None = None) -> Block:
    """XOR the t surviving blocks of a column to rebuild the missing one."""
    if t is not None and len(column_blocks) != t:
        raise ValueError(f"vertical repair needs exactly {t} blocks, got {len(column_blocks)}")
    if not column_blocks:
        raise ValueError("vertical repair needs at least one block")
    size = _check_lengths(column_blocks)
    acc = np.zeros(size, dtype=np.uint8)
    for b in column_blocks:
        acc ^= _as_array(b)
    return acc.tobytes()


def xor_blocks(blocks: Sequence[bytes]) -> Block:
    return vertical_repair(blocks)


@dataclass
class BlockGrid:
    """(t+1) x n blocks: t encoded objects followed by the XOR parity row."""

    params: CodeParams
    rows: list[list[Block]] = field(default_factory=list)

    @property
    def block_size(self) -> int:
        return len(self.rows[0][0])

    def column(self, j: int) -> list[Block]:
        return [r[j] for r in self.rows]

    def check(self) -> None:
        """Raise ValueError if any grid invariant is violated."""
        p = self.params
        if len(self.rows) != p.t + 1 or any(len(r) != p.n for r in self.rows):
            raise ValueError("grid has wrong shape")
        _check_lengths([b for r in self.rows for b in r])
        for i, row in enumerate(self.rows[: p.t]):
            if rs_encode(row[: p.k], p) != row:
                raise ValueError(f"row {i} is not a codeword")
        if spc_encode(self.rows[: p.t]) != self.rows[p.t]:
            raise ValueError("parity row is not the XOR of the data rows")
        if rs_encode(self.rows[p.t][: p.k], p) != self.rows[p.t]:
            raise ValueError("parity row is not a codeword")


def core_encode(objects: Sequence[Sequence[bytes]], params: CodeParams) -> BlockGrid:
    if len(objects) != params.t:
        raise ValueError(f"expected {params.t} objects, got {len(objects)}")
    rows = [rs_encode(o, params) for o in objects]
    _check_lengths([b for r in rows for b in r])
    rows.append(spc_encode(rows))
    return BlockGrid(params, rows)
