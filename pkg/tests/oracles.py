"""Independent reference implementations used to check the package.

Nothing here imports corecode internals; each oracle recomputes its answer
from first principles (bitwise field arithmetic, explicit search, direct sums).
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

POLY = 0x11D


def carryless_mul(a: int, b: int) -> int:
    """Shift-and-add multiplication in GF(2^8), reducing by x^8+x^4+x^3+x^2+1."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= POLY
    return out


def inverse_by_search(a: int) -> int:
    for b in range(1, 256):
        if carryless_mul(a, b) == 1:
            return b
    raise ZeroDivisionError(a)


def power(a: int, e: int) -> int:
    out = 1
    for _ in range(e):
        out = carryless_mul(out, a)
    return out


def generator_rows(n: int, k: int) -> list[list[int]]:
    """Systematic generator with parity entry (i, j) = (i+1)^j."""
    rows = []
    for i in range(k):
        rows.append([int(i == j) for j in range(k)] + [power(i + 1, j) for j in range(n - k)])
    return rows


def rank(matrix: list[list[int]]) -> int:
    m = [row[:] for row in matrix]
    r = 0
    cols = len(m[0]) if m else 0
    for c in range(cols):
        pivot = next((i for i in range(r, len(m)) if m[i][c]), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = inverse_by_search(m[r][c])
        m[r] = [carryless_mul(x, inv) for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x ^ carryless_mul(f, y) for x, y in zip(m[i], m[r])]
        r += 1
    return r


def is_mds(n: int, k: int) -> bool:
    g = generator_rows(n, k)
    for cols in itertools.combinations(range(n), k):
        if rank([[row[c] for c in cols] for row in g]) < k:
            return False
    return True


def encode_reference(data: list[bytes], n: int) -> list[bytes]:
    k = len(data)
    g = generator_rows(n, k)
    size = len(data[0])
    out = []
    for j in range(n):
        blk = bytearray(size)
        for i in range(k):
            coef = g[i][j]
            if coef:
                for b in range(size):
                    blk[b] ^= carryless_mul(coef, data[i][b])
        out.append(bytes(blk))
    return out


class RepairSearch:
    """Depth-first search over repair sequences on a rows x n grid.

    A state is the set of failed cells packed into an int (bit r*n+c). A row
    with between 1 and m failures can be decoded; a column with exactly one
    failure can be XOR-repaired. A state is recoverable if some sequence of
    such steps empties it.
    """

    def __init__(self, rows: int, n: int, m: int):
        self.rows, self.n, self.m = rows, n, m
        self.row_masks = [((1 << n) - 1) << (r * n) for r in range(rows)]
        self.col_masks = [sum(1 << (r * n + c) for r in range(rows)) for c in range(n)]
        self.memo: dict[int, bool] = {0: True}

    def moves(self, state: int):
        for rm in self.row_masks:
            hit = state & rm
            if 0 < bin(hit).count("1") <= self.m:
                yield state & ~rm
        for cm in self.col_masks:
            hit = state & cm
            if bin(hit).count("1") == 1:
                yield state & ~cm

    def __call__(self, state: int) -> bool:
        known = self.memo.get(state)
        if known is not None:
            return known
        ok = any(self(nxt) for nxt in self.moves(state))
        self.memo[state] = ok
        return ok

    def reset(self) -> None:
        self.memo = {0: True}


def pack(cells, n: int) -> int:
    return sum(1 << (r * n + c) for r, c in cells)


def two_failure_clusters(rows: int, n: int) -> Fraction:
    """Exact mean cluster count for two distinct uniformly placed failures."""
    cells = rows * n
    pairs = math.comb(cells, 2)
    aligned = rows * math.comb(n, 2) + n * math.comb(rows, 2)
    return Fraction(aligned + 2 * (pairs - aligned), pairs)


def binomial_at_most(n: int, p, m: int):
    return sum(math.comb(n, i) * p ** i * (1 - p) ** (n - i) for i in range(m + 1))
