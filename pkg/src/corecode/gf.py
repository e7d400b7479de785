"""Arithmetic in GF(2^8) with log/antilog tables.

Elements are ints in [0, 256). Addition is XOR. Multiplication goes through
the exp/log tables built from the primitive polynomial 0x11D, and a full
256x256 product table is kept for vectorised block arithmetic.
"""

from __future__ import annotations

import numpy as np

Q = 8
FIELD_SIZE = 1 << Q
ORDER = FIELD_SIZE - 1
PRIM_POLY = 0x11D


def _build_tables() -> tuple[list[int], list[int]]:
    exp = [0] * (2 * ORDER)
    log = [0] * FIELD_SIZE
    x = 1
    for i in range(ORDER):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & FIELD_SIZE:
            x ^= PRIM_POLY
    for i in range(ORDER, 2 * ORDER):
        exp[i] = exp[i - ORDER]
    return exp, log


EXP, LOG = _build_tables()

# MUL_TABLE[a] is the 256-entry lookup for "multiply by a".
MUL_TABLE = np.zeros((FIELD_SIZE, FIELD_SIZE), dtype=np.uint8)
for _a in range(1, FIELD_SIZE):
    for _b in range(1, FIELD_SIZE):
        MUL_TABLE[_a, _b] = EXP[LOG[_a] + LOG[_b]]
MUL_TABLE.setflags(write=False)
del _a, _b


def _check(a: int) -> None:
    if not 0 <= a < FIELD_SIZE:
        raise ValueError(f"{a} is not an element of GF(2^{Q})")


def gf_add(a: int, b: int) -> int:
    return a ^ b


def gf_mul(a: int, b: int) -> int:
    _check(a)
    _check(b)
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_inv(a: int) -> int:
    _check(a)
    if a == 0:
        raise ZeroDivisionError("0 has no multiplicative inverse")
    return EXP[ORDER - LOG[a]]


def gf_div(a: int, b: int) -> int:
    return gf_mul(a, gf_inv(b))


def gf_pow(a: int, e: int) -> int:
    _check(a)
    if e == 0:
        return 1
    if a == 0:
        return 0
    return EXP[(LOG[a] * e) % ORDER]


def mat_inv(m: list[list[int]]) -> list[list[int]]:
    """Invert a square matrix over GF(2^8) by Gauss-Jordan elimination.

    Raises ValueError if the matrix is singular.
    """
    size = len(m)
    aug = [list(row) + [int(i == j) for j in range(size)] for i, row in enumerate(m)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if aug[r][col]), None)
        if pivot is None:
            raise ValueError("matrix is singular over GF(2^8)")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = gf_inv(aug[col][col])
        aug[col] = [gf_mul(inv, x) for x in aug[col]]
        for r in range(size):
            f = aug[r][col]
            if r != col and f:
                aug[r] = [x ^ gf_mul(f, y) for x, y in zip(aug[r], aug[col])]
    return [row[size:] for row in aug]


def scale_block(coef: int, block: np.ndarray) -> np.ndarray:
    """Multiply every byte of ``block`` by the field constant ``coef``."""
    if coef == 1:
        return block.copy()
    return MUL_TABLE[coef][block]
