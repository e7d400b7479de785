from __future__ import annotations

from dataclasses import dataclass

from .gf import FIELD_SIZE, Q


class CoreError(Exception):
    """Base class for library errors."""


class UnsupportedParams(CoreError, ValueError):
    pass


class UnrecoverableRow(CoreError):
    """Fewer than k usable blocks remain in a row."""


class IrrecoverableError(CoreError):
    """A failure pattern cannot be fully repaired."""

    def __init__(self, message: str, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class CodeParams:
    """Shape of a cross-object group: t objects, each RS(n, k) encoded, plus one XOR row."""

    n: int
    k: int
    t: int
    q: int = Q

    def __post_init__(self):
        if self.q != Q:
            raise UnsupportedParams(f"only q={Q} is implemented, got q={self.q}")
        if not 2 <= self.k < self.n:
            raise UnsupportedParams(f"need 2 <= k < n, got n={self.n} k={self.k}")
        if self.t < 1:
            raise UnsupportedParams(f"need t >= 1, got t={self.t}")
        if self.n > FIELD_SIZE:
            raise UnsupportedParams(f"n={self.n} exceeds field size {FIELD_SIZE}")
        if 2 * self.k < self.n:
            raise UnsupportedParams(f"need 2k >= n, got n={self.n} k={self.k}")

    @property
    def m(self) -> int:
        return self.n - self.k

    @property
    def rows(self) -> int:
        return self.t + 1

    @property
    def cells(self) -> int:
        return (self.t + 1) * self.n

    @property
    def stretch(self) -> float:
        """Storage overhead of the whole group relative to the t raw objects."""
        return self.n * (self.t + 1) / (self.k * self.t)

    def __str__(self) -> str:
        return f"({self.n},{self.k},{self.t})"
