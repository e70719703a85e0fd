"""Exact arithmetic in Q^n with the lexicographic (leftmost-dominant) order.

Values are tuples of `fractions.Fraction`, so equality is structural and all
operations are pure.  The rank n is fixed per value and mixing ranks in a
binary operation is an error: silent mixed-rank comparisons are a classic
source of wrong verdicts in the downstream tree checkers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

LT, EQ, GT = -1, 0, 1


class RankMismatchError(ValueError):
    """Two values of different rank met in one operation."""


def _rat(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot coerce {x!r} to a rational")


@dataclass(frozen=True)
class LexValue:
    """Element of Q^n, leftmost coordinate dominant."""

    coords: tuple[Fraction, ...]

    def __init__(self, coords: Iterable) -> None:
        object.__setattr__(self, "coords", tuple(_rat(c) for c in coords))
        if not self.coords:
            raise ValueError("rank must be positive")

    @property
    def rank(self) -> int:
        return len(self.coords)

    @staticmethod
    def zero(rank: int) -> "LexValue":
        return LexValue([0] * rank)

    def _check_rank(self, other: "LexValue") -> None:
        if self.rank != other.rank:
            raise RankMismatchError(f"rank {self.rank} vs {other.rank}")

    # arithmetic -----------------------------------------------------------

    def __add__(self, other: "LexValue") -> "LexValue":
        self._check_rank(other)
        return LexValue(a + b for a, b in zip(self.coords, other.coords))

    def __sub__(self, other: "LexValue") -> "LexValue":
        self._check_rank(other)
        return LexValue(a - b for a, b in zip(self.coords, other.coords))

    def __neg__(self) -> "LexValue":
        return LexValue(-a for a in self.coords)

    def scale(self, q) -> "LexValue":
        """Coordinatewise multiplication by a rational; scale(1/2) is the
        exact half used by midpoints."""
        q = _rat(q)
        return LexValue(a * q for a in self.coords)

    def half(self) -> "LexValue":
        return self.scale(Fraction(1, 2))

    # order ----------------------------------------------------------------

    def __lt__(self, other: "LexValue") -> bool:
        self._check_rank(other)
        return self.coords < other.coords

    def __le__(self, other: "LexValue") -> bool:
        self._check_rank(other)
        return self.coords <= other.coords

    def __gt__(self, other: "LexValue") -> bool:
        return other < self

    def __ge__(self, other: "LexValue") -> bool:
        return other <= self

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def is_positive(self) -> bool:
        return self > LexValue.zero(self.rank)

    def __abs__(self) -> "LexValue":
        return self if self >= LexValue.zero(self.rank) else -self

    # magnitude / quotients --------------------------------------------------

    def magnitude(self) -> int:
        """Smallest p such that the value lies in the convex subgroup of the
        last p coordinates; 0 iff the value is zero."""
        n = self.rank
        for i, c in enumerate(self.coords):
            if c != 0:
                return n - i
        return 0

    def is_infinitesimal(self) -> bool:
        return self.magnitude() <= self.rank - 1

    def project_top(self, k: int) -> "LexValue":
        """Image in the quotient by the convex subgroup of magnitude <= n-k,
        i.e. the leading k coordinates."""
        if not 1 <= k <= self.rank:
            raise RankMismatchError(f"project_top: k={k} out of range for rank {self.rank}")
        return LexValue(self.coords[:k])

    # serialization ----------------------------------------------------------

    def to_json(self) -> list[str]:
        return [str(c) for c in self.coords]

    @staticmethod
    def from_json(data: Sequence) -> "LexValue":
        return LexValue(data)

    def __repr__(self) -> str:
        return "(" + ", ".join(str(c) for c in self.coords) + ")"


def lex_compare(a: LexValue, b: LexValue) -> int:
    """Lexicographic comparison: LT (-1), EQ (0), GT (1)."""
    a._check_rank(b)
    if a.coords < b.coords:
        return LT
    if a.coords == b.coords:
        return EQ
    return GT


def magnitude(a: LexValue) -> int:
    return a.magnitude()


def is_infinitesimal(a: LexValue) -> bool:
    return a.is_infinitesimal()


def scale(a: LexValue, q) -> LexValue:
    return a.scale(q)


def project_top(a: LexValue, k: int) -> LexValue:
    return a.project_top(k)
