"""Words over generator alphabets, free-group utilities, Britton reduction
for HNN presets, word-problem oracles, and Betti numbers via Smith normal
form.

A word is a tuple of (label, exponent) letters with exponent +1 or -1.  The
string form uses a trailing apostrophe for inverses: "ab'a" = a b^-1 a.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import gcd
from typing import Optional, Sequence

Letter = tuple[str, int]
Word = tuple[Letter, ...]


class WordError(ValueError):
    pass


def parse_word(s: str, alphabet: Optional[Sequence[str]] = None) -> Word:
    letters: list[Letter] = []
    i = 0
    while i < len(s):
        c = s[i]
        if c in " .":
            i += 1
            continue
        e = 1
        if i + 1 < len(s) and s[i + 1] == "'":
            e = -1
            i += 1
        if alphabet is not None and c not in alphabet:
            raise WordError(f"letter {c!r} not in alphabet {alphabet}")
        letters.append((c, e))
        i += 1
    return tuple(letters)


def word_str(w: Word) -> str:
    return "".join(l + ("'" if e < 0 else "") for l, e in w)


def free_reduce(w: Word) -> Word:
    out: list[Letter] = []
    for l, e in w:
        if out and out[-1][0] == l and out[-1][1] == -e:
            out.pop()
        else:
            out.append((l, e))
    return tuple(out)


def invert(w: Word) -> Word:
    return tuple((l, -e) for l, e in reversed(w))


def concat(*ws: Word) -> Word:
    return free_reduce(tuple(itertools.chain.from_iterable(ws)))


def power(w: Word, k: int) -> Word:
    if k < 0:
        return power(invert(w), -k)
    return free_reduce(w * k)


def exponent_vector(w: Word, alphabet: Sequence[str]) -> tuple[int, ...]:
    counts = dict.fromkeys(alphabet, 0)
    for l, e in w:
        if l not in counts:
            raise WordError(f"letter {l!r} outside alphabet")
        counts[l] += e
    return tuple(counts[a] for a in alphabet)


def cyclic_reduce(w: Word) -> tuple[Word, Word]:
    """Return (core, conjugator) with w = conjugator * core * conjugator^-1
    and core cyclically reduced."""
    w = free_reduce(w)
    conj: list[Letter] = []
    while len(w) >= 2 and w[0][0] == w[-1][0] and w[0][1] == -w[-1][1]:
        conj.append(w[0])
        w = w[1:-1]
    return w, tuple(conj)


def primitive_root(w: Word) -> tuple[Word, int]:
    """Maximal-exponent decomposition w = root^k via cyclic reduction and
    period detection on the cyclic core."""
    w = free_reduce(w)
    if not w:
        raise WordError("primitive root of the trivial word is undefined")
    core, conj = cyclic_reduce(w)
    n = len(core)
    for p in range(1, n + 1):
        if n % p == 0 and core == core[:p] * (n // p):
            root = concat(conj, core[:p], invert(conj))
            return root, n // p
    raise AssertionError("unreachable")


def roots_agree(a: Word, b: Word) -> Optional[int]:
    """If <a> and <b> share a cyclic overgroup in a free group, return +1
    when root(a) = root(b), -1 when root(a) = root(b)^-1, else None."""
    ra, _ = primitive_root(a)
    rb, _ = primitive_root(b)
    if ra == rb:
        return 1
    if ra == invert(rb):
        return -1
    return None


def cyclic_word(w: Word) -> Word:
    core, _ = cyclic_reduce(w)
    return core


def conjugate_in_free(u: Word, w: Word) -> bool:
    """Conjugacy in a free group: equal cyclic reductions up to rotation."""
    cu = cyclic_word(u)
    cw = cyclic_word(w)
    if len(cu) != len(cw):
        return False
    if not cu:
        return True
    return any(cw[i:] + cw[:i] == cu for i in range(len(cw)))


def power_of(w: Word, base: Word) -> Optional[int]:
    """Return k with w = base^k in the free group, or None. base nontrivial."""
    w = free_reduce(w)
    if not w:
        return 0
    rb, eb = primitive_root(base)
    rw, ew = primitive_root(w)
    if rw == rb:
        k, rem = divmod(ew, eb)
        return k if rem == 0 else None
    if rw == invert(rb):
        k, rem = divmod(ew, eb)
        return -k if rem == 0 else None
    return None


# HNN presets and Britton reduction ------------------------------------------------


@dataclass(frozen=True)
class HNNPreset:
    """HNN extension of a free group with one stable letter and relation
    t u t^-1 = v."""

    base_letters: tuple[str, ...]
    stable: str
    u: Word
    v: Word

    def __post_init__(self):
        for w, name in ((self.u, "u"), (self.v, "v")):
            if not free_reduce(w):
                raise WordError(f"{name} must be nontrivial")
            if primitive_root(w)[1] != 1:
                raise WordError(f"{name} must not be a proper power")
        if self.stable in self.base_letters:
            raise WordError("stable letter clashes with base alphabet")

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.base_letters + (self.stable,)


def britton_reduce(h: HNNPreset, w: Word) -> Word:
    """Repeatedly replace pinches t x t^-1 (x in <u>) by v^k and
    t^-1 x t (x in <v>) by u^k; empty result iff w = 1 (Britton's lemma)."""
    w = free_reduce(w)
    t = h.stable
    while True:
        positions = [i for i, (l, _) in enumerate(w) if l == t]
        done = True
        for a, b in zip(positions, positions[1:]):
            ea, eb = w[a][1], w[b][1]
            if ea != -eb:
                continue
            mid = free_reduce(w[a + 1 : b])
            if any(l == t for l, _ in mid):
                continue
            sub = h.u if ea == 1 else h.v
            rep = h.v if ea == 1 else h.u
            k = power_of(mid, sub)
            if k is None:
                continue
            w = free_reduce(w[:a] + power(rep, k) + w[b + 1 :])
            done = False
            break
        if done:
            return w


# word-problem oracles --------------------------------------------------------------


@dataclass(frozen=True)
class FreeGroupOracle:
    letters: tuple[str, ...]

    def is_trivial(self, w: Word) -> bool:
        return not free_reduce(w)


@dataclass(frozen=True)
class FreeAbelianOracle:
    letters: tuple[str, ...]

    def is_trivial(self, w: Word) -> bool:
        return all(c == 0 for c in exponent_vector(w, self.letters))


@dataclass(frozen=True)
class HNNOracle:
    preset: HNNPreset

    @property
    def letters(self) -> tuple[str, ...]:
        return self.preset.alphabet

    def is_trivial(self, w: Word) -> bool:
        return not britton_reduce(self.preset, w)


@dataclass(frozen=True)
class DirectSumCyclicOracle:
    """Z/N (first letter) plus a free-abelian part (remaining letters)."""

    torsion_order: int
    letters: tuple[str, ...]

    def is_trivial(self, w: Word) -> bool:
        vec = exponent_vector(w, self.letters)
        return vec[0] % self.torsion_order == 0 and all(c == 0 for c in vec[1:])


class MatrixGroupOracle:
    """Exact identity test on products of generator matrices (see bruhat)."""

    def __init__(self, generators: dict):
        self.generators = dict(generators)
        self.letters = tuple(sorted(self.generators))
        some = next(iter(self.generators.values()))
        self._identity = some.identity_like()

    def product(self, w: Word):
        m = self._identity
        for l, e in w:
            if l not in self.generators:
                raise WordError(f"unknown generator {l!r}")
            g = self.generators[l]
            m = m * (g if e == 1 else g.inverse())
        return m

    def is_trivial(self, w: Word) -> bool:
        return self.product(w) == self._identity


# abelianization -----------------------------------------------------------------


@dataclass(frozen=True)
class FinitePresentation:
    generators: tuple[str, ...]
    relators: tuple[Word, ...]

    def __post_init__(self):
        for r in self.relators:
            if free_reduce(r) != r:
                raise WordError("relators must be freely reduced")

    @staticmethod
    def from_json(doc: dict) -> "FinitePresentation":
        gens = tuple(doc["generators"])
        rels = tuple(free_reduce(parse_word(r, gens)) for r in doc["relators"])
        return FinitePresentation(gens, rels)

    def to_json(self) -> dict:
        return {"generators": list(self.generators), "relators": [word_str(r) for r in self.relators]}


def smith_normal_form(matrix: list[list[int]]) -> list[int]:
    """Invariant factors of an integer matrix (exact, no modular shortcuts)."""
    m = [row[:] for row in matrix]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    factors = []
    r = 0
    while r < min(rows, cols):
        # find a pivot
        pivot = None
        for i in range(r, rows):
            for j in range(r, cols):
                if m[i][j] != 0:
                    if pivot is None or abs(m[i][j]) < abs(m[pivot[0]][pivot[1]]):
                        pivot = (i, j)
        if pivot is None:
            break
        i, j = pivot
        m[r], m[i] = m[i], m[r]
        for row in m:
            row[r], row[j] = row[j], row[r]
        again = False
        for i in range(r + 1, rows):
            q = m[i][r] // m[r][r]
            if q:
                for j in range(r, cols):
                    m[i][j] -= q * m[r][j]
            if m[i][r] != 0:
                again = True
        for j in range(r + 1, cols):
            q = m[r][j] // m[r][r]
            if q:
                for i in range(r, rows):
                    m[i][j] -= q * m[i][r]
            if m[r][j] != 0:
                again = True
        if again:
            continue
        factors.append(abs(m[r][r]))
        r += 1
    # enforce successive divisibility
    changed = True
    while changed:
        changed = False
        for i in range(len(factors) - 1):
            a, b = factors[i], factors[i + 1]
            if b % a != 0:
                g = gcd(a, b)
                factors[i], factors[i + 1] = g, a * b // g
                changed = True
        factors.sort()
    return factors


def betti1(p: FinitePresentation) -> int:
    """Free rank of the abelianization: #generators - rank of the relation
    exponent matrix over Z."""
    if not p.relators:
        return len(p.generators)
    matrix = [list(exponent_vector(r, p.generators)) for r in p.relators]
    factors = smith_normal_form(matrix)
    rank = sum(1 for f in factors if f != 0)
    return len(p.generators) - rank


def rational_rank(matrix: list[list]) -> int:
    """Row rank over Q by Gaussian elimination (independent oracle for betti1)."""
    from fractions import Fraction

    m = [[Fraction(x) for x in row] for row in matrix]
    rank = 0
    cols = len(m[0]) if m else 0
    for j in range(cols):
        pivot = next((i for i in range(rank, len(m)) if m[i][j] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][j] != 0:
                f = m[i][j] / m[rank][j]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank
