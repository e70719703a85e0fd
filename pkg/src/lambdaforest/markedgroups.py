"""Marked groups at desk scale: relation balls, ball comparison with first
divergent witness, and convergence profiles for parameterized families.

A marking is an ordered tuple of words in the oracle's alphabet; relation
words are written in abstract marking letters x1..xn (single characters
supplied by the caller).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .groups import Word, WordError, concat, free_reduce, invert, word_str


class BudgetExceeded(RuntimeError):
    pass


# enumeration budget: n * (2n-1)^(R-1) words must stay at desk scale
MAX_WORDS = 300_000


@dataclass(frozen=True)
class MarkedGroup:
    oracle: object
    marking: tuple[Word, ...]
    letters: tuple[str, ...]  # abstract marking letters, one per marking word

    def __post_init__(self):
        if len(self.marking) != len(self.letters):
            raise WordError("one abstract letter per marking word")
        for w in self.marking:
            for l, _e in w:
                if l not in self.oracle.letters:
                    raise WordError(f"marking word uses {l!r} outside the oracle alphabet")

    @property
    def n(self) -> int:
        return len(self.marking)

    def substitute(self, w: Word) -> Word:
        out: Word = ()
        table = dict(zip(self.letters, self.marking))
        for l, e in w:
            if l not in table:
                raise WordError(f"unknown marking letter {l!r}")
            out = out + (table[l] if e == 1 else invert(table[l]))
        return free_reduce(out)

    def is_relation(self, w: Word) -> bool:
        return self.oracle.is_trivial(self.substitute(w))


@dataclass(frozen=True)
class RelationBall:
    radius: int
    words: tuple[Word, ...]  # sorted length-lexicographically

    def __contains__(self, w: Word) -> bool:
        return free_reduce(w) in self.words


def _ball_words(letters: Sequence[str], R: int):
    count = 0
    n = len(letters)
    alphabet = []
    for l in letters:
        alphabet.append((l, 1))
        alphabet.append((l, -1))
    frontier: list[Word] = [()]
    for _ in range(R):
        new = []
        for w in frontier:
            for a in alphabet:
                if w and w[-1][0] == a[0] and w[-1][1] == -a[1]:
                    continue
                new.append(w + (a,))
                count += 1
                if count > MAX_WORDS:
                    raise BudgetExceeded(
                        f"ball enumeration exceeds {MAX_WORDS} words "
                        f"(n = {n}, R = {R})"
                    )
        frontier = new
        yield from frontier


def relations_up_to(M: MarkedGroup, R: int) -> RelationBall:
    if R < 0:
        raise WordError("radius must be nonnegative")
    rels = [w for w in _ball_words(M.letters, R) if M.is_relation(w)]
    rels.sort(key=lambda w: (len(w), word_str(w)))
    return RelationBall(R, tuple(rels))


def same_ball(M1: MarkedGroup, M2: MarkedGroup, R: int):
    """(equal?, first divergent relation or None), witness length-lex first
    in the symmetric difference."""
    if M1.n != M2.n or M1.letters != M2.letters:
        raise WordError("markings must share the abstract alphabet")
    for w in _ball_words(M1.letters, R):
        if M1.is_relation(w) != M2.is_relation(w):
            return False, w
    return True, None


def convergence_profile(
    family: Callable[[int], MarkedGroup],
    target: MarkedGroup,
    r_max: int,
    index_budget: int = 32,
) -> list[tuple[int, Optional[int]]]:
    """For each radius R <= r_max, the least index i with
    same_ball(family(i), target, R); None marks no agreement in budget."""
    table = []
    for R in range(1, r_max + 1):
        found = None
        for i in range(1, index_budget + 1):
            eq, _w = same_ball(family(i), target, R)
            if eq:
                found = i
                break
        table.append((R, found))
    return table


def marked_group_from_json(doc: dict) -> MarkedGroup:
    from .groups import FreeAbelianOracle, FreeGroupOracle, parse_word

    gdoc = doc["group"]
    if gdoc["kind"] == "free":
        oracle = FreeGroupOracle(tuple(gdoc["letters"]))
    elif gdoc["kind"] == "free-abelian":
        oracle = FreeAbelianOracle(tuple(gdoc["letters"]))
    else:
        raise WordError(f"unsupported marked-group oracle {gdoc['kind']!r}")
    marking = tuple(parse_word(w, oracle.letters) for w in doc["marking"])
    return MarkedGroup(oracle, marking, tuple(doc["letters"]))


def marked_group_to_json(M: MarkedGroup) -> dict:
    from .groups import FreeAbelianOracle, FreeGroupOracle

    if isinstance(M.oracle, FreeGroupOracle):
        kind = "free"
    elif isinstance(M.oracle, FreeAbelianOracle):
        kind = "free-abelian"
    else:
        raise WordError("only free and free-abelian oracles serialize")
    return {
        "group": {"kind": kind, "letters": list(M.oracle.letters)},
        "marking": [word_str(w) for w in M.marking],
        "letters": list(M.letters),
    }


def profile_text(table: list[tuple[int, Optional[int]]]) -> str:
    lines = ["R   least index"]
    for R, i in table:
        lines.append(f"{R:<3} {i if i is not None else 'inf'}")
    return "\n".join(lines)
