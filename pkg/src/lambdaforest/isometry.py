"""Partial isometries of tree windows, isometry classification via the
midpoint method, axis samples, and exhaustive free-action certification on
word balls.

Windows make everything partial: any operation that would need points
outside the window returns an explicit OutOfWindow / Inconclusive value
instead of silently extending the tree.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .lambdatree import (
    MetricTree,
    SubtreeSpec,
    TreePoint,
    Vertex,
    EdgeInterior,
    distance,
    geodesic_legs,
    intersect_specs,
    point_at,
    project_to_closed_subtree,
)

Letter = tuple[str, int]
from .ordgroup import LexValue
from .groups import Word, free_reduce, invert, parse_word, word_str


class IsometryError(ValueError):
    pass


@dataclass(frozen=True)
class OutOfWindow:
    prefix: Word

    def __bool__(self):
        return False


class PartialIsometry:
    """Distance-preserving partial map given by vertex images; edge interiors
    map affinely along the geodesic between endpoint images."""

    def __init__(self, window: MetricTree, vertex_map: dict):
        self.window = window
        self.vertex_map = dict(vertex_map)
        for v in self.vertex_map:
            if v not in window.vertices:
                raise IsometryError(f"domain vertex {v!r} not in window")
        for v, img in self.vertex_map.items():
            window.check_point(img)
        for a, b in itertools.combinations(sorted(self.vertex_map, key=repr), 2):
            if distance(window, Vertex(a), Vertex(b)) != distance(
                window, self.vertex_map[a], self.vertex_map[b]
            ):
                raise IsometryError(f"not distance-preserving on pair ({a!r}, {b!r})")

    def defined_at(self, x: TreePoint) -> bool:
        if isinstance(x, Vertex):
            return x.id in self.vertex_map
        return x.u in self.vertex_map and x.v in self.vertex_map

    def apply(self, x: TreePoint) -> TreePoint:
        if isinstance(x, Vertex):
            return self.vertex_map[x.id]
        fu = self.vertex_map[x.u]
        fv = self.vertex_map[x.v]
        legs = geodesic_legs(self.window, fu, fv)
        return point_at(self.window, legs, x.offset)

    def inverse(self) -> "PartialIsometry":
        inv = {}
        for v, img in self.vertex_map.items():
            if not isinstance(img, Vertex):
                raise IsometryError(
                    "inverse needs vertex images; subdivide the window first"
                )
            inv[img.id] = Vertex(v)
        return PartialIsometry(self.window, inv)


class ActionWindow:
    """A tree window with labeled generator isometries, closed under formal
    inverses (label' acts by the inverse map)."""

    def __init__(self, window: MetricTree, generators: dict[str, PartialIsometry]):
        self.window = window
        self.generators: dict[tuple[str, int], PartialIsometry] = {}
        for label, g in generators.items():
            if g.window is not window:
                raise IsometryError("generator defined on a different window")
            ginv = g.inverse()
            self.generators[(label, 1)] = g
            self.generators[(label, -1)] = ginv
            # inverse composes to identity on the common domain
            for v in g.vertex_map:
                img = g.vertex_map[v]
                if isinstance(img, Vertex) and ginv.defined_at(img):
                    if ginv.apply(img) != Vertex(v):
                        raise IsometryError(f"inverse of {label!r} is not inverse at {v!r}")
        self.labels = tuple(sorted(generators))

    def apply_word(self, w: Word, x: TreePoint):
        """Left-to-right composition; OutOfWindow carries the first failing
        prefix."""
        cur = x
        done: list = []
        for letter in w:
            if (letter[0], 1) not in self.generators:
                raise IsometryError(f"unknown generator label {letter[0]!r}")
            g = self.generators[letter]
            done.append(letter)
            if not g.defined_at(cur):
                return OutOfWindow(tuple(done))
            cur = g.apply(cur)
        return cur


@dataclass(frozen=True)
class Elliptic:
    fixed_point: TreePoint


@dataclass(frozen=True)
class Hyperbolic:
    length: LexValue
    axis_sample: tuple[TreePoint, TreePoint]


@dataclass(frozen=True)
class Inconclusive:
    reason: str

    def __bool__(self):
        return False


IsomClass = Elliptic | Hyperbolic | Inconclusive


def classify(A: ActionWindow, w: Word, x: TreePoint):
    """Single midpoint step: m = midpoint of [x, w.x] lies in the
    characteristic set, so d(m, w.m) is exactly 0 (elliptic) or the
    translation length (hyperbolic).  No inversion branch exists over Q^n."""
    wx = A.apply_word(w, x)
    if isinstance(wx, OutOfWindow):
        return wx
    T = A.window
    d = distance(T, x, wx)
    if d.is_zero():
        return Elliptic(x)
    m = point_at(T, geodesic_legs(T, x, wx), d.half())
    wm = A.apply_word(w, m)
    if isinstance(wm, OutOfWindow):
        return Inconclusive(f"midpoint image leaves window at prefix {word_str(wm.prefix)}")
    l = distance(T, m, wm)
    if l.is_zero():
        return Elliptic(m)
    return Hyperbolic(l, (m, wm))


def axis_sample(A: ActionWindow, w: Word, x: TreePoint, k: int):
    """Segment [w^-k.m, w^k.m] through the midpoint m, verified linear."""
    cls = classify(A, w, x)
    if not isinstance(cls, Hyperbolic):
        return Inconclusive("not classified hyperbolic")
    m = cls.axis_sample[0]
    pts = []
    for j in range(-k, k + 1):
        word_j = _power_word(w, j)
        img = A.apply_word(word_j, m)
        if isinstance(img, OutOfWindow):
            return Inconclusive(f"w^{j}.m leaves window")
        pts.append(img)
    T = A.window
    for a, b, c in zip(pts, pts[1:], pts[2:]):
        if distance(T, a, b) + distance(T, b, c) != distance(T, a, c):
            raise IsometryError("axis sample not aligned: generator is not an isometry")
    return (pts[0], pts[-1])


def _power_word(w: Word, k: int) -> Word:
    if k >= 0:
        return free_reduce(w * k)
    return free_reduce(invert(w) * (-k))


def same_axis_test(A: ActionWindow, w1: Word, w2: Word, x: TreePoint, k: int = 2):
    """Compare axis samples on their overlap.  SameOnOverlap is necessary
    evidence for commutation; DifferentAxes (branching samples) is conclusive
    non-commutation under a free action."""
    s1 = s2 = None
    for kk in range(k, 0, -1):
        s1 = axis_sample(A, w1, x, kk)
        s2 = axis_sample(A, w2, x, kk)
        if not isinstance(s1, Inconclusive) and not isinstance(s2, Inconclusive):
            break
    if isinstance(s1, Inconclusive) or isinstance(s2, Inconclusive):
        return "Inconclusive"
    T = A.window
    endpoints = [s1[0], s1[1], s2[0], s2[1]]
    # the samples lie on one line iff some endpoint pair dominates all others
    aligned = False
    for p, q in itertools.combinations(endpoints, 2):
        dpq = distance(T, p, q)
        if all(distance(T, p, r) + distance(T, r, q) == dpq for r in endpoints):
            aligned = True
            break
    if not aligned:
        return "DifferentAxes"
    seg1 = SubtreeSpec.from_points(T, list(s1))
    seg2 = SubtreeSpec.from_points(T, list(s2))
    inter = intersect_specs(seg1, seg2)
    if inter.more_than_one_point():
        return "SameOnOverlap"
    # collinear but (nearly) disjoint samples: the window is too small to see
    # whether the axes coincide
    return "Inconclusive"


# ball certification -------------------------------------------------------------


@dataclass
class Certificate:
    ball_radius: int
    words_checked: int
    relations: list[str]
    min_positive_length: Optional[LexValue]
    status: str = "free-on-ball"
    counterexample: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        doc = {
            "N": self.ball_radius,
            "words_checked": self.words_checked,
            "relations": self.relations,
            "min_positive_length": self.min_positive_length.to_json()
            if self.min_positive_length is not None
            else None,
            "status": self.status,
            "counterexample": self.counterexample,
        }
        doc.update(self.extra)
        return doc


class CertificationAborted(RuntimeError):
    def __init__(self, word: Word, reason: str):
        self.word = word
        self.reason = reason
        super().__init__(f"oracle inconclusive on {word_str(word)}: {reason}")


def reduced_words(labels: Iterable[str], max_len: int):
    """All nonempty freely reduced words of length <= max_len, shortest first,
    lexicographic within a length."""
    alphabet: list[Letter] = []
    for l in sorted(labels):
        alphabet.append((l, 1))
        alphabet.append((l, -1))
    frontier: list[Word] = [()]
    for _ in range(max_len):
        new = []
        for w in frontier:
            for letter in alphabet:
                if w and w[-1][0] == letter[0] and w[-1][1] == -letter[1]:
                    continue
                new.append(w + (letter,))
        frontier = new
        yield from frontier


def certify_free_on_ball(
    length_oracle: Callable[[Word], LexValue | Inconclusive],
    triviality_oracle: Callable[[Word], bool],
    labels: Iterable[str],
    ball_radius: int,
) -> Certificate:
    """Exhaustively check all freely reduced words of length <= N: each is
    either a relation (trivial per oracle) or has positive translation
    length.  A nontrivial word with zero length is a counterexample.

    Inverse pruning: l(w) = l(w^-1), so only the length-lex smaller of each
    inverse pair is evaluated."""
    relations: list[str] = []
    min_pos: Optional[LexValue] = None
    checked = 0
    for w in reduced_words(labels, ball_radius):
        checked += 1
        if invert(w) < w:
            continue
        if triviality_oracle(w):
            relations.append(word_str(w))
            continue
        l = length_oracle(w)
        if isinstance(l, Inconclusive):
            raise CertificationAborted(w, l.reason)
        if l.is_zero():
            return Certificate(
                ball_radius,
                checked,
                relations,
                min_pos,
                status="counterexample",
                counterexample=word_str(w),
            )
        if min_pos is None or l < min_pos:
            min_pos = l
    return Certificate(ball_radius, checked, relations, min_pos)


def window_length_oracle(A: ActionWindow, basepoint: TreePoint):
    """Translation-length oracle backed by the midpoint method on a window."""

    def length(w: Word):
        cls = classify(A, w, basepoint)
        if isinstance(cls, OutOfWindow):
            return Inconclusive(f"word leaves window at prefix {word_str(cls.prefix)}")
        if isinstance(cls, Inconclusive):
            return cls
        if isinstance(cls, Elliptic):
            return LexValue.zero(A.window.rank)
        return cls.length

    return length
