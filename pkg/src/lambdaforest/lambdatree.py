"""Finite trees with lexicographic edge lengths: metric, geodesics, medians,
closed-subtree projection, axiom validation, subdivision, and the
kill-infinitesimals base change.

A tree is a finite connected acyclic graph whose edges carry strictly
positive LexValue lengths of a common rank.  Points are either vertices or
edge-interior points given by an exact offset from the canonical (smaller id)
endpoint.  Everything is immutable; operations return new trees.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .ordgroup import LexValue


def _id_key(v):
    # deterministic order across heterogeneous id types
    return (type(v).__name__, repr(v))


def _ekey(u, v) -> tuple:
    return (u, v) if _id_key(u) <= _id_key(v) else (v, u)


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class Vertex:
    id: object

    def __repr__(self):
        return f"Vertex({self.id!r})"


@dataclass(frozen=True)
class EdgeInterior:
    """Interior point of edge {u, v}; offset measured from u, the canonical
    (smaller id) anchor, with 0 < offset < length."""

    u: object
    v: object
    offset: LexValue

    def __repr__(self):
        return f"EdgeInterior({self.u!r}-{self.v!r} @ {self.offset!r})"


TreePoint = Vertex | EdgeInterior


class MetricTree:
    def __init__(self, vertices: Iterable, edges: Iterable[tuple], rank: int):
        """edges: iterable of (u, v, length) with length a LexValue."""
        self.rank = rank
        self.vertices = frozenset(vertices)
        if not self.vertices:
            raise TreeError("tree must have at least one vertex")
        self.edges: dict[tuple, LexValue] = {}
        self.adj: dict[object, list] = {v: [] for v in self.vertices}
        for u, v, ln in edges:
            if u not in self.vertices or v not in self.vertices:
                raise TreeError(f"edge endpoint not a vertex: {u!r}-{v!r}")
            if u == v:
                raise TreeError("loop edge")
            if not isinstance(ln, LexValue):
                raise TreeError("edge length must be a LexValue")
            if ln.rank != rank:
                raise TreeError(f"edge length rank {ln.rank} != tree rank {rank}")
            if not ln.is_positive():
                raise TreeError(f"edge length must be positive, got {ln!r}")
            k = _ekey(u, v)
            if k in self.edges:
                raise TreeError(f"duplicate edge {k!r}")
            self.edges[k] = ln
            self.adj[k[0]].append(k[1])
            self.adj[k[1]].append(k[0])
        if len(self.edges) != len(self.vertices) - 1:
            raise TreeError("not a tree: wrong edge count")
        # connectivity
        seen = set()
        stack = [next(iter(self.vertices))]
        while stack:
            w = stack.pop()
            if w in seen:
                continue
            seen.add(w)
            stack.extend(self.adj[w])
        if seen != self.vertices:
            raise TreeError("not connected")
        self._dist_cache: dict[object, dict] = {}

    # basic queries ----------------------------------------------------------

    def edge_length(self, u, v) -> LexValue:
        return self.edges[_ekey(u, v)]

    def has_edge(self, u, v) -> bool:
        return _ekey(u, v) in self.edges

    def vertex_dists(self, src) -> dict:
        if src not in self._dist_cache:
            dists = {src: LexValue.zero(self.rank)}
            stack = [src]
            while stack:
                w = stack.pop()
                for nb in self.adj[w]:
                    if nb not in dists:
                        dists[nb] = dists[w] + self.edge_length(w, nb)
                        stack.append(nb)
            self._dist_cache[src] = dists
        return self._dist_cache[src]

    def vertex_distance(self, u, v) -> LexValue:
        return self.vertex_dists(u)[v]

    def vertex_path(self, u, v) -> list:
        parent = {u: None}
        stack = [u]
        while stack:
            w = stack.pop()
            if w == v:
                break
            for nb in self.adj[w]:
                if nb not in parent:
                    parent[nb] = w
                    stack.append(nb)
        path = [v]
        while path[-1] != u:
            path.append(parent[path[-1]])
        path.reverse()
        return path

    def point(self, u, v, offset: LexValue) -> TreePoint:
        """Point on edge {u, v} at given offset from u, canonicalized."""
        ln = self.edge_length(u, v)
        zero = LexValue.zero(self.rank)
        if offset == zero:
            return Vertex(u)
        if offset == ln:
            return Vertex(v)
        if not (zero < offset < ln):
            raise TreeError(f"offset {offset!r} outside edge of length {ln!r}")
        cu, cv = _ekey(u, v)
        return EdgeInterior(cu, cv, offset if cu == u else ln - offset)

    def check_point(self, x: TreePoint) -> None:
        if isinstance(x, Vertex):
            if x.id not in self.vertices:
                raise TreeError(f"vertex {x.id!r} not in tree")
        else:
            if _ekey(x.u, x.v) not in self.edges:
                raise TreeError(f"edge {x.u!r}-{x.v!r} not in tree")
            ln = self.edge_length(x.u, x.v)
            zero = LexValue.zero(self.rank)
            if not (zero < x.offset < ln):
                raise TreeError(f"interior offset {x.offset!r} out of range")

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "vertices": sorted((str(v) for v in self.vertices)),
            "edges": [
                {"u": str(u), "v": str(v), "len": ln.to_json()}
                for (u, v), ln in sorted(self.edges.items(), key=lambda kv: _id_key(kv[0]))
            ],
        }

    @staticmethod
    def from_json(doc: dict) -> "MetricTree":
        rank = doc["rank"]
        return MetricTree(
            doc["vertices"],
            [(e["u"], e["v"], LexValue.from_json(e["len"])) for e in doc["edges"]],
            rank,
        )


# geodesics -------------------------------------------------------------------


@dataclass(frozen=True)
class Leg:
    """Directed portion of an edge: walk edge {u, v} (canonical order) from
    offset `a` to offset `b`, offsets measured from u."""

    u: object
    v: object
    a: LexValue
    b: LexValue

    def length(self) -> LexValue:
        return abs(self.b - self.a)


def _exit_endpoint(T: MetricTree, x: EdgeInterior, target_vertex) -> object:
    """Endpoint through which the geodesic from x to a vertex leaves x's edge."""
    ln = T.edge_length(x.u, x.v)
    du = x.offset + T.vertex_distance(x.u, target_vertex)
    dv = (ln - x.offset) + T.vertex_distance(x.v, target_vertex)
    return x.u if du < dv else x.v


def geodesic_legs(T: MetricTree, x: TreePoint, y: TreePoint) -> list[Leg]:
    T.check_point(x)
    T.check_point(y)
    if x == y:
        return []
    if (
        isinstance(x, EdgeInterior)
        and isinstance(y, EdgeInterior)
        and _ekey(x.u, x.v) == _ekey(y.u, y.v)
    ):
        return [Leg(x.u, x.v, x.offset, y.offset)]
    legs: list[Leg] = []
    # pick entry/exit vertices
    if isinstance(x, EdgeInterior):
        target = y.id if isinstance(y, Vertex) else y.u
        ex = _exit_endpoint(T, x, target)
        if isinstance(y, EdgeInterior):
            # exit choice must also account for y's two endpoints
            ln_x = T.edge_length(x.u, x.v)
            ln_y = T.edge_length(y.u, y.v)
            best = None
            for e, de in ((x.u, x.offset), (x.v, ln_x - x.offset)):
                for f, df in ((y.u, y.offset), (y.v, ln_y - y.offset)):
                    total = de + T.vertex_distance(e, f) + df
                    if best is None or total < best[0]:
                        best = (total, e, f)
            ex, entry = best[1], best[2]
        else:
            entry = y.id
        sx = ex
        cu, cv = _ekey(x.u, x.v)
        legs.append(Leg(cu, cv, x.offset, LexValue.zero(T.rank) if ex == cu else T.edge_length(cu, cv)))
    else:
        sx = x.id
        if isinstance(y, EdgeInterior):
            entry = _exit_endpoint(T, y, sx)
        else:
            entry = y.id
    path = T.vertex_path(sx, entry)
    for a, b in zip(path, path[1:]):
        cu, cv = _ekey(a, b)
        ln = T.edge_length(cu, cv)
        if a == cu:
            legs.append(Leg(cu, cv, LexValue.zero(T.rank), ln))
        else:
            legs.append(Leg(cu, cv, ln, LexValue.zero(T.rank)))
    if isinstance(y, EdgeInterior):
        cu, cv = _ekey(y.u, y.v)
        start = LexValue.zero(T.rank) if entry == cu else T.edge_length(cu, cv)
        legs.append(Leg(cu, cv, start, y.offset))
    return [l for l in legs if l.a != l.b]


def distance(T: MetricTree, x: TreePoint, y: TreePoint) -> LexValue:
    total = LexValue.zero(T.rank)
    for leg in geodesic_legs(T, x, y):
        total = total + leg.length()
    return total


def point_at(T: MetricTree, legs: list[Leg], s: LexValue) -> TreePoint:
    """Point at arclength s along a leg list (s from the start)."""
    zero = LexValue.zero(T.rank)
    if s < zero:
        raise TreeError("negative arclength")
    if not legs:
        if s.is_zero():
            raise TreeError("cannot locate a point on an empty geodesic")
        raise TreeError("arclength beyond geodesic end")
    acc = zero
    for leg in legs:
        ln = leg.length()
        if s <= acc + ln:
            r = s - acc
            off = leg.a + r if leg.b > leg.a else leg.a - r
            return T.point(leg.u, leg.v, off)
        acc = acc + ln
    raise TreeError("arclength beyond geodesic end")


def geodesic_start(T: MetricTree, legs: list[Leg]) -> TreePoint:
    leg = legs[0]
    return T.point(leg.u, leg.v, leg.a)


def median(T: MetricTree, x: TreePoint, y: TreePoint, z: TreePoint) -> TreePoint:
    """The unique point on all three pairwise geodesics (2Λ = Λ over Q^n, so
    the Gromov product is an exact point of the tree)."""
    dxy = distance(T, x, y)
    dxz = distance(T, x, z)
    dyz = distance(T, y, z)
    dxm = (dxy + dxz - dyz).half()
    if dxm.is_zero():
        return x
    return point_at(T, geodesic_legs(T, x, y), dxm)


# metric-table validation -------------------------------------------------------


@dataclass
class FiniteLambdaMetric:
    labels: list
    dist: list[list[LexValue]]
    rank: int

    @staticmethod
    def from_tree(T: MetricTree, points: Optional[list[TreePoint]] = None, labels=None) -> "FiniteLambdaMetric":
        if points is None:
            points = [Vertex(v) for v in sorted(T.vertices, key=_id_key)]
        if labels is None:
            labels = [repr(p) for p in points]
        table = [[distance(T, p, q) for q in points] for p in points]
        return FiniteLambdaMetric(labels, table, T.rank)

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "labels": list(self.labels),
            "dist": [[d.to_json() for d in row] for row in self.dist],
        }

    @staticmethod
    def from_json(doc: dict) -> "FiniteLambdaMetric":
        return FiniteLambdaMetric(
            doc["labels"],
            [[LexValue.from_json(d) for d in row] for row in doc["dist"]],
            doc["rank"],
        )


@dataclass
class ValidationResult:
    ok: bool
    kind: str = ""
    witness: tuple = ()
    note: str = "2L condition vacuous over Q^n (2L = L)"

    def __bool__(self):
        return self.ok


MAX_VALIDATION_POINTS = 32


def validate_tree_metric(M: FiniteLambdaMetric) -> ValidationResult:
    """Metric axioms, then the four-point 0-hyperbolicity inequality on every
    quadruple (exhaustive; point count capped)."""
    m = len(M.labels)
    if m > MAX_VALIDATION_POINTS:
        raise TreeError(f"validator capped at {MAX_VALIDATION_POINTS} points, got {m}")
    zero = LexValue.zero(M.rank)
    d = M.dist
    for i in range(m):
        if not d[i][i].is_zero():
            return ValidationResult(False, "nonzero-diagonal", (M.labels[i],))
        for j in range(m):
            if d[i][j] != d[j][i]:
                return ValidationResult(False, "asymmetry", (M.labels[i], M.labels[j]))
            if i != j and not d[i][j] > zero:
                return ValidationResult(False, "non-separation", (M.labels[i], M.labels[j]))
    for i, j, k in itertools.combinations(range(m), 3):
        for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
            if d[a][c] > d[a][b] + d[b][c]:
                return ValidationResult(
                    False, "triangle-inequality", (M.labels[a], M.labels[b], M.labels[c])
                )
    for i, j, k, l in itertools.combinations(range(m), 4):
        s1 = d[i][j] + d[k][l]
        s2 = d[i][k] + d[j][l]
        s3 = d[i][l] + d[j][k]
        sums = sorted([s1, s2, s3])
        if sums[2] > sums[1]:
            return ValidationResult(
                False, "four-point", (M.labels[i], M.labels[j], M.labels[k], M.labels[l])
            )
    return ValidationResult(True)


# closed subtrees ----------------------------------------------------------------


class SubtreeSpec:
    """Convex subset of a tree: a set of vertices plus closed clipped edge
    intervals (offsets from the canonical anchor, endpoints included).
    Half-open clips are unrepresentable, so every spec is a closed subtree."""

    def __init__(self, T: MetricTree, vertices: Iterable = (), intervals: dict | None = None):
        self.tree = T
        verts = set(vertices)
        ivals: dict[tuple, tuple[LexValue, LexValue]] = {}
        for (u, v), (lo, hi) in (intervals or {}).items():
            k = _ekey(u, v)
            ln = T.edges[k]
            if (u, v) != k:
                lo, hi = ln - hi, ln - lo
            zero = LexValue.zero(T.rank)
            if not (zero <= lo <= hi <= ln):
                raise TreeError("interval out of edge range")
            ivals[k] = (lo, hi)
            if lo == zero:
                verts.add(k[0])
            if hi == ln:
                verts.add(k[1])
        # a fully contained edge is an interval over its whole length
        for (u, v), ln in T.edges.items():
            if u in verts and v in verts and (u, v) not in ivals:
                ivals[(u, v)] = (LexValue.zero(T.rank), ln)
        for v in verts:
            if v not in T.vertices:
                raise TreeError(f"subtree vertex {v!r} not in tree")
        self.vertices = frozenset(verts)
        self.intervals = ivals
        if not self.vertices and not self.intervals:
            raise TreeError("empty subtree")

    def contains(self, x: TreePoint) -> bool:
        if isinstance(x, Vertex):
            return x.id in self.vertices
        k = _ekey(x.u, x.v)
        if k not in self.intervals:
            return False
        lo, hi = self.intervals[k]
        return lo <= x.offset <= hi

    def grid_points(self) -> list[TreePoint]:
        """Vertices plus interval endpoints: the finite skeleton of the spec."""
        pts: list[TreePoint] = [Vertex(v) for v in sorted(self.vertices, key=_id_key)]
        for (u, v), (lo, hi) in sorted(self.intervals.items(), key=lambda kv: _id_key(kv[0])):
            for off in (lo, hi):
                p = self.tree.point(u, v, off)
                if p not in pts:
                    pts.append(p)
        return pts

    def base_point(self) -> TreePoint:
        return self.grid_points()[0]

    def is_degenerate(self) -> bool:
        return len(self.grid_points()) <= 1

    def same_set(self, other: "SubtreeSpec") -> bool:
        return self.vertices == other.vertices and self.intervals == other.intervals

    @staticmethod
    def from_points(T: MetricTree, points: list[TreePoint]) -> "SubtreeSpec":
        """Convex hull of finitely many points."""
        if not points:
            raise TreeError("empty subtree")
        verts: set = set()
        ivals: dict[tuple, tuple[LexValue, LexValue]] = {}

        def add_interval(u, v, a, b):
            lo, hi = (a, b) if a <= b else (b, a)
            if (u, v) in ivals:
                plo, phi = ivals[(u, v)]
                lo, hi = min(lo, plo), max(hi, phi)
            ivals[(u, v)] = (lo, hi)

        for p in points:
            if isinstance(p, Vertex):
                verts.add(p.id)
            else:
                add_interval(p.u, p.v, p.offset, p.offset)
        for p, q in itertools.combinations(points, 2):
            for leg in geodesic_legs(T, p, q):
                add_interval(leg.u, leg.v, leg.a, leg.b)
        return SubtreeSpec(T, verts, ivals)


@dataclass
class SpecIntersection:
    points: list  # isolated intersection points
    intervals: dict  # shared non-degenerate edge intervals

    def is_empty(self) -> bool:
        return not self.points and not self.intervals

    def more_than_one_point(self) -> bool:
        return bool(self.intervals) or len(self.points) > 1

    def single_point(self):
        if not self.intervals and len(self.points) == 1:
            return self.points[0]
        return None


def intersect_specs(Y1: SubtreeSpec, Y2: SubtreeSpec) -> SpecIntersection:
    """Intersection of two closed subtrees of a common tree."""
    if Y1.tree is not Y2.tree:
        raise TreeError("subtrees of different trees")
    T = Y1.tree
    pts = {Vertex(v) for v in Y1.vertices & Y2.vertices}
    ivals = {}
    for k in set(Y1.intervals) & set(Y2.intervals):
        lo = max(Y1.intervals[k][0], Y2.intervals[k][0])
        hi = min(Y1.intervals[k][1], Y2.intervals[k][1])
        if lo < hi:
            ivals[k] = (lo, hi)
        elif lo == hi:
            pts.add(T.point(k[0], k[1], lo))
    # drop isolated points absorbed by an interval
    keep = []
    for p in sorted(pts, key=repr):
        absorbed = False
        for (u, v), (lo, hi) in ivals.items():
            if isinstance(p, EdgeInterior) and _ekey(p.u, p.v) == (u, v) and lo <= p.offset <= hi:
                absorbed = True
            if isinstance(p, Vertex) and (
                (p.id == u and lo.is_zero()) or (p.id == v and hi == T.edges[(u, v)])
            ):
                absorbed = True
        if not absorbed:
            keep.append(p)
    return SpecIntersection(keep, ivals)


def project_to_closed_subtree(T: MetricTree, Y: SubtreeSpec, x: TreePoint) -> TreePoint:
    """The unique p in Y with [y0, x] ∩ Y = [y0, p]; independent of y0."""
    if Y.contains(x):
        return x
    y0 = Y.base_point()
    legs = geodesic_legs(T, y0, x)
    cur = y0
    for leg in legs:
        end = T.point(leg.u, leg.v, leg.b)
        if Y.contains(end):
            cur = end
            continue
        k = (leg.u, leg.v)
        if k not in Y.intervals:
            return cur
        lo, hi = Y.intervals[k]
        cut = min(leg.b, hi) if leg.b > leg.a else max(leg.b, lo)
        return T.point(leg.u, leg.v, cut)
    return cur


# tree surgery -------------------------------------------------------------------


def subdivide(T: MetricTree, x: TreePoint, new_id=None):
    """Make x a vertex; returns (tree, vertex id).  Identity on vertices."""
    if isinstance(x, Vertex):
        return T, x.id
    T.check_point(x)
    if new_id is None:
        new_id = ("sub", x.u, x.v, tuple(str(c) for c in x.offset.coords))
    if new_id in T.vertices:
        raise TreeError(f"subdivision id {new_id!r} already present")
    k = _ekey(x.u, x.v)
    ln = T.edges[k]
    edges = [(u, v, l) for (u, v), l in T.edges.items() if (u, v) != k]
    edges.append((k[0], new_id, x.offset))
    edges.append((new_id, k[1], ln - x.offset))
    return MetricTree(T.vertices | {new_id}, edges, T.rank), new_id


def kill_infinitesimals(T: MetricTree):
    """Contract every infinitesimal edge, project lengths to the leading
    coordinate; returns (rank-1 tree, vertex -> class representative map)."""
    if T.rank < 2:
        raise TreeError("kill_infinitesimals needs rank >= 2")
    parent = {v: v for v in T.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for (u, v), ln in T.edges.items():
        if ln.is_infinitesimal():
            ru, rv = find(u), find(v)
            if ru != rv:
                a, b = sorted((ru, rv), key=_id_key)
                parent[b] = a
    vmap = {v: find(v) for v in T.vertices}
    new_vertices = set(vmap.values())
    new_edges = []
    for (u, v), ln in T.edges.items():
        if not ln.is_infinitesimal():
            new_edges.append((vmap[u], vmap[v], ln.project_top(1)))
    return MetricTree(new_vertices, new_edges, 1), vmap


def embed_scalars(T: MetricTree) -> MetricTree:
    """Re-type a tree with integral lengths into the divisible context Q^n.
    Identity on data: lengths are already stored as exact rationals, so all
    midpoints exist after the (formal) base change."""
    for ln in T.edges.values():
        for c in ln.coords:
            if not isinstance(c, Fraction) or c.denominator != 1:
                raise TreeError("embed_scalars expects integral edge lengths")
    return T
