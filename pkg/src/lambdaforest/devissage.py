"""Verifier for graph-of-groups decompositions with cyclic edges and
abelian / surface / infinitesimal vertex types: structural clauses, bounded
acylindricity of the Bass-Serre tree, Betti-number inequalities, and the
principal-splitting case analysis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Optional, Union

from .groups import (
    FinitePresentation,
    FreeAbelianOracle,
    FreeGroupOracle,
    Word,
    WordError,
    betti1,
    conjugate_in_free,
    exponent_vector,
    free_reduce,
    invert,
    parse_word,
    power_of,
    primitive_root,
    word_str,
)


class DevissageError(ValueError):
    pass


# vertex group descriptors -----------------------------------------------------------


@dataclass(frozen=True)
class FreeGroup:
    letters: tuple[str, ...]

    @property
    def b1(self) -> int:
        return len(self.letters)


@dataclass(frozen=True)
class FreeAbelian:
    letters: tuple[str, ...]

    @property
    def b1(self) -> int:
        return len(self.letters)


@dataclass(frozen=True)
class CyclicBySum:
    """N + Z^k with a marked cyclic summand generated by `n_letter`."""

    n_letter: str
    extra_letters: tuple[str, ...]

    @property
    def letters(self) -> tuple[str, ...]:
        return (self.n_letter,) + self.extra_letters

    @property
    def b1(self) -> int:
        return 1 + len(self.extra_letters)


@dataclass(frozen=True)
class SurfaceWithBoundary:
    """Surface with boundary: free fundamental group plus designated boundary
    words; an optional closed-case relator covers edgeless closed-surface
    vertices."""

    letters: tuple[str, ...]
    boundaries: tuple[Word, ...]
    closed_relator: Optional[Word] = None

    def __post_init__(self):
        seen = []
        for b in self.boundaries:
            r = free_reduce(b)
            if not r:
                raise DevissageError("trivial boundary word")
            core, conj = _cyc(r)
            if core != r or conj:
                raise DevissageError(f"boundary word {word_str(b)} not cyclically reduced")
            if r in seen or invert(r) in seen:
                raise DevissageError("boundary words must be independent as listed")
            seen.append(r)

    @property
    def b1(self) -> int:
        if self.closed_relator is None:
            return len(self.letters)
        pres = FinitePresentation(self.letters, (free_reduce(self.closed_relator),))
        return betti1(pres)


def _cyc(w: Word):
    from .groups import cyclic_reduce

    return cyclic_reduce(w)


@dataclass(frozen=True)
class Preset:
    """Vertex group given by an external oracle plus a freeness certificate
    reference; only triviality queries are available."""

    oracle: object
    certificate: Optional[str] = None
    b1_declared: Optional[int] = None

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(self.oracle.letters)

    @property
    def b1(self) -> int:
        if self.b1_declared is None:
            raise DevissageError("preset vertex group without a declared Betti number")
        return self.b1_declared


Descriptor = Union[FreeGroup, FreeAbelian, CyclicBySum, SurfaceWithBoundary, Preset]


def _oracle(desc: Descriptor):
    if isinstance(desc, FreeGroup):
        return FreeGroupOracle(desc.letters)
    if isinstance(desc, (FreeAbelian, CyclicBySum)):
        return FreeAbelianOracle(desc.letters)
    if isinstance(desc, SurfaceWithBoundary):
        # boundary words live in the free group; the closed relator only
        # affects b1, never the nontriviality checks used here
        return FreeGroupOracle(desc.letters)
    return desc.oracle


# the graph ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GGVertex:
    id: str
    vtype: str  # abelian | surface | infinitesimal
    desc: Descriptor
    attestation: Optional[str] = None


@dataclass(frozen=True)
class GGEdge:
    u: str
    v: str
    image_u: Word
    image_v: Word


class GraphOfGroups:
    def __init__(self, vertices: list[GGVertex], edges: list[GGEdge]):
        self.vertices = {v.id: v for v in vertices}
        if len(self.vertices) != len(vertices):
            raise DevissageError("duplicate vertex id")
        self.edges = list(edges)
        for e in self.edges:
            for end, img in ((e.u, e.image_u), (e.v, e.image_v)):
                if end not in self.vertices:
                    raise DevissageError(f"edge endpoint {end!r} missing")
                o = _oracle(self.vertices[end].desc)
                if o.is_trivial(img):
                    raise DevissageError(
                        f"edge image {word_str(img)} trivial in vertex {end!r}"
                    )

    def incident(self, vid: str) -> list[tuple[GGEdge, Word]]:
        """(edge, image word at this vertex); loops contribute twice."""
        out = []
        for e in self.edges:
            if e.u == vid:
                out.append((e, e.image_u))
            if e.v == vid:
                out.append((e, e.image_v))
        return out

    def connected(self) -> bool:
        if not self.vertices:
            return True
        seen = set()
        stack = [next(iter(self.vertices))]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            for e in self.edges:
                if e.u == v:
                    stack.append(e.v)
                if e.v == v:
                    stack.append(e.u)
        return seen == set(self.vertices)

    @staticmethod
    def from_json(doc: dict) -> "GraphOfGroups":
        verts = []
        for vd in doc["vertices"]:
            verts.append(
                GGVertex(
                    vd["id"],
                    vd["type"],
                    descriptor_from_json(vd["group"]),
                    vd.get("attestation"),
                )
            )
        by_id = {v.id: v for v in verts}
        edges = []
        for ed in doc["edges"]:
            edges.append(
                GGEdge(
                    ed["u"],
                    ed["v"],
                    parse_word(ed["image_u"], by_id[ed["u"]].desc.letters),
                    parse_word(ed["image_v"], by_id[ed["v"]].desc.letters),
                )
            )
        return GraphOfGroups(verts, edges)

    def to_json(self) -> dict:
        return {
            "vertices": [
                {
                    "id": v.id,
                    "type": v.vtype,
                    "group": descriptor_to_json(v.desc),
                    **({"attestation": v.attestation} if v.attestation else {}),
                }
                for v in self.vertices.values()
            ],
            "edges": [
                {
                    "u": e.u,
                    "v": e.v,
                    "image_u": word_str(e.image_u),
                    "image_v": word_str(e.image_v),
                }
                for e in self.edges
            ],
        }


def descriptor_from_json(doc: dict) -> Descriptor:
    kind = doc["kind"]
    if kind == "free":
        return FreeGroup(tuple(doc["letters"]))
    if kind == "free-abelian":
        return FreeAbelian(tuple(doc["letters"]))
    if kind == "cyclic-by-sum":
        return CyclicBySum(doc["n_letter"], tuple(doc["extra_letters"]))
    if kind == "surface-with-boundary":
        letters = tuple(doc["letters"])
        bnd = tuple(parse_word(b, letters) for b in doc["boundaries"])
        rel = doc.get("closed_relator")
        return SurfaceWithBoundary(
            letters, bnd, parse_word(rel, letters) if rel else None
        )
    raise DevissageError(f"unknown descriptor kind {kind!r}")


def descriptor_to_json(desc: Descriptor) -> dict:
    if isinstance(desc, FreeGroup):
        return {"kind": "free", "letters": list(desc.letters)}
    if isinstance(desc, FreeAbelian):
        return {"kind": "free-abelian", "letters": list(desc.letters)}
    if isinstance(desc, CyclicBySum):
        return {
            "kind": "cyclic-by-sum",
            "n_letter": desc.n_letter,
            "extra_letters": list(desc.extra_letters),
        }
    if isinstance(desc, SurfaceWithBoundary):
        doc = {
            "kind": "surface-with-boundary",
            "letters": list(desc.letters),
            "boundaries": [word_str(b) for b in desc.boundaries],
        }
        if desc.closed_relator is not None:
            doc["closed_relator"] = word_str(desc.closed_relator)
        return doc
    raise DevissageError("preset descriptors have no JSON form")


# structure check ----------------------------------------------------------------------


@dataclass
class ClauseVerdict:
    verdict: str  # Pass | Fail | Unchecked
    detail: str = ""


@dataclass
class StructureReport:
    clauses: dict[str, ClauseVerdict]
    remarks: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.verdict != "Fail" for c in self.clauses.values())

    @property
    def conclusive(self) -> bool:
        return all(c.verdict == "Pass" for c in self.clauses.values())


def check_structure(G: GraphOfGroups) -> StructureReport:
    clauses: dict[str, ClauseVerdict] = {}
    remarks: list[str] = []

    if not G.connected():
        clauses["graph"] = ClauseVerdict("Fail", "underlying graph not connected")
    else:
        clauses["graph"] = ClauseVerdict("Pass", "connected")

    # (i) every edge has exactly one infinitesimal endpoint
    bad = []
    for i, e in enumerate(G.edges):
        inf_ends = sum(
            1 for end in (e.u, e.v) if G.vertices[end].vtype == "infinitesimal"
        )
        if e.u == e.v or inf_ends != 1:
            bad.append(i)
    clauses["incidence"] = (
        ClauseVerdict("Pass", "every edge meets exactly one infinitesimal vertex")
        if not bad
        else ClauseVerdict("Fail", f"edges {bad} violate the one-infinitesimal-end rule")
    )

    # (ii) abelian vertices
    verdict = ClauseVerdict("Pass", "abelian vertices carry a marked cyclic summand")
    for vid, v in G.vertices.items():
        if v.vtype != "abelian":
            continue
        if not isinstance(v.desc, CyclicBySum):
            verdict = ClauseVerdict("Fail", f"abelian vertex {vid!r} is not cyclic-by-sum")
            break
        ngen = ((v.desc.n_letter, 1),)
        for e, img in G.incident(vid):
            if free_reduce(img) not in (ngen, invert(ngen)):
                verdict = ClauseVerdict(
                    "Fail",
                    f"edge image {word_str(img)} at {vid!r} is not the marked generator",
                )
                break
            # maximal cyclic: the other end must not be a proper power there
            other_end, other_img = (e.v, e.image_v) if e.u == vid else (e.u, e.image_u)
            od = G.vertices[other_end].desc
            if isinstance(od, (FreeGroup, SurfaceWithBoundary)):
                _, k = primitive_root(other_img)
                if k != 1:
                    verdict = ClauseVerdict(
                        "Fail",
                        f"edge image at {other_end!r} is a proper power (exponent {k})",
                    )
                    break
        if verdict.verdict == "Fail":
            break
    clauses["abelian"] = verdict

    # abelian vertices sharing an infinitesimal free neighbor must not have
    # commuting conjugates; decidable fragment: compare primitive roots in
    # the shared free vertex, else report Unchecked
    pairs = ClauseVerdict("Pass", "no commuting abelian pair detected")
    unchecked = []
    ab_edges: dict[str, list[tuple[str, Word]]] = {}
    for e in G.edges:
        for ab, inf in ((e.u, e.v), (e.v, e.u)):
            if G.vertices[ab].vtype == "abelian" and G.vertices[inf].vtype == "infinitesimal":
                img = e.image_v if inf == e.v else e.image_u
                ab_edges.setdefault(inf, []).append((ab, img))
    for inf, hung in ab_edges.items():
        if not isinstance(G.vertices[inf].desc, FreeGroup):
            if len({a for a, _ in hung}) > 1:
                unchecked.append(inf)
            continue
        for (a1, w1), (a2, w2) in itertools.combinations(hung, 2):
            if a1 == a2:
                continue
            r1, _ = primitive_root(w1)
            r2, _ = primitive_root(w2)
            if conjugate_in_free(r1, r2) or conjugate_in_free(r1, invert(r2)):
                pairs = ClauseVerdict(
                    "Fail", f"abelian vertices {a1!r}, {a2!r} share a root at {inf!r}"
                )
    if unchecked and pairs.verdict == "Pass":
        pairs = ClauseVerdict("Unchecked", f"non-free shared vertices {unchecked}")
    clauses["abelian-pairs"] = pairs

    # (iii) surface vertices: incident edges <-> boundary words, up to
    # free-group conjugacy (and inversion, for the reversed orientation)
    verdict = ClauseVerdict("Pass", "boundary components matched")
    any_surface = False
    for vid, v in G.vertices.items():
        if v.vtype != "surface":
            continue
        any_surface = True
        if not isinstance(v.desc, SurfaceWithBoundary):
            verdict = ClauseVerdict("Fail", f"surface vertex {vid!r} lacks boundary data")
            break
        inc = [img for _e, img in G.incident(vid)]
        if not inc and not v.desc.boundaries:
            remarks.append(
                f"surface vertex {vid!r} has no edges: closed-surface case"
            )
            continue
        match = _boundary_matching(inc, list(v.desc.boundaries))
        if match is None:
            verdict = ClauseVerdict(
                "Fail",
                f"no edge-boundary bijection at {vid!r} "
                f"({len(inc)} edges, {len(v.desc.boundaries)} boundaries)",
            )
            break
        if len(inc) < len(v.desc.boundaries):
            # unreachable given matching, kept for clarity of the free-splitting signal
            verdict = ClauseVerdict("Fail", f"unmatched boundary at {vid!r}")
            break
    clauses["surface"] = verdict
    if not any_surface:
        clauses["surface"] = ClauseVerdict("Pass", "no surface vertices")

    # (iv) infinitesimal vertices attested free
    missing = []
    for vid, v in G.vertices.items():
        if v.vtype != "infinitesimal":
            continue
        attested = (
            v.attestation is not None
            or isinstance(v.desc, FreeGroup)
            or (isinstance(v.desc, Preset) and v.desc.certificate is not None)
        )
        if not attested:
            missing.append(vid)
    clauses["infinitesimal"] = (
        ClauseVerdict("Pass", "all infinitesimal vertices attested free")
        if not missing
        else ClauseVerdict("Fail", f"unattested infinitesimal vertices {missing}")
    )

    return StructureReport(clauses, remarks)


def _boundary_matching(images: list[Word], boundaries: list[Word]) -> Optional[list[int]]:
    """Perfect matching of edge images to boundary words under free-group
    conjugacy up to inversion; inputs are tiny, brute force."""
    if len(images) != len(boundaries):
        return None
    n = len(images)
    for perm in itertools.permutations(range(n)):
        if all(
            conjugate_in_free(images[i], boundaries[perm[i]])
            or conjugate_in_free(images[i], invert(boundaries[perm[i]]))
            for i in range(n)
        ):
            return list(perm)
    return None


# acylindricity ------------------------------------------------------------------------


@dataclass
class AcylReport:
    verdict: str  # Pass | Fail | Inconclusive
    path: list = field(default_factory=list)
    element: Optional[str] = None
    inconclusive_at: list = field(default_factory=list)


def _primitive_vector(vec: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    g = 0
    for c in vec:
        g = gcd(g, abs(c))
    if g == 0:
        raise WordError("zero vector has no primitive direction")
    prim = tuple(c // g for c in vec)
    # sign-normalize by first nonzero
    lead = next(c for c in prim if c != 0)
    if lead < 0:
        prim = tuple(-c for c in prim)
        g = -g
    return g, prim


def _reduced_words(letters, max_len):
    from .isometry import reduced_words

    return reduced_words(letters, max_len)


def check_acylindricity(G: GraphOfGroups, radius: int = 5, window: int = 4) -> AcylReport:
    """Search for a nontrivial element fixing a reduced Bass-Serre path of
    `radius` edges.  The pointwise stabilizer is tracked as a power of the
    current edge group; turn elements range over vertex-group words of length
    at most `window`."""
    inconclusive: list[str] = []
    for vid, v in G.vertices.items():
        if isinstance(v.desc, (Preset,)):
            inconclusive.append(vid)

    # directed edges: (index, src, dst, image at src, image at dst)
    directed = []
    for i, e in enumerate(G.edges):
        directed.append((i, e.u, e.v, e.image_u, e.image_v))
        directed.append((i, e.v, e.u, e.image_v, e.image_u))

    # state: (directed edge, multiplier M) meaning the stabilizer so far is
    # the M-th powers of the edge group, read at the edge's dst vertex
    states: dict[tuple[int, str, str, int], list] = {}
    for de in directed:
        i, src, dst, img_s, img_d = de
        states[(i, src, dst, 1)] = [(de, None)]

    depth = 1
    while depth < radius and states:
        nxt: dict = {}
        for (i, src, dst, M), path in states.items():
            v = G.vertices[dst]
            if isinstance(v.desc, Preset):
                continue
            arrival_img = next(d[4] for d in directed if d[0] == i and d[2] == dst)
            for de2 in directed:
                i2, src2, dst2, img_s2, img_d2 = de2
                if src2 != dst:
                    continue
                for M2, h in _turns(v.desc, arrival_img, M, img_s2, i == i2, window):
                    key = (i2, src2, dst2, M2)
                    if key not in nxt:
                        nxt[key] = path + [(de2, h)]
        states = nxt
        depth += 1

    if states:
        (i, src, dst, M), path = next(iter(sorted(states.items(), key=lambda kv: repr(kv[0]))))
        img = next(d[4] for d in directed if d[0] == i and d[2] == dst)
        from .groups import power

        elem = word_str(power(img, M))
        desc_path = [
            {"edge": de[0], "from": de[1], "to": de[2], "turn": word_str(h) if h else ""}
            for de, h in path
        ]
        return AcylReport("Fail", desc_path, elem, inconclusive)
    verdict = "Inconclusive" if inconclusive else "Pass"
    return AcylReport(verdict, inconclusive_at=inconclusive)


def _turns(desc: Descriptor, a: Word, M: int, b: Word, same_edge: bool, window: int):
    """Yield (new multiplier, turn witness) for continuations whose pointwise
    stabilizer stays nontrivial: <a^M> meet h<b>h^-1 in the vertex group."""
    if isinstance(desc, (FreeAbelian, CyclicBySum)):
        letters = desc.letters
        va = exponent_vector(a, letters)
        vb = exponent_vector(b, letters)
        da, pa = _primitive_vector(va)
        db, pb = _primitive_vector(vb)
        if pa != pb:
            return
        # need a turn h; when continuing across the same graph edge, h must
        # leave the edge group for the tree path to be reduced
        h = _nonmember_turn(letters, vb, same_edge)
        if same_edge and h is None:
            return
        aM = abs(da) * M
        j = aM // gcd(aM, abs(db))
        yield j, h
        return
    if isinstance(desc, (FreeGroup, SurfaceWithBoundary)):
        letters = desc.letters
        ra, ea = primitive_root(a)
        rb, eb = primitive_root(b)
        seen = set()
        for h in itertools.chain([()], _reduced_words(letters, window)):
            if same_edge:
                k = power_of(h, b)
                if k is not None:
                    continue
            conj = free_reduce(h + rb + invert(h))
            if conj == ra:
                sign = 1
            elif conj == invert(ra):
                sign = -1
            else:
                continue
            aM = ea * M
            j = abs(aM) // gcd(abs(aM), abs(eb))
            if j not in seen:
                seen.add(j)
                yield j, h
        return
    raise WordError("no intersection oracle for this vertex group")


def _nonmember_turn(letters, vb, required: bool):
    """Some single letter outside the cyclic subgroup generated by exponent
    vector vb, or None."""
    for i, l in enumerate(letters):
        e = tuple(1 if j == i else 0 for j in range(len(letters)))
        try:
            _, pb = _primitive_vector(vb)
        except WordError:
            return ((l, 1),)
        if e != pb and tuple(-c for c in e) != pb:
            return ((l, 1),)
    return None if required else ()


# Betti bounds -------------------------------------------------------------------------


@dataclass(frozen=True)
class MaxAbelianDeclaration:
    ranks: tuple[tuple[str, int], ...]  # (vertex or subgroup tag, rank >= 2)

    def __post_init__(self):
        for tag, r in self.ranks:
            if r < 2:
                raise DevissageError(f"declared maximal abelian {tag!r} has rank {r} < 2")


@dataclass
class BettiReport:
    b1_ambient: int
    b1_vertices: dict[str, int]
    b1_graph: int
    lower_bound: int
    lower_slack: int
    abelian_sum: int
    abelian_slack: int
    noncyclic_floor_ok: Optional[bool]

    @property
    def ok(self) -> bool:
        floor = self.noncyclic_floor_ok in (None, True)
        return self.lower_slack >= 0 and self.abelian_slack >= 0 and floor


def check_betti_bounds(
    G: GraphOfGroups,
    ambient: FinitePresentation,
    decl: MaxAbelianDeclaration,
    noncyclic: bool = True,
) -> BettiReport:
    b1g = betti1(ambient)
    per_vertex = {vid: v.desc.b1 for vid, v in G.vertices.items()}
    b1_graph = len(G.edges) - len(G.vertices) + 1
    lower = sum(per_vertex.values()) + b1_graph - len(G.edges)
    ab_sum = sum(r - 1 for _t, r in decl.ranks)
    return BettiReport(
        b1_ambient=b1g,
        b1_vertices=per_vertex,
        b1_graph=b1_graph,
        lower_bound=lower,
        lower_slack=b1g - lower,
        abelian_sum=ab_sum,
        abelian_slack=(b1g - 1) - ab_sum,
        noncyclic_floor_ok=(b1g >= 2) if noncyclic else None,
    )


# principal splitting ------------------------------------------------------------------


@dataclass
class SplittingCase:
    case: str
    detail: str


def principal_splitting_case(G: GraphOfGroups) -> SplittingCase:
    rep = check_structure(G)
    if not rep.ok:
        raise DevissageError("structure check failed; refusing the case analysis")
    for vid, v in G.vertices.items():
        if v.vtype == "surface":
            return SplittingCase(
                "essential-curve",
                f"surface vertex {vid!r}: split along an essential curve, "
                "edge group maximal abelian cyclic",
            )
    for vid, v in G.vertices.items():
        if v.vtype != "abelian":
            continue
        k = len(v.desc.extra_letters)
        if k == 0:
            return SplittingCase(
                "amalgam-maximal-abelian",
                f"abelian vertex {vid!r} equals its cyclic summand: "
                "an incident edge splits with C = the vertex group, maximal abelian",
            )
        return SplittingCase(
            "centralizer-extension",
            f"abelian vertex {vid!r}: A *_C (C + Z^{k}) with k = {k}",
        )
    return SplittingCase(
        "recurse",
        "single infinitesimal piece: recurse on the action at the next lower rank",
    )
