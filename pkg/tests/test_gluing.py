import random
from fractions import Fraction

import pytest

from lambdaforest.gluing import (
    CLASS_CAP,
    DualPoint,
    GluedEdge,
    GluingError,
    GraphOfActions,
    SegmentIso,
    TransverseCovering,
    check_free_criterion,
    dual_distance,
    dual_distance_bruteforce,
    fold_glued_tree,
    glue_equiv_class,
    glue_point,
    glue_subtree,
    skeleton,
    subdivide_at,
    transverse_check,
    validate_candidate_action,
)
from lambdaforest.groups import DirectSumCyclicOracle, FreeGroupOracle
from lambdaforest.lambdatree import (
    FiniteLambdaMetric,
    MetricTree,
    SubtreeSpec,
    Vertex,
    distance,
)

from conftest import L, random_lex_positive, random_tree


def unit_path(ids):
    return MetricTree(ids, [(ids[i], ids[i + 1], L(1)) for i in range(len(ids) - 1)], 1)


# subdivision ---------------------------------------------------------------------


def test_subdivide_at_transports_points():
    T = MetricTree(["a", "b"], [("a", "b", L(2))], 1)
    mid = T.point("a", "b", L(1))
    T2, mapper = subdivide_at(T, [mid])
    assert isinstance(mapper(mid), Vertex)
    assert mapper(Vertex("a")) == Vertex("a")
    q = mapper(T.point("a", "b", L("1/2")))
    assert distance(T2, mapper(Vertex("a")), q) == L("1/2")
    assert distance(T2, Vertex("a"), Vertex("b")) == L(2)


# segment isometries --------------------------------------------------------------


def test_segment_iso_apply_and_inverse():
    T1 = unit_path(["a", "b", "c"])
    T2 = unit_path(["x", "y", "z"])
    phi = SegmentIso(T1, (Vertex("a"), Vertex("c")), T2, (Vertex("x"), Vertex("z")))
    assert phi.apply(Vertex("b")) == Vertex("y")
    m = T1.point("a", "b", L("1/2"))
    assert phi.apply(m) == T2.point("x", "y", L("1/2"))
    assert phi.inverse().apply(phi.apply(m)) == m


def test_segment_iso_rejects_span_mismatch():
    T1 = unit_path(["a", "b"])
    T2 = unit_path(["x", "y", "z"])
    with pytest.raises(GluingError):
        SegmentIso(T1, (Vertex("a"), Vertex("b")), T2, (Vertex("x"), Vertex("z")))


# point and subtree gluing ---------------------------------------------------------


def test_glue_point_wedge():
    base = unit_path(["a", "b"])
    arm1 = unit_path(["p", "q"])
    arm2 = unit_path(["r", "s", "t"])
    glued, base_map, att_maps = glue_point(base, [(arm1, "b", "p"), (arm2, "a", "r")])
    d = distance(glued, Vertex(att_maps[0]["q"]), Vertex(att_maps[1]["t"]))
    # q - p=b - a=r - s - t
    assert d == L(4)
    assert att_maps[0]["p"] == base_map["b"]
    assert distance(glued, Vertex(base_map["a"]), Vertex(base_map["b"])) == L(1)


def test_glue_point_rejects_bad_attachment():
    base = unit_path(["a", "b"])
    arm = unit_path(["p", "q"])
    with pytest.raises(GluingError):
        glue_point(base, [(arm, "zz", "p")])


def test_glue_subtree_overlapping_segments():
    Y1 = unit_path(["a", "b", "c"])
    Y2 = unit_path(["x", "y", "z"])
    # identify [b, c] of Y1 with [x, y] of Y2
    phi = SegmentIso(Y1, (Vertex("b"), Vertex("c")), Y2, (Vertex("x"), Vertex("y")))
    glued, map_src, map_dst = glue_subtree(phi)
    a = map_src(Vertex("a"))
    z = map_dst(Vertex("z"))
    assert distance(glued, a, z) == L(3)  # a - b=x - c=y - z
    assert map_src(Vertex("b")) == map_dst(Vertex("x"))
    assert map_src(Vertex("c")) == map_dst(Vertex("y"))
    # interior points of the shared segment agree through both maps
    m1 = map_src(Y1.point("b", "c", L("1/2")))
    m2 = map_dst(Y2.point("x", "y", L("1/2")))
    assert m1 == m2


def test_glue_subtree_at_interior_cut():
    Y1 = MetricTree(["a", "b"], [("a", "b", L(2))], 1)
    Y2 = MetricTree(["x", "y"], [("x", "y", L(3))], 1)
    # glue [midpoint of Y1, b] onto [x, a point 1 into Y2]
    src = (Y1.point("a", "b", L(1)), Vertex("b"))
    dst = (Vertex("x"), Y2.point("x", "y", L(1)))
    glued, map_src, map_dst = glue_subtree(SegmentIso(Y1, src, Y2, dst))
    assert distance(glued, map_src(Vertex("a")), map_dst(Vertex("y"))) == L(4)


# graphs of actions and the dual distance -----------------------------------------


def make_chain_goa():
    """A - B - C chain with unit-segment interfaces."""
    TA = unit_path(["a0", "a1", "a2", "a3"])
    TB = unit_path(["b0", "b1", "b2", "b3"])
    TC = unit_path(["c0", "c1", "c2", "c3"])
    e1 = GluedEdge(
        "A", "B", SegmentIso(TA, (Vertex("a2"), Vertex("a3")), TB, (Vertex("b0"), Vertex("b1")))
    )
    e2 = GluedEdge(
        "B", "C", SegmentIso(TB, (Vertex("b2"), Vertex("b3")), TC, (Vertex("c0"), Vertex("c1")))
    )
    return GraphOfActions({"A": TA, "B": TB, "C": TC}, [e1, e2]), TA, TB, TC


def test_dual_distance_chain():
    G, TA, TB, TC = make_chain_goa()
    a = DualPoint("A", Vertex("a0"))
    c = DualPoint("C", Vertex("c3"))
    d = dual_distance(G, a, c)
    # a0..a2 (2) + b1..b2 (1, entering at b0=a2) ... explicit fold below
    assert d == dual_distance_bruteforce(G, a, c)
    assert d == L(7)
    # distance within one carrier falls back to the tree metric
    assert dual_distance(G, a, DualPoint("A", Vertex("a3"))) == L(3)


def test_dual_distance_matches_folded_tree():
    G, TA, TB, TC = make_chain_goa()
    path = G.skeleton_paths("A", "C")[0]
    folded, maps = fold_glued_tree(G, path)
    for u in ("a0", "a1", "a3"):
        for w in ("c0", "c2", "c3"):
            d1 = dual_distance(G, DualPoint("A", Vertex(u)), DualPoint("C", Vertex(w)))
            d2 = distance(folded, maps["A"](Vertex(u)), maps["C"](Vertex(w)))
            assert d1 == d2, (u, w)


def test_goa_rejects_disconnected_skeleton():
    TA = unit_path(["a0", "a1"])
    TB = unit_path(["b0", "b1"])
    with pytest.raises(GluingError):
        GraphOfActions({"A": TA, "B": TB}, [])


def _random_goa(rng):
    T1 = random_tree(rng, rng.randint(2, 5), rank=1, prefix="s")
    vs1 = sorted(T1.vertices)
    u, v = rng.sample(vs1, 2)
    d = distance(T1, Vertex(u), Vertex(v))
    # second tree: random part plus a pendant chain of total length d
    T2base = random_tree(rng, rng.randint(1, 4), rank=1, prefix="t")
    vs2 = sorted(T2base.vertices)
    anchor = rng.choice(vs2)
    parts = [Fraction(rng.randint(1, 3)) for _ in range(rng.randint(1, 3))]
    total = sum(parts)
    verts = list(T2base.vertices)
    edges = [(a, b, ln) for (a, b), ln in T2base.edges.items()]
    prev = anchor
    for i, part in enumerate(parts):
        nxt = f"w{i}"
        verts.append(nxt)
        edges.append((prev, nxt, d.scale(part / total)))
        prev = nxt
    T2 = MetricTree(verts, edges, 1)
    phi = SegmentIso(T1, (Vertex(u), Vertex(v)), T2, (Vertex(anchor), Vertex(prev)))
    G = GraphOfActions({"X": T1, "Y": T2}, [GluedEdge("X", "Y", phi)])
    return G, T1, T2


def test_dual_distance_matches_bruteforce_random():
    rng = random.Random(42)
    for _ in range(30):
        G, T1, T2 = _random_goa(rng)
        for _ in range(4):
            a = DualPoint("X", Vertex(rng.choice(sorted(T1.vertices))))
            b = DualPoint("Y", Vertex(rng.choice(sorted(T2.vertices))))
            assert dual_distance(G, a, b) == dual_distance_bruteforce(G, a, b)
            assert dual_distance(G, b, a) == dual_distance(G, a, b)


# glue equivalence classes ----------------------------------------------------------


def test_glue_equiv_class_simple():
    G, TA, TB, TC = make_chain_goa()
    cls = glue_equiv_class(G, DualPoint("A", Vertex("a2")))
    assert len(cls.nodes) == 2  # a2 = b0
    assert cls.acyclic and cls.diameter == 1
    lone = glue_equiv_class(G, DualPoint("A", Vertex("a0")))
    assert len(lone.nodes) == 1 and lone.diameter == 0


def test_glue_equiv_class_cap():
    # parallel shifted gluings generate an infinite orbit; the cap kicks in
    G = _period_doubling_goa()
    cls = glue_equiv_class(G, DualPoint("U", Vertex("h0")), cap=8)
    assert cls.inconclusive


# free criterion --------------------------------------------------------------------


def _period_doubling_goa():
    U = unit_path([f"h{i}" for i in range(9)])
    V = unit_path([f"k{i}" for i in range(9)])
    phi1 = SegmentIso(U, (Vertex("h0"), Vertex("h7")), V, (Vertex("k0"), Vertex("k7")))
    phi2 = SegmentIso(U, (Vertex("h1"), Vertex("h8")), V, (Vertex("k0"), Vertex("k7")))
    return GraphOfActions(
        {"U": U, "V": V}, [GluedEdge("U", "V", phi1), GluedEdge("U", "V", phi2)]
    )


def test_free_criterion_pass():
    G, TA, TB, TC = make_chain_goa()
    att = {"A": "free", "B": "free", "C": "free"}
    samples = [DualPoint("A", Vertex("a2")), DualPoint("B", Vertex("b3"))]
    rep = check_free_criterion(G, att, samples)
    assert rep.verdict == "Pass"


def test_free_criterion_missing_attestation():
    G, *_ = make_chain_goa()
    rep = check_free_criterion(G, {"A": "free"}, [])
    assert rep.verdict == "Inconclusive"
    assert "B" in rep.detail or "missing" in rep.detail


def test_free_criterion_period_doubling_fails():
    G = _period_doubling_goa()
    rep = check_free_criterion(G, {"U": "free", "V": "free"}, [])
    assert rep.verdict == "Fail"
    assert "translates" in rep.detail


# transverse coverings ---------------------------------------------------------------


@pytest.fixture
def tripod():
    return MetricTree(
        ["o", "p", "q", "r"],
        [("o", "p", L(1)), ("o", "q", L(1)), ("o", "r", L(1))],
        1,
    )


def test_transverse_check_ok(tripod):
    members = [
        SubtreeSpec.from_points(tripod, [Vertex("o"), Vertex(x)]) for x in "pqr"
    ]
    rep = transverse_check(TransverseCovering(tripod, members))
    assert rep.ok
    sk = skeleton(TransverseCovering(tripod, members))
    assert len(sk.member_vertices) == 3
    assert sk.point_vertices == [Vertex("o")]
    assert sk.connected and sk.acyclic
    assert sorted(sk.terminal_members) == [0, 1, 2]


def test_transverse_check_degenerate(tripod):
    members = [SubtreeSpec.from_points(tripod, [Vertex("o")])]
    rep = transverse_check(TransverseCovering(tripod, members))
    assert not rep.ok and rep.kind == "degenerate-member"


def test_transverse_check_overlap(tripod):
    members = [
        SubtreeSpec.from_points(tripod, [Vertex("p"), Vertex("q")]),
        SubtreeSpec.from_points(tripod, [Vertex("o"), Vertex("p")]),
        SubtreeSpec.from_points(tripod, [Vertex("o"), Vertex("r")]),
    ]
    rep = transverse_check(TransverseCovering(tripod, members))
    assert not rep.ok and rep.kind == "transverse-intersection"


def test_transverse_check_gap(tripod):
    members = [
        SubtreeSpec.from_points(tripod, [Vertex("o"), Vertex("p")]),
        SubtreeSpec.from_points(tripod, [Vertex("o"), Vertex("q")]),
    ]
    rep = transverse_check(TransverseCovering(tripod, members))
    assert not rep.ok and rep.kind == "coverage-gap"
    with pytest.raises(GluingError):
        skeleton(TransverseCovering(tripod, members))


# candidate-action validator ----------------------------------------------------------


def _two_point_metric():
    zero, two = L(0), L(2)
    return FiniteLambdaMetric(["A", "B"], [[zero, two], [two, zero]], 1)


def test_validate_candidate_action_pass():
    M = _two_point_metric()
    maps = {"f": {"A": "B", "B": "A"}}
    rep = validate_candidate_action(
        M, maps, DirectSumCyclicOracle(2, ("f",)).is_trivial, 2
    )
    assert rep.ok
    assert rep.certificate.status == "free-on-ball"
    assert "ff" in rep.certificate.relations or "f'f'" in rep.certificate.relations


def test_validate_candidate_action_fixed_point_counterexample():
    zero, one, two = L(0), L(1), L(2)
    M = FiniteLambdaMetric(
        ["x", "y", "z"],
        [[zero, two, one], [two, zero, one], [one, one, zero]],
        1,
    )
    maps = {"g": {"x": "y", "y": "x", "z": "z"}}
    rep = validate_candidate_action(M, maps, FreeGroupOracle(("g",)).is_trivial, 2)
    assert not rep.ok
    assert rep.certificate.status == "counterexample"


def test_validate_candidate_action_non_isometry():
    zero, one, two = L(0), L(1), L(2)
    M = FiniteLambdaMetric(
        ["x", "y", "z"],
        [[zero, two, one], [two, zero, one], [one, one, zero]],
        1,
    )
    maps = {"g": {"x": "z", "z": "x", "y": "y"}}  # d(x,y)=2 but d(z,y)=1
    rep = validate_candidate_action(M, maps, FreeGroupOracle(("g",)).is_trivial, 2)
    assert not rep.ok and rep.isometry_failures


def test_validate_candidate_action_bad_metric():
    zero = L(0)
    M = FiniteLambdaMetric(["A", "B"], [[zero, zero], [zero, zero]], 1)
    rep = validate_candidate_action(M, {}, FreeGroupOracle(()).is_trivial, 1)
    assert not rep.metric_ok and not rep.ok


def test_validate_candidate_action_not_bijection():
    M = _two_point_metric()
    maps = {"f": {"A": "A", "B": "A"}}
    rep = validate_candidate_action(
        M, maps, DirectSumCyclicOracle(2, ("f",)).is_trivial, 1
    )
    assert not rep.ok
    assert any("bijection" in str(f) for f in rep.isometry_failures)
