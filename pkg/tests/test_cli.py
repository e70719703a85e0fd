import json

import pytest

from lambdaforest import presets
from lambdaforest.cli import main

SCHEMA = "lambda-forest/1"


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def emit(tmp_path, preset_name):
    return write(tmp_path, preset_name + ".json", presets.emit(preset_name))


@pytest.fixture
def tripod_file(tmp_path):
    return emit(tmp_path, "tripod")


# input handling -------------------------------------------------------------------


def test_missing_schema_is_malformed(tmp_path):
    path = write(tmp_path, "bad.json", {"kind": "tree"})
    assert main(["tree", "distance", "--input", path, "--x", "p", "--y", "q"]) == 65


def test_invalid_json_is_malformed(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["validate-tree", "--input", str(p)]) == 65


def test_usage_errors():
    assert main([]) == 64
    assert main(["preset", "emit"]) == 64
    assert main(["preset", "emit", "--name", "no-such-preset"]) == 64
    assert main(["marked", "compare"]) == 64


# tree commands ---------------------------------------------------------------------


def test_tree_distance(tripod_file, capsys):
    assert main(["tree", "distance", "--input", tripod_file, "--x", "p", "--y", "q"]) == 0
    assert "(2)" in capsys.readouterr().out


def test_tree_distance_interior_point(tripod_file, capsys):
    rc = main(["tree", "distance", "--input", tripod_file, "--x", "o:p:1/2", "--y", "q"])
    assert rc == 0
    assert "(3/2)" in capsys.readouterr().out


def test_tree_median_and_project(tripod_file, capsys):
    assert main(["tree", "median", "--input", tripod_file, "--x", "p", "--y", "q", "--z", "r"]) == 0
    assert "o" in capsys.readouterr().out
    assert main(["tree", "project", "--input", tripod_file, "--x", "p", "--y", "q", "--z", "r"]) == 0


def test_tree_bad_point_is_malformed(tripod_file):
    assert main(["tree", "distance", "--input", tripod_file, "--x", "nope", "--y", "q"]) == 65


def test_validate_tree_pass_and_violation(tmp_path, tripod_file):
    metric = {
        "schema": SCHEMA,
        "rank": 1,
        "labels": ["a", "b"],
        "dist": [[["0"], ["1"]], [["1"], ["0"]]],
    }
    assert main(["validate-tree", "--input", write(tmp_path, "m.json", metric)]) == 0
    square = emit(tmp_path, "square-cycle")
    assert main(["validate-tree", "--input", square]) == 2


# isometry commands -------------------------------------------------------------------


@pytest.fixture
def rotation_file(tmp_path, tripod_file):
    doc = {
        "schema": SCHEMA,
        "tree": presets.emit("tripod"),
        "generators": {"r": {"o": "o", "p": "q", "q": "r", "r": "p"}},
    }
    return write(tmp_path, "rot.json", doc)


def test_isom_classify_elliptic(rotation_file, capsys):
    rc = main(["isom", "classify", "--input", rotation_file, "--word", "r", "--base", "p"])
    assert rc == 0
    assert "elliptic" in capsys.readouterr().out


def test_isom_classify_inconclusive(tmp_path, capsys):
    tree = {
        "rank": 1,
        "vertices": ["n0", "n1", "n2"],
        "edges": [
            {"u": "n0", "v": "n1", "len": ["1"]},
            {"u": "n1", "v": "n2", "len": ["1"]},
        ],
    }
    doc = {"schema": SCHEMA, "tree": tree, "generators": {"a": {"n0": "n1", "n1": "n2"}}}
    path = write(tmp_path, "shift.json", doc)
    rc = main(["isom", "classify", "--input", path, "--word", "aa", "--base", "n0"])
    assert rc == 3
    assert "inconclusive" in capsys.readouterr().out


def test_isom_certify_counterexample(rotation_file, capsys):
    rc = main(["isom", "certify", "--input", rotation_file, "--base", "p", "--ball", "1"])
    assert rc == 2
    assert "counterexample" in capsys.readouterr().out


# bt commands --------------------------------------------------------------------------


def test_bt_length_rank2(tmp_path, capsys):
    path = emit(tmp_path, "z2-diagonal")
    assert main(["bt", "length", "--input", path, "--word", "uuuv'"]) == 0
    assert "(2, -6)" in capsys.readouterr().out


def test_bt_valuation(tmp_path, capsys):
    path = emit(tmp_path, "schottky-qt")
    assert main(["bt", "valuation", "--input", path, "--word", "a"]) == 0
    assert "-1" in capsys.readouterr().out


def test_bt_certify_pass_and_fail(tmp_path, capsys):
    schottky = emit(tmp_path, "schottky-qt")
    assert main(["bt", "certify", "--input", schottky, "--ball", "3"]) == 0
    assert "free on ball" in capsys.readouterr().out
    unipotent = emit(tmp_path, "unipotent-fail")
    assert main(["bt", "certify", "--input", unipotent]) == 2
    assert "counterexample" in capsys.readouterr().out


# glue commands --------------------------------------------------------------------------


def _path_tree(ids):
    return {
        "rank": 1,
        "vertices": list(ids),
        "edges": [{"u": ids[i], "v": ids[i + 1], "len": ["1"]} for i in range(len(ids) - 1)],
    }


@pytest.fixture
def chain_goa_file(tmp_path):
    doc = {
        "schema": SCHEMA,
        "vertex_trees": {
            "A": _path_tree(["a0", "a1", "a2", "a3"]),
            "B": _path_tree(["b0", "b1", "b2", "b3"]),
        },
        "edges": [
            {"from": "A", "to": "B", "ends_from": ["a2", "a3"], "ends_to": ["b0", "b1"]}
        ],
        "attestations": {"A": "free", "B": "free"},
        "samples": [{"vertex": "A", "point": "a2"}],
    }
    return write(tmp_path, "goa.json", doc)


def test_glue_dual(chain_goa_file, capsys):
    rc = main(["glue", "dual", "--input", chain_goa_file, "--a", "A/a0", "--b", "B/b3"])
    assert rc == 0
    assert "(5)" in capsys.readouterr().out  # a0..a2 (2) + b0..b3 (3)


def test_glue_check_free_pass(chain_goa_file, capsys):
    assert main(["glue", "check-free", "--input", chain_goa_file]) == 0
    assert "Pass" in capsys.readouterr().out


def test_glue_check_free_inconclusive(tmp_path, chain_goa_file):
    doc = json.loads(open(chain_goa_file).read())
    del doc["attestations"]["B"]
    path = write(tmp_path, "goa2.json", doc)
    assert main(["glue", "check-free", "--input", path]) == 3


def test_glue_subtree(tmp_path, capsys):
    doc = {
        "schema": SCHEMA,
        "tree1": _path_tree(["a", "b", "c"]),
        "tree2": _path_tree(["x", "y", "z"]),
        "ends1": ["b", "c"],
        "ends2": ["x", "y"],
    }
    assert main(["glue", "subtree", "--input", write(tmp_path, "gs.json", doc)]) == 0
    assert "4 vertices" in capsys.readouterr().out


def test_glue_point(tmp_path, capsys):
    doc = {
        "schema": SCHEMA,
        "base": _path_tree(["a", "b"]),
        "attachments": [{"tree": _path_tree(["p", "q"]), "x": "b", "y": "p"}],
    }
    assert main(["glue", "point", "--input", write(tmp_path, "gp.json", doc)]) == 0
    assert "3 vertices" in capsys.readouterr().out


# cover commands ---------------------------------------------------------------------


def test_cover_check_and_skeleton(tmp_path, capsys):
    doc = {
        "schema": SCHEMA,
        "tree": presets.emit("tripod"),
        "members": [["o", "p"], ["o", "q"], ["o", "r"]],
    }
    path = write(tmp_path, "cover.json", doc)
    assert main(["cover", "check", "--input", path]) == 0
    assert main(["cover", "skeleton", "--input", path]) == 0
    assert "3 members, 1 points" in capsys.readouterr().out
    doc["members"] = [["o", "p"], ["o", "q"]]
    gap = write(tmp_path, "gap.json", doc)
    assert main(["cover", "check", "--input", gap]) == 2


# gog commands ------------------------------------------------------------------------


def test_gog_pipeline(tmp_path, capsys):
    path = emit(tmp_path, "centralizer-extension-gog")
    assert main(["gog", "structure", "--input", path]) == 0
    assert main(["gog", "acyl", "--input", path]) == 0
    assert main(["gog", "betti", "--input", path]) == 0
    assert main(["gog", "principal", "--input", path]) == 0
    assert "centralizer-extension" in capsys.readouterr().out


def test_gog_structure_violation(tmp_path):
    doc = presets.emit("centralizer-extension-gog")
    doc["edges"][0]["image_u"] = "xyxy"
    path = write(tmp_path, "badgog.json", doc)
    assert main(["gog", "structure", "--input", path]) == 2
    assert main(["gog", "principal", "--input", path]) == 2


def test_gog_surface_case(tmp_path, capsys):
    path = emit(tmp_path, "n3-surface-gog")
    assert main(["gog", "principal", "--input", path]) == 0
    assert "essential-curve" in capsys.readouterr().out


# marked commands ---------------------------------------------------------------------


def z2_doc():
    return {
        "schema": SCHEMA,
        "group": {"kind": "free-abelian", "letters": ["p", "q"]},
        "marking": ["p", "q"],
        "letters": ["a", "b"],
    }


def test_marked_ball(tmp_path, capsys):
    path = write(tmp_path, "z2.json", z2_doc())
    assert main(["marked", "ball", "--input", path, "--radius", "4"]) == 0
    out = capsys.readouterr().out
    assert "8 relations" in out and "a'b'ab" in out


def test_marked_compare(tmp_path, capsys):
    from lambdaforest.presets import z_marked

    a = write(tmp_path, "z1.json", z_marked(1))
    b = write(tmp_path, "z2t.json", z2_doc())
    assert main(["marked", "compare", "--a", a, "--b", b, "--radius", "1"]) == 0
    assert main(["marked", "compare", "--a", a, "--b", b, "--radius", "2"]) == 2
    assert "ab'" in capsys.readouterr().out


def test_marked_profile(tmp_path, capsys):
    path = emit(tmp_path, "z-to-z2-sequence")
    assert main(["marked", "profile", "--input", path]) == 0
    out = capsys.readouterr().out
    assert "least index" in out


# presets ------------------------------------------------------------------------------


def test_preset_list_and_emit(tmp_path, capsys):
    assert main(["preset", "list"]) == 0
    out = capsys.readouterr().out
    for name in presets.names():
        assert name in out
    target = tmp_path / "out.json"
    assert main(["preset", "emit", "--name", "tripod", "--out", str(target)]) == 0
    doc = json.loads(target.read_text())
    assert doc["schema"] == SCHEMA


def test_every_preset_carries_schema():
    for name in presets.names():
        assert presets.emit(name)["schema"] == SCHEMA


# deterministic reports ----------------------------------------------------------------


def test_json_report_is_deterministic(tmp_path):
    square = emit(tmp_path, "square-cycle")
    r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert main(["validate-tree", "--input", square, "--json", str(r1)]) == 2
    assert main(["validate-tree", "--input", square, "--json", str(r2)]) == 2
    assert r1.read_bytes() == r2.read_bytes()
    body = json.loads(r1.read_text())
    assert body["status"] == "violation" and body["kind"] == "four-point"
    assert "input_digest" in body
