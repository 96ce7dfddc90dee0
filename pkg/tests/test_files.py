import json

import pytest

from gridsnap import Instance, Objective, ObjectiveKind, snap_lazy
from gridsnap.core import InvalidDrawing
from gridsnap.files import (InstanceFile, ParseError, dumps, instance_from_doc, instance_to_doc,
                            read_instance, read_positions, solution_to_doc, write_instance)

from conftest import CURATED, FIXTURES


@pytest.mark.parametrize("path", CURATED + [FIXTURES / "mesh9.json", FIXTURES / "mesh11.json"],
                         ids=lambda p: p.stem)
def test_round_trip_is_identity(path, tmp_path):
    inst = read_instance(path)
    out = tmp_path / "x.json"
    write_instance(out, inst)
    again = read_instance(out)
    assert again == inst
    write_instance(tmp_path / "y.json", again)
    assert (tmp_path / "y.json").read_text() == out.read_text()
    if path.parent.name == "curated":
        assert out.read_text() == path.read_text()


def test_decimal_and_object_coordinates():
    doc = {"box": {"x_max": 2, "y_max": 2}, "edges": [["a", "b"]], "objective": "MaxMoveL2",
           "vertices": [{"id": "a", "x": "0.25", "y": {"num": 3, "den": 2}}, {"id": "b", "x": 2, "y": "1/3"}]}
    inst = instance_from_doc(doc).instance
    assert inst.objective.kind is ObjectiveKind.MAX_MOVE_L2
    assert instance_to_doc(InstanceFile(inst))["vertices"][0] == {"id": "a", "x": "1/4", "y": "3/2"}


def test_float_literals_rejected(tmp_path):
    p = tmp_path / "f.json"
    p.write_text('{"box": {"x_max": 1, "y_max": 1}, "vertices": [{"id": "a", "x": 0.5, "y": "0"}], "edges": []}')
    with pytest.raises(ParseError):
        read_instance(p)


@pytest.mark.parametrize("doc", [
    {"vertices": []},
    {"box": {"x_max": 1, "y_max": 1}, "vertices": [{"id": "a", "x": "5", "y": "0"}]},
    {"box": {"x_max": 1, "y_max": 1}, "vertices": [{"id": "a", "x": "0", "y": "0"}], "edges": [["a"]]},
    {"box": {"x_max": 1, "y_max": 1}, "vertices": [], "objective": "Nope"},
])
def test_malformed_documents(doc):
    with pytest.raises((ValueError, InvalidDrawing)):
        instance_from_doc(doc)


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(ParseError):
        read_instance(p)


def test_solution_doc_and_positions(tmp_path):
    inst = read_instance(FIXTURES / "curated" / "crossing_a.json").instance
    res = snap_lazy(inst)
    doc = solution_to_doc(res, inst.objective, "lazy")
    assert doc["status"] == "Optimal" and doc["strategy"] == "lazy"
    assert doc["stats"]["lazy_iterations"] == res.stats.lazy_iterations
    p = tmp_path / "sol.json"
    p.write_text(dumps(doc))
    assert read_positions(p) == res.solution.positions
    bare = tmp_path / "bare.json"
    bare.write_text(json.dumps({"a": [1, 2]}))
    assert read_positions(bare) == {"a": (1, 2)}
    half = tmp_path / "half.json"
    half.write_text(json.dumps({"a": ["1/2", 2]}))
    with pytest.raises(ParseError):
        read_positions(half)


def test_squared_cost_is_flagged():
    inst = read_instance(FIXTURES / "k3.json").instance
    l2 = Instance(inst.drawing, Objective(ObjectiveKind.MAX_MOVE_L2))
    doc = solution_to_doc(snap_lazy(l2), l2.objective, "lazy")
    assert doc["cost_is_squared"] is True


def test_dumps_is_canonical():
    assert dumps({"b": 1, "a": [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'
