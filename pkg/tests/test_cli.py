import json
import subprocess
import sys

import pytest

from gridsnap.cli import main

from conftest import FIXTURES, read_json

FORMULAS = FIXTURES / "formulas"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_snap_integral_drawing_is_identity(capsys):
    code, out, _ = run(["snap", FIXTURES / "integral_safe.json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["cost"] == "0"
    assert doc["positions"] == {"a": [0, 0], "b": [2, 0], "c": [2, 2], "d": [0, 2], "e": [1, 1]}


def test_snap_nearest_safe_first_pass(capsys):
    code, out, _ = run(["snap", FIXTURES / "mesh11.json"], capsys)
    stats = json.loads(out)["stats"]
    assert code == 0
    assert stats == {"constraints_added": 0, "lazy_iterations": 1, "nodes_explored": stats["nodes_explored"]}


def test_snap_crossing_adds_rows(capsys, tmp_path):
    lp = tmp_path / "m.lp"
    code, out, _ = run(["snap", FIXTURES / "curated" / "crossing_a.json", "--export-lp", lp], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["stats"]["constraints_added"] > 0
    assert lp.read_text().startswith("\\ gridsnap model")


def test_snap_full_strategy_and_json_out(capsys, tmp_path):
    dest = tmp_path / "sol.json"
    code, out, _ = run(["snap", FIXTURES / "k3.json", "--strategy", "full", "--json-out", dest], capsys)
    assert code == 0 and out == ""
    assert read_json(dest)["strategy"] == "full"


def test_snap_objective_override(capsys):
    code, out, _ = run(["snap", FIXTURES / "curated" / "white_triangle.json", "--objective", "MaxMoveL2"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["objective"] == "MaxMoveL2" and doc["cost_is_squared"]
    code, _, _ = run(["snap", FIXTURES / "k3.json", "--objective", "bogus"], capsys)
    assert code == 1


def test_export_lp_refuses_squared(capsys, tmp_path):
    code, _, err = run(["snap", FIXTURES / "k3.json", "--objective", "MaxMoveL2", "--export-lp",
                        tmp_path / "m.lp"], capsys)
    assert code == 1 and "LP" in err


def test_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("not json")
    assert run(["snap", bad], capsys)[0] == 1
    assert run(["snap", tmp_path / "missing.json"], capsys)[0] == 1
    assert run(["snap", FIXTURES / "mesh9.json", "--budget", "3"], capsys)[0] == 3
    assert run(["snap", FIXTURES / "curated" / "crossing_a.json", "--max-iterations", "1"], capsys)[0] == 3
    code, out, _ = run(["snap", FIXTURES / "curated" / "near_coincidence_a.json", "--cost-cap", "0"], capsys)
    assert code == 2 and json.loads(out)["status"] == "Infeasible"
    assert run(["snap", FIXTURES / "k3.json", "--cost-cap", "x/"], capsys)[0] == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


@pytest.mark.parametrize("name,width,height", [("path3.json", 2, 0), ("k3.json", 1, 1), ("k4.json", 2, 2)])
def test_draw_heights(name, width, height, capsys):
    code, out, _ = run(["draw", FIXTURES / name, "--width", width], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["cost"] == str(height) and doc["width"] == width
    assert max(p[1] for p in doc["positions"].values()) == height


def test_draw_rejects_bad_width(capsys):
    assert run(["draw", FIXTURES / "k3.json", "--width", "0"], capsys)[0] == 1


def test_check_identity(capsys):
    code, out, _ = run(["check", FIXTURES / "integral_safe.json", FIXTURES / "integral_safe.json"], capsys)
    assert (code, out) == (0, "")


def test_check_reports(capsys, tmp_path):
    pos = tmp_path / "p.json"
    pos.write_text(json.dumps({"a": [0, 0], "b": [2, 1], "c": [2, 2], "d": [0, 2], "e": [2, 1]}))
    code, out, _ = run(["check", FIXTURES / "integral_safe.json", pos], capsys)
    lines = [json.loads(line) for line in out.splitlines()]
    assert code == 5
    assert {"kind": "VertexCoincidence", "v": "b", "w": "e"} in lines

    pos.write_text(json.dumps({"v1": [0, 2], "v2": [1, 2], "v3": [0, 3], "v4": [1, 0]}))
    code, out, _ = run(["check", FIXTURES / "curated" / "crossing_a.json", pos], capsys)
    assert code == 5
    assert [json.loads(line) for line in out.splitlines()] == [
        {"kind": "EdgeCrossing", "e1": ["v1", "v2"], "e2": ["v3", "v4"]}]

    pos.write_text(json.dumps({"a": [0, 0]}))
    assert run(["check", FIXTURES / "integral_safe.json", pos], capsys)[0] == 1


def test_gen_reduction_and_snap(capsys, tmp_path):
    out = tmp_path / "xy.json"
    svg = tmp_path / "xy.svg"
    code, _, _ = run(["gen-reduction", FORMULAS / "xy.cnf", "--out", out, "--svg", svg], capsys)
    assert code == 0 and svg.read_text().lstrip().startswith("<?xml")
    side = read_json(tmp_path / "xy.sidecar.json")
    assert int(side["c_min"]) == len(side["white_vertex_ids"])
    assert side["assignment_vertices"] == {"1": "A1", "2": "A2"}
    code, text, _ = run(["snap", out, "--strategy", "full"], capsys)
    assert code == 0 and json.loads(text)["cost"] == side["c_min"]


def test_gen_reduction_empty_formula(capsys, tmp_path):
    out = tmp_path / "e.json"
    assert run(["gen-reduction", FORMULAS / "empty.cnf", "--out", out, "--sidecar", tmp_path / "s.json"],
               capsys)[0] == 0
    side = read_json(tmp_path / "s.json")
    code, text, _ = run(["snap", out], capsys)
    assert json.loads(text)["cost"] == side["c_min"] == "2"


def test_gen_reduction_unsat_needs_more_than_c_min(capsys, tmp_path):
    out = tmp_path / "u.json"
    run(["gen-reduction", FORMULAS / "unsat3.cnf", "--out", out], capsys)
    c_min = read_json(tmp_path / "u.sidecar.json")["c_min"]
    code, text, _ = run(["snap", out, "--strategy", "full", "--cost-cap", c_min], capsys)
    assert code == 2 and json.loads(text)["cost_cap"] == c_min


def test_gen_reduction_errors(capsys, tmp_path):
    bad = tmp_path / "bad.cnf"
    bad.write_text("p cnf 4 2\n1 3 0\n2 4 0\n")
    assert run(["gen-reduction", bad, "--out", tmp_path / "o.json"], capsys)[0] == 4
    bad.write_text("p cnf 2 1\n1 -2 0\n")
    assert run(["gen-reduction", bad, "--out", tmp_path / "o.json"], capsys)[0] == 1


def test_svg_is_presentation_only_and_stable(capsys, tmp_path):
    src = FIXTURES / "curated" / "rotation_flip_a.json"
    code_a, plain, _ = run(["snap", src], capsys)
    code_b, with_svg, _ = run(["snap", src, "--svg", tmp_path / "a.svg"], capsys)
    run(["snap", src, "--svg", tmp_path / "b.svg"], capsys)
    assert (code_a, plain) == (code_b, with_svg)
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_console_script_entry_point():
    safe = str(FIXTURES / "integral_safe.json")
    proc = subprocess.run([sys.executable, "-m", "gridsnap.cli", "check", safe, safe],
                          capture_output=True, text=True)
    assert (proc.returncode, proc.stdout) == (0, "")
    half = str(FIXTURES / "k3.json")
    proc = subprocess.run([sys.executable, "-m", "gridsnap.cli", "check", half, half],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and "grid point" in proc.stderr
