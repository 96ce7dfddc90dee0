"""Acceptance criteria 1-7; the terminal summary prints one PASS/FAIL line per criterion."""

import random
import subprocess
import sys
from fractions import Fraction
from itertools import combinations, product

import pytest

from gridsnap import (Drawing, GridBox, Instance, Objective, ObjectiveKind, SolveConfig, Status,
                      brute_force, build_full_model, check, enumerate_directions, nearest_rounding,
                      snap_full, snap_lazy)
from gridsnap.cli import rescale
from gridsnap.files import dumps
from gridsnap.reduce import compile, parse_formula

from conftest import CURATED, FIXTURES, load
from oracles import RowOracle, atan2_key, brute_direction_count, random_drawing

FORMULAS = FIXTURES / "formulas"


def agree(inst):
    full, lazy, brute = snap_full(inst), snap_lazy(inst), brute_force(inst)
    assert full.status is lazy.status is brute.status, (full.status, lazy.status, brute.status)
    if brute.status is Status.OPTIMAL:
        assert full.cost == lazy.cost == brute.cost
        for res in (full, lazy, brute):
            assert check(inst.drawing, res.solution.positions) == []
        assert full.solution.positions == lazy.solution.positions == brute.solution.positions
    return brute.status


def test_criterion_1_oracle_equivalence(record_property):
    rng = random.Random(20240611)
    statuses = {}
    for _ in range(220):
        d = random_drawing(rng, rng.randint(1, 3), rng.randint(1, 3), rng.randint(1, 4))
        s = agree(Instance(d))
        statuses[s] = statuses.get(s, 0) + 1
    for path in CURATED:
        agree(load(f"curated/{path.name}"))
    record_property("note", f"220 random + {len(CURATED)} curated instances, statuses "
                            f"{ {k.value: v for k, v in statuses.items()} }")
    assert len(CURATED) == 10


def feasible_set_matches(drawing):
    model = build_full_model(Instance(drawing))
    oracle = RowOracle(model)
    for combo in product(drawing.box.points(), repeat=len(drawing.positions)):
        pos = dict(zip(drawing.vertices, combo))
        assert oracle.feasible(pos) == (check(drawing, pos) == []), pos
    return drawing.box.num_points ** len(drawing.positions)


def test_criterion_2_feasible_set_exactness(record_property):
    box = GridBox(2, 2)
    placements = 0
    refs = 0
    for p, q in combinations(box.points(), 2):
        for edges in ([], [("a", "b")]):
            placements += feasible_set_matches(Drawing([("a", p), ("b", q)], edges, box))
            refs += 1
    tri = [("a", (0, 0)), ("b", (2, 0)), ("c", (1, 2))]
    selected = [
        Drawing(tri, [], box),
        Drawing(tri, [("a", "b")], box),
        Drawing(tri, [("a", "b"), ("b", "c")], box),
        Drawing(tri, [("a", "b"), ("b", "c"), ("a", "c")], box),
        Drawing([("a", (0, 0)), ("b", (2, 2)), ("c", (0, 2))], [("a", "b")], box),
        Drawing([("c", (1, 1)), ("e", (2, 1)), ("n", (1, 2)), ("w", (0, 1))],
                [("c", "e"), ("c", "n"), ("c", "w")], box),
    ]
    for d in selected:
        placements += feasible_set_matches(d)
    record_property("note", f"{refs} two-vertex and {len(selected)} selected drawings, "
                            f"{placements} placements compared")


def test_criterion_3_direction_sets(record_property):
    boxes = [(x, y) for x in range(7) for y in range(7) if x or y]
    assert (1, 5) in boxes
    for x, y in boxes:
        dirs = list(enumerate_directions(GridBox(x, y)))
        assert len(dirs) == brute_direction_count(x, y), (x, y)
        assert dirs == sorted(dirs, key=atan2_key), (x, y)
    record_property("note", f"{len(boxes)} boxes up to 6x6, counts and CCW order match")


def test_criterion_4_reduction_soundness(record_property):
    sat = compile(parse_formula((FORMULAS / "xy.cnf").read_text()))
    res = snap_full(Instance(sat.drawing))
    assert res.status is Status.OPTIMAL and res.cost == sat.c_min == len(sat.white_vertices)

    mixed = compile(parse_formula((FORMULAS / "mixed3.cnf").read_text()))
    capped = snap_full(Instance(mixed.drawing), SolveConfig(cost_cap=mixed.c_min, canonical=False))
    assert capped.status is Status.OPTIMAL and capped.cost == mixed.c_min

    unsat = compile(parse_formula((FORMULAS / "unsat3.cnf").read_text()))
    proof = snap_full(Instance(unsat.drawing), SolveConfig(cost_cap=unsat.c_min, canonical=False))
    assert proof.status is Status.INFEASIBLE
    record_property("note", f"full-instance path: (x or y) optimum {res.cost} = c_min; "
                            f"mixed three-clause formula reaches c_min {mixed.c_min}; unsat 3-variable instance "
                            f"({len(unsat.drawing.positions)} vertices) has no solution of cost <= "
                            f"c_min {unsat.c_min}, so its optimum is >= c_min + 1")


def test_criterion_5_lazy_loop(record_property):
    safe = ["mesh11.json"] + [f"lazy/nearest_safe_{i}.json" for i in (1, 2, 3)]
    for name in safe:
        inst = load(name)
        res = snap_lazy(inst)
        assert res.status is Status.OPTIMAL
        assert res.solution.positions == nearest_rounding(inst.drawing)
        assert (res.stats.lazy_iterations, res.stats.constraints_added) == (1, 0), name
        assert not res.model.families
    for i in (1, 2, 3):
        inst = load(f"lazy/single_coincidence_{i}.json")
        first = [v.kind for v in check(inst.drawing, nearest_rounding(inst.drawing))]
        assert first == ["VertexCoincidence"]
        res = snap_lazy(inst)
        assert res.status is Status.OPTIMAL and res.stats.lazy_iterations == 2
        assert [f.kind for f in res.model.families] == ["coincidence"]
        assert res.stats.constraints_added == 5
    m = build_full_model(load("mesh9.json"))
    assert (m.num_rows(), m.num_vars()) == (8377, 2261)
    record_property("note", f"{len(safe)} nearest-safe instances: 1 iteration, 0 rows; 3 single-coincidence "
                            "instances: 2 iterations, one coincidence family; 9-vertex model 8377 x 2261")


def test_criterion_6_objective_variants(record_property):
    sat = compile(parse_formula((FORMULAS / "xy.cnf").read_text()))
    res = snap_full(Instance(sat.drawing, Objective(ObjectiveKind.MAX_MOVE_L2)))
    assert res.status is Status.OPTIMAL and res.cost == Fraction(1, 2)
    d = load("k4.json").drawing
    ref = rescale(d, GridBox(2, 3))
    height = snap_full(Instance(ref, Objective(ObjectiveKind.MIN_HEIGHT)))
    assert height.cost == 2
    # exhaustive: no safe placement of K4 fits in height 1, one fits in height 2
    for h, expect in ((1, False), (2, True)):
        pts = GridBox(2, h).points()
        found = any(not check(ref, dict(zip(ref.vertices, combo)))
                    for combo in product(pts, repeat=4) if len(set(combo)) == 4)
        assert found == expect
    record_property("note", "MaxMoveL2 on compiled (x or y): 1/2; K4 at width 2: height 2")


def cli(*args):
    proc = subprocess.run([sys.executable, "-m", "gridsnap.cli", *map(str, args)],
                          capture_output=True, timeout=600)
    return proc.returncode, proc.stdout


def test_criterion_7_determinism(tmp_path, record_property):
    instances = sorted(FIXTURES.glob("**/*.json"))
    runs = 0
    for path in instances:
        inst = load(path.relative_to(FIXTURES))
        pos = tmp_path / "pos.json"
        pos.write_text(dumps({v: list(p) for v, p in nearest_rounding(inst.drawing).items()}))
        for argv in (["snap", path], ["draw", path, "--width", 4, "--strategy", "full"],
                     ["check", path, pos]):
            assert cli(*argv) == cli(*argv), argv
            runs += 1
    for cnf in sorted(FORMULAS.glob("*.cnf")):
        outs = []
        for k in (0, 1):
            out = tmp_path / f"{cnf.stem}{k}.json"
            side = tmp_path / f"{cnf.stem}{k}.side.json"
            svg = tmp_path / f"{cnf.stem}{k}.svg"
            code, _ = cli("gen-reduction", cnf, "--out", out, "--sidecar", side, "--svg", svg)
            outs.append((code, out.read_bytes(), side.read_bytes(), svg.read_bytes()))
        assert outs[0] == outs[1], cnf
        runs += 1
    record_property("note", f"{runs} command/fixture pairs run twice, byte-identical")
