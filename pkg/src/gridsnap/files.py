"""JSON instance and solution files.

Coordinates are written as exact rationals ("3/2", "7") and read from decimal
strings, "p/q" strings, integers or {"num", "den"} objects. Floats are refused
so nothing passes through binary rounding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping

from .core import Drawing, GridBox, Instance, Objective, format_rational, to_rational
from .solve import SolveResult


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class InstanceFile:
    instance: Instance
    options: Dict[str, Any] = field(default_factory=dict)

    @property
    def drawing(self) -> Drawing:
        return self.instance.drawing


def dumps(doc) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def _loads(text: str):
    def no_floats(s):
        raise ParseError(f"float literal {s} is not exact; write it as a string")

    try:
        return json.loads(text, parse_float=no_floats)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None


def instance_to_doc(inst: InstanceFile) -> dict:
    d = inst.drawing
    return {
        "box": {"x_max": d.box.x_max, "y_max": d.box.y_max},
        "vertices": [{"id": v, "x": format_rational(x), "y": format_rational(y)}
                     for v, (x, y) in d.positions.items()],
        "edges": [list(e) for e in d.edges],
        "objective": inst.instance.objective.kind.value,
        "options": dict(inst.options),
    }


def instance_from_doc(doc: Mapping) -> InstanceFile:
    try:
        box = GridBox(int(doc["box"]["x_max"]), int(doc["box"]["y_max"]))
        verts = [(str(v["id"]), (to_rational(v["x"]), to_rational(v["y"]))) for v in doc["vertices"]]
        edges = [tuple(e) for e in doc.get("edges", [])]
        if any(len(e) != 2 for e in edges):
            raise ParseError("every edge needs exactly two endpoints")
        objective = Objective.parse(doc.get("objective", "L1Sum"))
        options = dict(doc.get("options") or {})
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"malformed instance: {exc!r}") from None
    return InstanceFile(Instance(Drawing(verts, edges, box), objective), options)


def read_instance(path) -> InstanceFile:
    with open(path, encoding="utf-8") as fh:
        return instance_from_doc(_loads(fh.read()))


def write_instance(path, inst: InstanceFile) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(instance_to_doc(inst)))


def solution_to_doc(res: SolveResult, objective: Objective, strategy: str) -> dict:
    doc: Dict[str, Any] = {
        "status": res.status.value,
        "objective": objective.kind.value,
        "strategy": strategy,
        "stats": {
            "lazy_iterations": res.stats.lazy_iterations,
            "constraints_added": res.stats.constraints_added,
            "nodes_explored": res.stats.nodes_explored,
        },
    }
    if res.solution is not None:
        doc["positions"] = {v: list(p) for v, p in sorted(res.solution.positions.items())}
        doc["cost"] = format_rational(res.solution.objective_value)
        if objective.squared:
            doc["cost_is_squared"] = True
    return doc


def read_positions(path) -> Dict[str, tuple]:
    """Positions from a solution file, an instance file, or a bare {id: [x, y]} object."""
    with open(path, encoding="utf-8") as fh:
        doc = _loads(fh.read())
    if isinstance(doc, dict) and isinstance(doc.get("vertices"), list):
        try:
            doc = {str(v["id"]): [v["x"], v["y"]] for v in doc["vertices"]}
        except (KeyError, TypeError):
            raise ParseError("malformed vertex list") from None
    pos = doc.get("positions", doc) if isinstance(doc, dict) else None
    if not isinstance(pos, dict):
        raise ParseError("expected an object of positions")
    out = {}
    for v, p in pos.items():
        if not isinstance(p, list) or len(p) != 2:
            raise ParseError(f"position of {v!r} must be [x, y]")
        try:
            x, y = (to_rational(c) for c in p)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"position of {v!r}: {exc}") from None
        if x.denominator != 1 or y.denominator != 1:
            raise ParseError(f"position of {v!r} is not a grid point")
        out[str(v)] = (int(x), int(y))
    return out

