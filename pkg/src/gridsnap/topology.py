"""Topological-safety checker: compares a placement against a reference drawing."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Dict, List, Mapping, Tuple

from .core import Drawing, InvalidDrawing, OutOfBox, UnknownVertex
from .geometry import (SegmentRelation, ccw_key, classify_segments, compare_ccw, on_segment,
                       rotation_system, same_cyclic_order)

VERTEX_COINCIDENCE = "VertexCoincidence"
EDGE_CROSSING = "EdgeCrossing"
VERTEX_ON_EDGE = "VertexOnEdge"
CYCLIC_ORDER_MISMATCH = "CyclicOrderMismatch"
ZERO_LENGTH_EDGE = "ZeroLengthEdge"

_SAFE = (SegmentRelation.DISJOINT, SegmentRelation.SHARED_ENDPOINT_ONLY)


@dataclass(frozen=True, order=True)
class Violation:
    kind: str
    objects: Tuple

    def to_json(self) -> dict:
        names = {
            VERTEX_COINCIDENCE: ("v", "w"),
            EDGE_CROSSING: ("e1", "e2"),
            VERTEX_ON_EDGE: ("v", "e"),
            CYCLIC_ORDER_MISMATCH: ("v",),
            ZERO_LENGTH_EDGE: ("e",),
        }[self.kind]
        out = {"kind": self.kind}
        for k, obj in zip(names, self.objects):
            out[k] = list(obj) if isinstance(obj, tuple) else obj
        return out


def _interior(p, a, b) -> bool:
    return p != a and p != b and on_segment(p, a, b)


def check(reference: Drawing, positions: Mapping) -> List[Violation]:
    """All violations of topological safety, sorted canonically.

    An empty list means the placement keeps the drawing's topology: no shared
    points, no touching nonincident edges, no vertex inside an edge, and the
    same cyclic order (up to rotation) around every vertex of degree >= 3.
    """
    box = reference.box
    for v in reference.positions:
        if v not in positions:
            raise UnknownVertex(f"no position for vertex {v!r}")
    for v, p in positions.items():
        if v not in reference.positions:
            raise UnknownVertex(f"position given for unknown vertex {v!r}")
        if not box.contains(p):
            raise OutOfBox(f"vertex {v!r} placed outside the box")
    pos = {v: tuple(positions[v]) for v in reference.positions}
    edges = reference.edges
    edge_set = set(edges)
    out = set()

    by_point: Dict[tuple, List[str]] = {}
    for v in pos:
        by_point.setdefault(pos[v], []).append(v)
    for group in by_point.values():
        for v, w in combinations(sorted(group), 2):
            if (v, w) in edge_set:
                out.add(Violation(ZERO_LENGTH_EDGE, ((v, w),)))
            else:
                out.add(Violation(VERTEX_COINCIDENCE, (v, w)))

    for e1, e2 in combinations(edges, 2):
        if set(e1) & set(e2):
            continue
        a, b = pos[e1[0]], pos[e1[1]]
        c, d = pos[e2[0]], pos[e2[1]]
        if a == b or c == d:
            if a == b and c == d:
                hit = a == c
            elif a == b:
                hit = on_segment(a, c, d)
            else:
                hit = on_segment(c, a, b)
        else:
            hit = classify_segments(a, b, c, d) not in _SAFE
        if hit:
            out.add(Violation(EDGE_CROSSING, (e1, e2)))

    for e in edges:
        a, b = pos[e[0]], pos[e[1]]
        if a == b:
            continue
        for v, p in pos.items():
            if v not in e and _interior(p, a, b):
                out.add(Violation(VERTEX_ON_EDGE, (v, e)))

    ref_rot = rotation_system(reference)
    for v, order in ref_rot.items():
        if len(order) < 3:
            continue
        pv = pos[v]
        vecs = [(pos[w][0] - pv[0], pos[w][1] - pv[1]) for w in order]
        if any(vec == (0, 0) for vec in vecs):
            out.add(Violation(CYCLIC_ORDER_MISMATCH, (v,)))
            continue
        ranked = sorted(zip(vecs, order), key=lambda t: ccw_key(t[0]))
        distinct = all(compare_ccw(ranked[i][0], ranked[i + 1][0]) != 0
                       for i in range(len(ranked) - 1))
        if not distinct or not same_cyclic_order(order, [w for _, w in ranked]):
            out.add(Violation(CYCLIC_ORDER_MISMATCH, (v,)))
    return sorted(out)


def validate_drawing(drawing: Drawing) -> Drawing:
    """Raise InvalidDrawing unless the drawing is plane; returns it unchanged."""
    problems = check(drawing, drawing.positions)
    if problems:
        raise InvalidDrawing(f"drawing is not plane: {problems[0]}")
    return drawing
