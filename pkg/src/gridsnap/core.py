"""Exact domain model: boxes, drawings, objectives, instances, solutions."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

Rational = Fraction
Point = Tuple[Fraction, Fraction]
GridPoint = Tuple[int, int]
Edge = Tuple[str, str]


class GridSnapError(Exception):
    """Base class for all errors raised by the package."""


class InvalidDrawing(GridSnapError):
    pass


class UnknownVertex(GridSnapError):
    pass


class OutOfBox(GridSnapError):
    pass


def to_rational(value: Union[int, str, Fraction, Mapping]) -> Fraction:
    """Parse an exact rational from an int, "p/q" or decimal string, or {num, den}.

    Floats are rejected: they would smuggle binary rounding into the geometry.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not coordinates")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, Mapping):
        den = int(value.get("den", 1))
        if den <= 0:
            raise ValueError("denominator must be positive")
        return Fraction(int(value["num"]), den)
    raise TypeError(f"cannot read an exact rational from {type(value).__name__}")


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class GridBox:
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_max < 0 or self.y_max < 0:
            raise ValueError("box extents must be nonnegative")

    @property
    def size(self) -> int:
        """Largest extent, max(x_max, y_max)."""
        return max(self.x_max, self.y_max)

    def contains(self, p) -> bool:
        return 0 <= p[0] <= self.x_max and 0 <= p[1] <= self.y_max

    def points(self) -> List[GridPoint]:
        return [(x, y) for x in range(self.x_max + 1) for y in range(self.y_max + 1)]

    @property
    def num_points(self) -> int:
        return (self.x_max + 1) * (self.y_max + 1)


def edge_key(u: str, v: str) -> Edge:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Drawing:
    """A straight-line drawing with exact vertex positions inside a grid box.

    Structural invariants are enforced at construction; planarity is checked
    by :func:`gridsnap.topology.validate_drawing` since it needs the checker.
    """

    positions: Mapping[str, Point]
    edges: Tuple[Edge, ...]
    box: GridBox

    def __init__(self, vertices: Iterable, edges: Iterable, box: GridBox):
        pos: Dict[str, Point] = {}
        for item in vertices:
            vid, (x, y) = item
            vid = str(vid)
            if vid in pos:
                raise InvalidDrawing(f"duplicate vertex id {vid!r}")
            p = (to_rational(x), to_rational(y))
            if not box.contains(p):
                raise InvalidDrawing(f"vertex {vid!r} lies outside the box")
            pos[vid] = p
        seen_pos: Dict[Point, str] = {}
        for vid in sorted(pos):
            p = pos[vid]
            if p in seen_pos:
                raise InvalidDrawing(f"vertices {seen_pos[p]!r} and {vid!r} share a position")
            seen_pos[p] = vid
        es = set()
        for u, v in edges:
            u, v = str(u), str(v)
            if u == v:
                raise InvalidDrawing(f"self-loop at {u!r}")
            for w in (u, v):
                if w not in pos:
                    raise InvalidDrawing(f"edge references unknown vertex {w!r}")
            k = edge_key(u, v)
            if k in es:
                raise InvalidDrawing(f"duplicate edge {k}")
            es.add(k)
        object.__setattr__(self, "positions", dict(sorted(pos.items())))
        object.__setattr__(self, "edges", tuple(sorted(es)))
        object.__setattr__(self, "box", box)

    @property
    def vertices(self) -> List[str]:
        return list(self.positions)

    def neighbors(self) -> Dict[str, List[str]]:
        nbrs: Dict[str, List[str]] = {v: [] for v in self.positions}
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return nbrs

    def with_box(self, box: GridBox) -> "Drawing":
        return Drawing(self.positions.items(), self.edges, box)

    def __hash__(self):
        return hash((tuple(self.positions.items()), self.edges, self.box))

    def __eq__(self, other):
        if not isinstance(other, Drawing):
            return NotImplemented
        return (self.positions == other.positions and self.edges == other.edges
                and self.box == other.box)


class ObjectiveKind(enum.Enum):
    L1_SUM = "L1Sum"
    L2_SUM_SQUARED_LEX = "L2SumSquaredLex"
    MAX_MOVE_L2 = "MaxMoveL2"
    MAX_MOVE_L1 = "MaxMoveL1"
    MIN_HEIGHT = "MinHeight"


@dataclass(frozen=True)
class Objective:
    kind: ObjectiveKind = ObjectiveKind.L1_SUM

    @classmethod
    def parse(cls, name: str) -> "Objective":
        for k in ObjectiveKind:
            if k.value.lower() == name.lower() or k.name.lower() == name.lower():
                return cls(k)
        raise ValueError(f"unknown objective {name!r}")

    @property
    def squared(self) -> bool:
        """True when cost values are squared Euclidean lengths."""
        return self.kind in (ObjectiveKind.L2_SUM_SQUARED_LEX, ObjectiveKind.MAX_MOVE_L2)

    @property
    def combine(self) -> str:
        if self.kind in (ObjectiveKind.L1_SUM, ObjectiveKind.L2_SUM_SQUARED_LEX):
            return "sum"
        return "max"

    def vertex_cost(self, target: Point, p) -> Fraction:
        dx = abs(Fraction(p[0]) - target[0])
        dy = abs(Fraction(p[1]) - target[1])
        k = self.kind
        if k in (ObjectiveKind.L1_SUM, ObjectiveKind.MAX_MOVE_L1):
            return dx + dy
        if k in (ObjectiveKind.L2_SUM_SQUARED_LEX, ObjectiveKind.MAX_MOVE_L2):
            return dx * dx + dy * dy
        return Fraction(p[1])


L1 = Objective(ObjectiveKind.L1_SUM)


@dataclass(frozen=True)
class Instance:
    drawing: Drawing
    objective: Objective = L1

    @property
    def box(self) -> GridBox:
        return self.drawing.box


@dataclass(frozen=True)
class SolveStats:
    lazy_iterations: int = 0
    constraints_added: int = 0
    nodes_explored: int = 0


@dataclass(frozen=True)
class Solution:
    positions: Mapping[str, GridPoint]
    objective_value: Fraction
    stats: SolveStats = field(default_factory=SolveStats)

    def vector(self) -> Tuple[int, ...]:
        return position_vector(self.positions)


def position_vector(positions: Mapping[str, GridPoint]) -> Tuple[int, ...]:
    """Flattened coordinates by sorted vertex id; canonical tie-break key."""
    out: List[int] = []
    for v in sorted(positions):
        out.extend(positions[v])
    return tuple(out)


def _validate_positions(instance: Instance, positions: Mapping[str, Sequence]) -> None:
    box = instance.box
    for v in instance.drawing.positions:
        if v not in positions:
            raise UnknownVertex(f"no position for vertex {v!r}")
    for v, p in positions.items():
        if v not in instance.drawing.positions:
            raise UnknownVertex(f"position given for unknown vertex {v!r}")
        if not box.contains(p):
            raise OutOfBox(f"vertex {v!r} placed at {tuple(p)} outside the box")


def cost(instance: Instance, positions: Mapping[str, Sequence]) -> Fraction:
    """Objective value of a placement.

    Euclidean objectives return squared lengths (see ``Objective.squared``).
    """
    _validate_positions(instance, positions)
    obj = instance.objective
    terms = [obj.vertex_cost(x, positions[v]) for v, x in instance.drawing.positions.items()]
    if not terms:
        return Fraction(0)
    return sum(terms, Fraction(0)) if obj.combine == "sum" else max(terms)


def nearest_rounding(drawing: Drawing) -> Dict[str, GridPoint]:
    """Each vertex to its closest grid point; ties toward the smaller coordinate."""

    def rnd(q: Fraction) -> int:
        lo = q.numerator // q.denominator
        return lo + 1 if q - lo > Fraction(1, 2) else lo

    return {v: (rnd(x), rnd(y)) for v, (x, y) in drawing.positions.items()}
