"""The snapping ILP: variables, linearized objectives, addressable constraint families.

Constraint rows are generated on demand from *families*; a family is one
instantiation of a constraint class for a tuple of graph objects, and is the
unit the lazy loop adds. Families know how to count their rows without
materializing them, which keeps the full model of large instances cheap to
hold.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import lcm
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from .core import Drawing, GridBox, GridSnapError, Instance, ObjectiveKind, format_rational
from .geometry import Direction, DirectionSet, enumerate_directions, rotation_system
from .topology import (CYCLIC_ORDER_MISMATCH, EDGE_CROSSING, VERTEX_COINCIDENCE, VERTEX_ON_EDGE,
                       ZERO_LENGTH_EDGE, Violation)


class UnsupportedObjective(GridSnapError):
    pass


class IncidentEdges(GridSnapError):
    pass


class DegreeTooSmall(GridSnapError):
    pass


COINCIDENCE = "coincidence"
SEPARATION = "separation"
POINT_SEPARATION = "point_separation"
DIRECTION = "direction"
CYCLIC = "cyclic"

# which checker outcome each family rules out
FAMILY_VIOLATIONS = {
    COINCIDENCE: (VERTEX_COINCIDENCE, ZERO_LENGTH_EDGE),
    SEPARATION: (EDGE_CROSSING, VERTEX_ON_EDGE),
    POINT_SEPARATION: (VERTEX_ON_EDGE,),
    DIRECTION: (CYCLIC_ORDER_MISMATCH,),
    CYCLIC: (CYCLIC_ORDER_MISMATCH, VERTEX_ON_EDGE),
}


class Family(NamedTuple):
    kind: str
    objects: Tuple


class VarRef(NamedTuple):
    kind: str
    objects: Tuple
    lb: Fraction
    ub: Optional[Fraction]
    integer: bool

    @property
    def name(self) -> str:
        return var_name(self.kind, self.objects)

    @property
    def binary(self) -> bool:
        return self.integer and self.lb == 0 and self.ub == 1


@dataclass(frozen=True)
class LinearConstraint:
    terms: Tuple[Tuple[Fraction, VarRef], ...]
    sense: str  # "<=", ">=", "="
    rhs: Fraction
    tag: Tuple

    def is_integral(self) -> bool:
        return (all(Fraction(c).denominator == 1 for c, _ in self.terms)
                and Fraction(self.rhs).denominator == 1)

    def holds(self, values: Dict[str, Fraction]) -> bool:
        lhs = sum((Fraction(c) * values[v.name] for c, v in self.terms), Fraction(0))
        if self.sense == "<=":
            return lhs <= self.rhs
        if self.sense == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


_SAFE_ID = re.compile(r"^[A-Za-z0-9.]+$")


def _ident(x) -> str:
    if isinstance(x, tuple):
        return "~".join(_ident(p) for p in x)
    if isinstance(x, int):
        return str(x) if x >= 0 else f"m{-x}"
    s = str(x)
    if _SAFE_ID.match(s):
        return s
    return "".join(c if c.isalnum() or c == "." else f"'{ord(c):x}'" for c in s)


_PREFIX = {
    "CoordX": "x", "CoordY": "y", "AbsDevX": "dx", "AbsDevY": "dy", "Gamma": "g",
    "Alpha": "a", "Beta": "b", "Indicator": "c", "HeightBound": "h", "MoveBound": "m",
}


def var_name(kind: str, objects: Tuple) -> str:
    parts = [_PREFIX[kind]]
    for o in objects:
        if isinstance(o, Direction):
            parts.extend((_ident(o.dx), _ident(o.dy)))
        else:
            parts.append(_ident(o))
    return "_".join(parts)


def model_directions(box: GridBox) -> DirectionSet:
    """Direction set used by the model: primitive vectors of the square range.

    The box's own range is not enough for separating nonincident edges in
    non-square boxes; see ``tests/test_model.py::test_box_range_directions_miss_separation``.
    """
    m = box.size
    return enumerate_directions(GridBox(m, m))


def _big_m(d: Direction, size: int) -> int:
    return (abs(d.dx) + abs(d.dy)) * size + 1


class Model:
    """Variables, objective and constraint families of one snapping ILP."""

    def __init__(self, instance: Instance, dirs: Optional[DirectionSet] = None,
                 families: Iterable[Family] = ()):
        self.instance = instance
        self.drawing: Drawing = instance.drawing
        self.box = instance.box
        self.dirs = dirs if dirs is not None else model_directions(self.box)
        self.neighbors = self.drawing.neighbors()
        self.reference_order = rotation_system(self.drawing)
        self.families: Dict[Family, None] = {}
        self._nbr_sets = {v: set(ns) for v, ns in self.neighbors.items()}
        for f in families:
            self.add(f)

    # -- family bookkeeping -------------------------------------------------
    def add(self, family: Family) -> int:
        """Add a family; returns the number of rows it contributes (0 if present)."""
        family = self._canonical(family)
        if family in self.families:
            return 0
        self._validate(family)
        self.families[family] = None
        return self.family_rows(family)

    def __contains__(self, family) -> bool:
        return self._canonical(family) in self.families

    def _canonical(self, family: Family) -> Family:
        kind, objs = family
        if kind == COINCIDENCE:
            return Family(kind, tuple(sorted(objs)))
        if kind == SEPARATION:
            return Family(kind, tuple(sorted(tuple(sorted(e)) for e in objs)))
        if kind == POINT_SEPARATION:
            return Family(kind, (objs[0], tuple(sorted(objs[1]))))
        return Family(kind, tuple(objs))

    def _validate(self, family: Family) -> None:
        kind, objs = family
        if kind == SEPARATION and set(objs[0]) & set(objs[1]):
            raise IncidentEdges(f"edges {objs[0]} and {objs[1]} share a vertex")
        if kind == CYCLIC and len(self.neighbors[objs[0]]) <= 1:
            raise DegreeTooSmall(f"vertex {objs[0]!r} has degree <= 1")

    # -- counting -----------------------------------------------------------
    def family_rows(self, family: Family) -> int:
        n = len(self.dirs)
        kind, objs = family
        if kind == COINCIDENCE:
            return 5
        if kind == SEPARATION:
            return 1 + 4 * n
        if kind == POINT_SEPARATION:
            return 1 + 2 * n
        if kind == DIRECTION:
            return 1 + 3 * n
        return 1 + len(self.neighbors[objs[0]]) * n

    def family_vars(self, family: Family) -> int:
        n = len(self.dirs)
        kind, objs = family
        if kind == COINCIDENCE:
            return 4
        if kind in (SEPARATION, POINT_SEPARATION, DIRECTION):
            return n
        return len(self.neighbors[objs[0]])

    # quadratic objectives have no linear rows; their counts are zero

    def objective_rows(self) -> int:
        nv = len(self.drawing.positions)
        k = self.instance.objective.kind
        if self.instance.objective.squared:
            return 0
        if k == ObjectiveKind.MIN_HEIGHT:
            return nv
        if k == ObjectiveKind.MAX_MOVE_L1:
            return 5 * nv
        return 4 * nv

    def objective_vars(self) -> int:
        nv = len(self.drawing.positions)
        k = self.instance.objective.kind
        if self.instance.objective.squared:
            return 0
        if k == ObjectiveKind.MIN_HEIGHT:
            return 1
        if k == ObjectiveKind.MAX_MOVE_L1:
            return 2 * nv + 1
        return 2 * nv

    def num_rows(self) -> int:
        return self.objective_rows() + sum(self.family_rows(f) for f in self.families)

    def num_topology_rows(self) -> int:
        return sum(self.family_rows(f) for f in self.families)

    def num_vars(self) -> int:
        return (2 * len(self.drawing.positions) + self.objective_vars()
                + sum(self.family_vars(f) for f in self.families))

    # -- variables ----------------------------------------------------------
    def coord_vars(self) -> List[VarRef]:
        out = []
        for v in self.drawing.positions:
            out.append(VarRef("CoordX", (v,), Fraction(0), Fraction(self.box.x_max), True))
            out.append(VarRef("CoordY", (v,), Fraction(0), Fraction(self.box.y_max), True))
        return out

    def vars(self) -> List[VarRef]:
        seen: Dict[str, VarRef] = {}
        for v in self.coord_vars():
            seen[v.name] = v
        for row in self.rows():
            for _, var in row.terms:
                seen.setdefault(var.name, var)
        for _, var in self.objective_terms()[0]:
            seen.setdefault(var.name, var)
        return list(seen.values())

    # -- rows ---------------------------------------------------------------
    def objective_terms(self) -> Tuple[List[Tuple[Fraction, VarRef]], List[LinearConstraint]]:
        k = self.instance.objective.kind
        if self.instance.objective.squared:
            raise UnsupportedObjective(f"{k.value} is quadratic and has no linear objective row")
        if k == ObjectiveKind.MIN_HEIGHT:
            return objective_minheight(self.instance)
        if k == ObjectiveKind.MAX_MOVE_L1:
            return objective_maxmove(self.instance)
        return objective_l1(self.instance)

    def family_constraints(self, family: Family) -> List[LinearConstraint]:
        kind, objs = family
        if kind == COINCIDENCE:
            return coincidence_constraints(objs[0], objs[1], self.box)
        if kind == SEPARATION:
            return separation_constraints(objs[0], objs[1], self.dirs, self.box)
        if kind == POINT_SEPARATION:
            return point_separation_constraints(objs[0], objs[1], self.dirs, self.box)
        if kind == DIRECTION:
            return direction_constraints(objs[0], objs[1], self.dirs, self.box)
        v = objs[0]
        return cyclic_order_constraints(v, self.reference_order[v], self.dirs)

    def sorted_families(self) -> List[Family]:
        order = {COINCIDENCE: 0, SEPARATION: 1, POINT_SEPARATION: 2, DIRECTION: 3, CYCLIC: 4}
        return sorted(self.families, key=lambda f: (order[f.kind], f.objects))

    def rows(self) -> Iterator[LinearConstraint]:
        yield from self.objective_terms()[1]
        for f in self.sorted_families():
            yield from self.family_constraints(f)

    # -- lazy-loop helpers --------------------------------------------------
    def vertex_order_families(self, v: str) -> List[Family]:
        """Families pinning the cyclic order at v: directions, zero-length guards, order."""
        out = []
        for w in self.neighbors[v]:
            out.append(Family(COINCIDENCE, tuple(sorted((v, w)))))
            out.append(Family(DIRECTION, (v, w)))
        if len(self.neighbors[v]) > 1:
            out.append(Family(CYCLIC, (v,)))
        return out

    def families_for_violation(self, viol: Violation) -> List[Family]:
        """Families whose rows exclude every placement showing ``viol``."""
        kind, objs = viol.kind, viol.objects
        if kind == VERTEX_COINCIDENCE:
            return [Family(COINCIDENCE, tuple(sorted(objs)))]
        if kind == ZERO_LENGTH_EDGE:
            return [Family(COINCIDENCE, tuple(sorted(objs[0])))]
        if kind == EDGE_CROSSING:
            return [Family(SEPARATION, tuple(sorted(objs)))]
        if kind == CYCLIC_ORDER_MISMATCH:
            return self.vertex_order_families(objs[0])
        # vertex v inside edge e
        v, e = objs
        if not self.neighbors[v]:
            return [Family(POINT_SEPARATION, (v, e))]
        out = []
        for w in self.neighbors[v]:
            f = tuple(sorted((v, w)))
            shared = set(f) & set(e)
            if not shared:
                out.append(Family(SEPARATION, tuple(sorted((tuple(e), f)))))
            else:
                out.extend(self.vertex_order_families(shared.pop()))
        return out

    # -- export -------------------------------------------------------------
    def to_lp(self) -> str:
        return write_lp(self)


def _var(kind, objs, lb, ub, integer) -> VarRef:
    return VarRef(kind, tuple(objs), Fraction(lb), None if ub is None else Fraction(ub), integer)


def coord(axis: str, v: str, box: GridBox) -> VarRef:
    if axis == "x":
        return _var("CoordX", (v,), 0, box.x_max, True)
    return _var("CoordY", (v,), 0, box.y_max, True)


def _binary(kind, objs) -> VarRef:
    return _var(kind, objs, 0, 1, True)


def _row(terms, sense, rhs, tag) -> LinearConstraint:
    merged: Dict[VarRef, Fraction] = {}
    for c, var in terms:
        merged[var] = merged.get(var, Fraction(0)) + Fraction(c)
    clean = tuple((c, var) for var, c in merged.items() if c != 0)
    return LinearConstraint(clean, sense, Fraction(rhs), tag)


def _abs_rows(instance: Instance, v: str) -> List[LinearConstraint]:
    X, Y = instance.drawing.positions[v]
    box = instance.box
    rows = []
    for axis, target, kind in (("x", X, "AbsDevX"), ("y", Y, "AbsDevY")):
        q = target.denominator
        p = target.numerator
        dev = _var(kind, (v,), 0, None, False)
        c = coord(axis, v, box)
        rows.append(_row([(q, dev), (-q, c)], ">=", -p, ("objective", v, axis, "+")))
        rows.append(_row([(q, dev), (q, c)], ">=", p, ("objective", v, axis, "-")))
    return rows


def objective_l1(instance: Instance):
    """Sum of absolute deviations, each split as dev >= +-(coord - target)."""
    terms, rows = [], []
    for v in instance.drawing.positions:
        rows.extend(_abs_rows(instance, v))
        terms.append((Fraction(1), _var("AbsDevX", (v,), 0, None, False)))
        terms.append((Fraction(1), _var("AbsDevY", (v,), 0, None, False)))
    return terms, rows


def objective_minheight(instance: Instance):
    box = instance.box
    h = _var("HeightBound", (), 0, box.y_max, True)
    rows = [_row([(1, h), (-1, coord("y", v, box))], ">=", 0, ("objective", v, "height"))
            for v in instance.drawing.positions]
    return [(Fraction(1), h)], rows


def objective_maxmove(instance: Instance, exact_l2: bool = False):
    """Bottleneck objective over L1 movement.

    The ILP carries the L1 bound; exact Euclidean max movement is not linear
    and is only available through the embedded solver.
    """
    if exact_l2:
        raise UnsupportedObjective("maximum Euclidean movement is not expressible as an ILP row set")
    m = _var("MoveBound", (), 0, None, False)
    rows = []
    for v in instance.drawing.positions:
        rows.extend(_abs_rows(instance, v))
        rows.append(_row([(1, m), (-1, _var("AbsDevX", (v,), 0, None, False)),
                          (-1, _var("AbsDevY", (v,), 0, None, False))], ">=", 0,
                         ("objective", v, "bound")))
    return [(Fraction(1), m)], rows


def coincidence_constraints(v: str, w: str, box: GridBox) -> List[LinearConstraint]:
    """x_v != x_w or y_v != y_w, as four indicator binaries and big-M rows."""
    if v == w:
        raise ValueError("a vertex always coincides with itself")
    v, w = sorted((v, w))
    big = box.size + 1
    tag = (COINCIDENCE, v, w)
    b = [_binary("Indicator", (v, w, k)) for k in (1, 2, 3, 4)]
    rows = []
    for axis, (lo, hi) in (("x", (b[0], b[1])), ("y", (b[2], b[3]))):
        cv, cw = coord(axis, v, box), coord(axis, w, box)
        rows.append(_row([(1, cv), (-1, cw), (big, lo)], "<=", big - 1, tag))
        rows.append(_row([(1, cv), (-1, cw), (-big, hi)], ">=", 1 - big, tag))
    rows.append(_row([(1, bi) for bi in b], ">=", 1, tag))
    return rows


def _separation_rows(tag, gamma_objs, side1, side2, dirs, box) -> List[LinearConstraint]:
    k = box.size + 1  # 1/D_min; rows are scaled by it
    rows = [_row([(1, _binary("Gamma", gamma_objs + (d,))) for d in dirs], "=", 1, tag)]
    for d in dirs:
        g = _binary("Gamma", gamma_objs + (d,))
        big = _big_m(d, box.size)
        for v in side1:
            for w in side2:
                terms = [(k * d.dx, coord("x", v, box)), (-k * d.dx, coord("x", w, box)),
                         (k * d.dy, coord("y", v, box)), (-k * d.dy, coord("y", w, box)),
                         (-k * big, g)]
                rows.append(_row(terms, ">=", 1 - k * big, tag + (d,)))
    return rows


def separation_constraints(e1, e2, dirs: DirectionSet, box: GridBox) -> List[LinearConstraint]:
    """Nonincident edges separated by D_min along exactly one chosen direction."""
    e1, e2 = sorted((tuple(sorted(e1)), tuple(sorted(e2))))
    if set(e1) & set(e2):
        raise IncidentEdges(f"edges {e1} and {e2} share a vertex")
    return _separation_rows((SEPARATION, e1, e2), (e1, e2), e1, e2, dirs, box)


def point_separation_constraints(v: str, e, dirs: DirectionSet, box: GridBox):
    """Isolated vertex kept off an edge: the separation rows with a one-point side."""
    e = tuple(sorted(e))
    if v in e:
        raise IncidentEdges(f"vertex {v!r} is an endpoint of {e}")
    return _separation_rows((POINT_SEPARATION, v, e), (v, e), (v,), e, dirs, box)


def direction_constraints(v: str, w: str, dirs: DirectionSet, box: GridBox) -> List[LinearConstraint]:
    """alpha_D(v, w) = 1 forces w - v to be a positive multiple of D."""
    tag = (DIRECTION, v, w)
    rows = [_row([(1, _binary("Alpha", (v, w, d))) for d in dirs], "=", 1, tag)]
    xv, yv, xw, yw = coord("x", v, box), coord("y", v, box), coord("x", w, box), coord("y", w, box)
    for d in dirs:
        a = _binary("Alpha", (v, w, d))
        big = _big_m(d, box.size)
        crs = [(d.dy, xw), (-d.dy, xv), (-d.dx, yw), (d.dx, yv)]
        rows.append(_row(crs + [(big, a)], "<=", big, tag + (d,)))
        rows.append(_row(crs + [(-big, a)], ">=", -big, tag + (d,)))
        dt = [(d.dx, xw), (-d.dx, xv), (d.dy, yw), (-d.dy, yv)]
        rows.append(_row(dt + [(-big, a)], ">=", -big, tag + (d,)))
    return rows


def cyclic_order_constraints(v: str, neighbors: Sequence[str], dirs: DirectionSet) -> List[LinearConstraint]:
    """Output directions around v increase along the reference order except once."""
    k = len(neighbors)
    if k <= 1:
        raise DegreeTooSmall(f"vertex {v!r} has degree {k}")
    tag = (CYCLIC, v)
    rows = [_row([(1, _binary("Beta", (v, w))) for w in neighbors], "=", 1, tag)]
    for i, wi in enumerate(neighbors):
        nxt = neighbors[(i + 1) % k]
        for j, d1 in enumerate(dirs):
            terms = [(1, _binary("Alpha", (v, wi, d1))), (-1, _binary("Beta", (v, wi)))]
            terms += [(-1, _binary("Alpha", (v, nxt, d))) for d in dirs.dirs[j + 1:]]
            rows.append(_row(terms, "<=", 0, tag + (wi, d1)))
    return rows


def build_full_model(instance: Instance, dirs: Optional[DirectionSet] = None) -> Model:
    """Every family of the formulation instantiated up front."""
    model = Model(instance, dirs)
    d = instance.drawing
    for v, w in combinations(d.vertices, 2):
        model.add(Family(COINCIDENCE, (v, w)))
    for e1, e2 in combinations(d.edges, 2):
        if not set(e1) & set(e2):
            model.add(Family(SEPARATION, (e1, e2)))
    for v, ns in model.neighbors.items():
        if not ns:
            for e in d.edges:
                model.add(Family(POINT_SEPARATION, (v, e)))
        for w in ns:
            model.add(Family(DIRECTION, (v, w)))
        if len(ns) > 1:
            model.add(Family(CYCLIC, (v,)))
    return model


# -- LP text export ---------------------------------------------------------------

def _fmt_terms(terms, first_line_prefix: str) -> List[str]:
    pieces = []
    for c, var in terms:
        c = Fraction(c)
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        coef = "" if mag == 1 else format_rational(mag) + " "
        pieces.append(f"{sign} {coef}{var.name}")
    if pieces and pieces[0].startswith("+ "):
        pieces[0] = pieces[0][2:]
    lines, cur = [], first_line_prefix
    for i, p in enumerate(pieces):
        if i and i % 8 == 0:
            lines.append(cur)
            cur = "   "
        cur += " " + p
    lines.append(cur)
    return lines


def write_lp(model: Model) -> str:
    """CPLEX-LP text for the model; deterministic for golden-file comparison."""
    out = io.StringIO()
    obj_terms, _ = model.objective_terms()
    out.write(f"\\ gridsnap model: {len(model.drawing.positions)} vertices, "
              f"{len(model.drawing.edges)} edges, box {model.box.x_max}x{model.box.y_max}\n")
    out.write(f"\\ objective: {model.instance.objective.kind.value}\n")
    out.write("Minimize\n")
    for line in _fmt_terms(obj_terms, " obj:"):
        out.write(line + "\n")
    out.write("Subject To\n")
    variables: Dict[str, VarRef] = {v.name: v for v in model.coord_vars()}
    sense = {"<=": "<=", ">=": ">=", "=": "="}
    for i, row in enumerate(model.rows(), 1):
        if not row.is_integral():
            raise AssertionError(f"non-integral row {row.tag}")
        for _, var in row.terms:
            variables.setdefault(var.name, var)
        lines = _fmt_terms(row.terms, f" r{i}:")
        lines[-1] += f" {sense[row.sense]} {format_rational(row.rhs)}"
        for line in lines:
            out.write(line + "\n")
    for _, var in obj_terms:
        variables.setdefault(var.name, var)
    out.write("Bounds\n")
    for name in sorted(variables):
        var = variables[name]
        if var.binary:
            continue
        ub = "+inf" if var.ub is None else format_rational(var.ub)
        out.write(f" {format_rational(var.lb)} <= {name} <= {ub}\n")
    generals = sorted(n for n, v in variables.items() if v.integer and not v.binary)
    binaries = sorted(n for n, v in variables.items() if v.binary)
    if generals:
        out.write("General\n")
        for n in generals:
            out.write(f" {n}\n")
    if binaries:
        out.write("Binary\n")
        for n in binaries:
            out.write(f" {n}\n")
    out.write("End\n")
    return out.getvalue()
