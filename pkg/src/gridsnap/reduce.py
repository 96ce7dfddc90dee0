"""Compile planar monotone 3-SAT formulas into snapping instances.

Black vertices sit on integer points and white vertices on cell centers, so a
rounding costs at least |W| (L1) and reaches it exactly when every black vertex
stays put and every white vertex takes one of its four corners. The gadgets
below are arranged so that, at that cost, the only freedom left is choosing
corners along chains of white vertices ("channels"); the chains carry a truth
value from each variable's assignment vertex to the clauses.

Coordinates are built in a frame where the variable axis occupies rows 0 and
1, negated clauses grow upward from row 1 and unnegated clauses are the mirror
image (y -> 1 - y) below row 0. The frame is shifted into the box at the end.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .core import Drawing, GridBox, GridSnapError, InvalidDrawing
from .topology import validate_drawing

P = Tuple[int, int]
Node = Tuple[str, int, int]   # ("b", x, y) black point or ("w", x, y) white cell

HALF = Fraction(1, 2)
LEVEL_PITCH = 4
SLOT_PITCH = 4
FIRST_SLOT = 2
VAR_MARGIN = 2


class TooShort(GridSnapError):
    pass


class UnsupportedDegree(GridSnapError):
    pass


class LayoutInvalid(GridSnapError):
    pass


class Polarity(enum.Enum):
    ALL_POSITIVE = "AllPositive"
    ALL_NEGATIVE = "AllNegative"


@dataclass(frozen=True)
class Clause:
    polarity: Polarity
    literals: Tuple[int, ...]   # sorted 1-based variable indices

    @property
    def span(self) -> Tuple[int, int]:
        return self.literals[0], self.literals[-1]


@dataclass(frozen=True)
class MonotoneFormula:
    """A monotone CNF with an optional clause-level layout.

    Variables lie left to right on the axis in index order. Negated clauses are
    drawn above the axis and unnegated ones below, each at a positive level;
    clauses nested inside another clause's span need a lower level. When
    ``levels`` is None they are computed from the nesting.
    """

    num_vars: int
    clauses: Tuple[Clause, ...] = ()
    levels: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.num_vars < 1:
            raise ValueError("a formula needs at least one variable")
        for c in self.clauses:
            if not 2 <= len(c.literals) <= 3:
                raise UnsupportedDegree(f"clause {c.literals} has {len(c.literals)} literals")
            if len(set(c.literals)) != len(c.literals) or list(c.literals) != sorted(c.literals):
                raise ValueError(f"clause literals must be distinct and sorted: {c.literals}")
            if not all(1 <= v <= self.num_vars for v in c.literals):
                raise ValueError(f"clause {c.literals} names an unknown variable")
        if self.levels is not None and len(self.levels) != len(self.clauses):
            raise ValueError("one level per clause is required")

    @classmethod
    def from_lists(cls, num_vars: int, clauses: Iterable[Sequence[int]], levels=None):
        """Build from signed-integer clauses, e.g. ``[[1, 2], [-1, -3]]``."""
        out = []
        for lits in clauses:
            signs = {l > 0 for l in lits}
            if 0 in lits or len(signs) != 1:
                raise ValueError(f"clause {list(lits)} is not monotone")
            pol = Polarity.ALL_POSITIVE if signs.pop() else Polarity.ALL_NEGATIVE
            out.append(Clause(pol, tuple(sorted(abs(l) for l in lits))))
        return cls(num_vars, tuple(out), None if levels is None else tuple(levels))

    def evaluate(self, assignment: Dict[int, bool]) -> bool:
        for c in self.clauses:
            want = c.polarity is Polarity.ALL_POSITIVE
            if not any(assignment[v] == want for v in c.literals):
                return False
        return True

    def clause_levels(self) -> Tuple[int, ...]:
        """Validated levels: the given ones, or computed from span nesting."""
        for side in Polarity:
            idx = [j for j, c in enumerate(self.clauses) if c.polarity is side]
            for j, k in itertools.combinations(idx, 2):
                (a, b), (c, d) = self.clauses[j].span, self.clauses[k].span
                if (a, b) == (c, d):
                    raise LayoutInvalid(f"clauses {j + 1} and {k + 1} have the same span")
                if a < c < b < d or c < a < d < b:
                    raise LayoutInvalid(f"clauses {j + 1} and {k + 1} interleave")
                for outer, inner in ((j, k), (k, j)):
                    if _nested(self.clauses[inner], self.clauses[outer]):
                        mids = self.clauses[outer].literals[1:-1]
                        lo, hi = self.clauses[inner].span
                        if any(lo < m < hi for m in mids):
                            raise LayoutInvalid(
                                f"clause {outer + 1} reaches a variable under clause {inner + 1}")
        if self.levels is None:
            return _auto_levels(self.clauses)
        for j, h in enumerate(self.levels):
            if h < 1:
                raise LayoutInvalid(f"clause {j + 1} has level {h}; levels start at 1")
        for j, k in itertools.permutations(range(len(self.clauses)), 2):
            cj, ck = self.clauses[j], self.clauses[k]
            if cj.polarity is ck.polarity and _nested(cj, ck) and self.levels[j] >= self.levels[k]:
                raise LayoutInvalid(f"clause {j + 1} is nested in clause {k + 1} but not below it")
        return self.levels


def _nested(inner: Clause, outer: Clause) -> bool:
    (a, b), (c, d) = inner.span, outer.span
    return c <= a and b <= d and (a, b) != (c, d)


def _auto_levels(clauses: Sequence[Clause]) -> Tuple[int, ...]:
    levels: Dict[int, int] = {}
    order = sorted(range(len(clauses)), key=lambda j: clauses[j].span[1] - clauses[j].span[0])
    for j in order:
        below = [levels[k] for k in levels
                 if clauses[k].polarity is clauses[j].polarity and _nested(clauses[k], clauses[j])]
        levels[j] = 1 + max(below, default=0)
    return tuple(levels[j] for j in range(len(clauses)))


def parse_formula(text: str) -> MonotoneFormula:
    """Read DIMACS CNF; ``c level <clause> <level>`` comment lines give a layout.

    Clause numbers in level lines are 1-based in file order. Either every
    clause gets a level or none does.
    """
    num_vars = None
    tokens: List[int] = []
    levels: Dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        parts = line.split()
        if parts[0] == "c":
            if len(parts) >= 2 and parts[1] == "level":
                if len(parts) != 4:
                    raise ValueError(f"line {lineno}: expected 'c level <clause> <level>'")
                levels[int(parts[2])] = int(parts[3])
            continue
        if parts[0] == "p":
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"line {lineno}: expected 'p cnf <vars> <clauses>'")
            num_vars = int(parts[2])
            continue
        try:
            tokens.extend(int(t) for t in parts)
        except ValueError:
            raise ValueError(f"line {lineno}: not a clause: {raw!r}") from None
    if num_vars is None:
        raise ValueError("missing 'p cnf' header")
    clauses, cur = [], []
    for t in tokens:
        if t == 0:
            clauses.append(cur)
            cur = []
        else:
            cur.append(t)
    if cur:
        raise ValueError("last clause is not terminated by 0")
    lv = None
    if levels:
        if sorted(levels) != list(range(1, len(clauses) + 1)):
            raise ValueError("level lines must cover every clause exactly once")
        lv = [levels[j + 1] for j in range(len(clauses))]
    return MonotoneFormula.from_lists(num_vars, clauses, lv)


def format_formula(formula: MonotoneFormula) -> str:
    lines = [f"p cnf {formula.num_vars} {len(formula.clauses)}"]
    if formula.levels is not None:
        lines[:0] = [f"c level {j + 1} {h}" for j, h in enumerate(formula.levels)]
    for c in formula.clauses:
        sign = 1 if c.polarity is Polarity.ALL_POSITIVE else -1
        lines.append(" ".join(str(sign * v) for v in c.literals) + " 0")
    return "\n".join(lines) + "\n"


# -- fragments ---------------------------------------------------------------

@dataclass
class Fragment:
    """Part of a gadget drawing on the integer lattice.

    ``free`` are corners reserved as rounding targets for white vertices and
    ``clear`` are points that must stay empty of black vertices; both win over
    wall points when fragments are merged, which is how tunnels open into
    bends, variables and clauses.
    """

    blacks: Set[P] = field(default_factory=set)
    whites: Set[P] = field(default_factory=set)      # lower-left corner of the cell
    edges: Set[Tuple[Node, Node]] = field(default_factory=set)
    free: Set[P] = field(default_factory=set)
    clear: Set[P] = field(default_factory=set)
    names: Dict[Node, str] = field(default_factory=dict)

    def wall(self, points: Sequence[P]) -> None:
        self.blacks.update(points)
        for a, b in zip(points, points[1:]):
            self.edges.add(_edge(("b",) + a, ("b",) + b))

    def merge(self, other: "Fragment") -> "Fragment":
        dup = self.whites & other.whites
        if dup:
            raise LayoutInvalid(f"two gadgets place a white vertex in cell {min(dup)}")
        self.blacks |= other.blacks
        self.whites |= other.whites
        self.edges |= other.edges
        self.free |= other.free
        self.clear |= other.clear
        self.names.update(other.names)
        return self

    def mirrored(self) -> "Fragment":
        """Reflect through the line y = 1/2."""

        def node(n: Node) -> Node:
            return (n[0], n[1], 1 - n[2]) if n[0] == "b" else (n[0], n[1], -n[2])

        out = Fragment()
        out.blacks = {(x, 1 - y) for x, y in self.blacks}
        out.whites = {(x, -y) for x, y in self.whites}
        out.edges = {_edge(node(a), node(b)) for a, b in self.edges}
        out.free = {(x, 1 - y) for x, y in self.free}
        out.clear = {(x, 1 - y) for x, y in self.clear}
        out.names = {node(n): s for n, s in self.names.items()}
        return out


def _edge(a: Node, b: Node) -> Tuple[Node, Node]:
    return (a, b) if a <= b else (b, a)


def _side_normal(u: P, side: str) -> P:
    if side == "left":
        return (-u[1], u[0])
    if side == "right":
        return (u[1], -u[0])
    raise ValueError(f"side must be 'left' or 'right', not {side!r}")


def _unit(a: P, b: P) -> Tuple[P, int]:
    dx, dy = b[0] - a[0], b[1] - a[1]
    if dx and dy:
        raise ValueError("tunnels run along an axis")
    n = abs(dx) + abs(dy)
    if n == 0:
        raise TooShort("tunnel has zero length")
    return ((dx > 0) - (dx < 0), (dy > 0) - (dy < 0)), n


def line_gadget(start: P, end: P, side: str = "left") -> Fragment:
    """A straight tunnel: one white vertex per unit step, walls on both sides.

    The whites sit on ``side`` of the travel direction, so each can round to
    the two path points of its step; the wall behind them blocks the other two
    corners. Consecutive whites share a path point, which is what makes a push
    propagate from one end to the other.
    """
    u, n = _unit(start, end)
    if n < 2:
        raise TooShort(f"tunnel from {start} to {end} is shorter than 2")
    nx, ny = _side_normal(u, side)
    path = [(start[0] + i * u[0], start[1] + i * u[1]) for i in range(n + 1)]
    frag = Fragment()
    frag.free.update(path)
    for p, q in zip(path, path[1:]):
        xs = (p[0], q[0], p[0] + nx, q[0] + nx)
        ys = (p[1], q[1], p[1] + ny, q[1] + ny)
        frag.whites.add((min(xs), min(ys)))
    frag.wall([(x + nx, y + ny) for x, y in path])
    frag.wall([(x - nx, y - ny) for x, y in path])
    return frag


def bend_gadget(corner: P, in_dir: P, out_dir: P, side: str = "left") -> Fragment:
    """Close the outer wall where a tunnel turns away from its white side.

    The inner walls need no piece of their own: their points on the turned
    path are free and drop out when fragments are merged.
    """
    for d in (in_dir, out_dir):
        if abs(d[0]) + abs(d[1]) != 1:
            raise ValueError("bend directions must be axis unit vectors")
    if in_dir[0] * out_dir[0] + in_dir[1] * out_dir[1] != 0:
        raise ValueError("bend directions must be perpendicular")
    n_in, n_out = _side_normal(in_dir, side), _side_normal(out_dir, side)
    if n_in != (-out_dir[0], -out_dir[1]):
        raise ValueError("a bend must turn away from the white side")
    a = (corner[0] + n_in[0], corner[1] + n_in[1])
    b = (corner[0] + n_out[0], corner[1] + n_out[1])
    outer = (a[0] + n_out[0], a[1] + n_out[1])
    frag = Fragment()
    frag.wall([a, outer, b])
    return frag


@dataclass(frozen=True)
class Port:
    """Where a leg leaves the variable gadget: the path column and white side."""

    column: int
    side: str


def variable_gadget(var: int, num_pos: int, num_neg: int, x0: int = 0,
                    neg_sides: Optional[Sequence[str]] = None,
                    pos_sides: Optional[Sequence[str]] = None):
    """Assignment vertex between two black posts, with leg ports above and below.

    The white assignment vertex at (x0+1/2, 1/2) rounds up or down; its long
    edges then run along row 1 or row 0 and block the first corner of every
    leg on that side, pushing those legs. Up means True: it pushes the negated
    legs above. Returns the fragment, its width, and the (neg, pos) ports.
    """
    neg_sides = list(neg_sides or ["left"] * num_neg)
    pos_sides = list(pos_sides or ["left"] * num_pos)
    if len(neg_sides) != num_neg or len(pos_sides) != num_pos:
        raise ValueError("one side per leg is required")
    n = max(num_neg, num_pos)
    width = max(3, FIRST_SLOT + SLOT_PITCH * (n - 1) + 3) if n else 3
    frag = Fragment()
    a = ("w", x0, 0)
    posts = [("b", x0, 0), ("b", x0, 1), ("b", x0 + width, 0), ("b", x0 + width, 1)]
    frag.whites.add((x0, 0))
    frag.names[a] = f"A{var}"
    for p in posts:
        frag.blacks.add(p[1:])
        frag.edges.add(_edge(a, p))
    frag.edges.add(_edge(posts[0], posts[1]))
    frag.edges.add(_edge(posts[2], posts[3]))
    frag.free.update({(x0 + 1, 0), (x0 + 1, 1)})
    frag.clear.update((x, y) for x in range(x0 + 1, x0 + width) for y in (0, 1))
    ports = []
    for sides in (neg_sides, pos_sides):
        row = []
        for k, side in enumerate(sides):
            c = x0 + FIRST_SLOT + SLOT_PITCH * k
            row.append(Port(c + 1, side))
            first = (c, c + 1) if side == "left" else (c + 1, c + 2)
            y = 1 if sides is neg_sides else 0
            frag.free.update((x, y) for x in first)
        ports.append(row)
    return frag, width, ports[0], ports[1]


def clause_gadget(polarity: Polarity, degree: int, at: P = (0, 0)) -> Fragment:
    """Satisfaction vertex with ``degree`` equal-cost targets at leg ends.

    ``at`` = (c, r) puts the white at (c+3/2, r-1/2) for a negated clause whose
    arms run along row r; its targets are the middle leg's end (c+1, r-1) and
    the two arm ends (c+1, r), (c+2, r). A degree-2 clause seals the middle
    target with a black vertex. Unnegated clauses are the mirror image.
    """
    if degree not in (2, 3):
        raise UnsupportedDegree(f"clause gadgets have degree 2 or 3, not {degree}")
    c, r = at
    frag = Fragment()
    frag.whites.add((c + 1, r - 1))
    frag.wall([(c + 1, r + 1), (c + 2, r + 1)])
    frag.free.update({(c + 1, r), (c + 2, r)})
    if degree == 3:
        frag.blacks.add((c + 2, r - 1))
        frag.free.add((c + 1, r - 1))
    else:
        frag.wall([(c + 1, r - 1), (c + 2, r - 1)])
    if polarity is Polarity.ALL_POSITIVE:
        frag = frag.mirrored()
    return frag


# -- compile -------------------------------------------------------------------

@dataclass(frozen=True)
class GadgetInstance:
    drawing: Drawing
    white_vertices: FrozenSet[str]
    c_min: Fraction
    assignment_vertices: Dict[int, str] = field(default_factory=dict)
    satisfaction_vertices: Dict[int, str] = field(default_factory=dict)

    def read_assignment(self, positions) -> Dict[int, bool]:
        """Truth values from rounded assignment vertices (up means True)."""
        out = {}
        for var, vid in self.assignment_vertices.items():
            out[var] = positions[vid][1] > self.drawing.positions[vid][1]
        return out


def _leg_order(formula: MonotoneFormula, levels, side: Polarity):
    """Per variable, its clauses on one side in left-to-right leg order."""
    legs: Dict[int, List[int]] = {v: [] for v in range(1, formula.num_vars + 1)}
    for v in legs:
        right, middle, left = [], [], []
        for j, c in enumerate(formula.clauses):
            if c.polarity is not side or v not in c.literals:
                continue
            if v == c.span[1]:
                right.append(j)
            elif v == c.span[0]:
                left.append(j)
            else:
                middle.append(j)
        if len(middle) > 1:
            raise LayoutInvalid(f"variable {v} is the middle literal of two clauses on one side")
        right.sort(key=lambda j: levels[j])
        left.sort(key=lambda j: -levels[j])
        legs[v] = right + middle + left
    return legs


def compile(formula: MonotoneFormula) -> GadgetInstance:
    """Assemble the gadgets for ``formula``; the optimum is c_min iff it is satisfiable."""
    levels = formula.clause_levels()
    legs = {side: _leg_order(formula, levels, side) for side in Polarity}

    def side_of(j, v):
        return "right" if v == formula.clauses[j].span[1] and v != formula.clauses[j].span[0] else "left"

    frag = Fragment()
    port: Dict[Tuple[int, int], Port] = {}
    x0 = 0
    for v in range(1, formula.num_vars + 1):
        neg, pos = legs[Polarity.ALL_NEGATIVE][v], legs[Polarity.ALL_POSITIVE][v]
        vf, width, nports, pports = variable_gadget(
            v, len(pos), len(neg), x0,
            neg_sides=[side_of(j, v) for j in neg], pos_sides=[side_of(j, v) for j in pos])
        frag.merge(vf)
        for j, pt in itertools.chain(zip(neg, nports), zip(pos, pports)):
            port[j, v] = pt
        x0 += width + VAR_MARGIN

    sat_names: Dict[int, str] = {}
    for j, c in enumerate(formula.clauses):
        r = 1 + LEVEL_PITCH * levels[j]
        lo, hi = c.span
        p1, p3 = port[j, lo].column, port[j, hi].column
        p2 = port[j, c.literals[1]].column if len(c.literals) == 3 else p1 + 3
        cf = Fragment()
        try:
            cf.merge(line_gadget((p1, 1), (p1, r), "left"))
            cf.merge(bend_gadget((p1, r), (0, 1), (1, 0), "left"))
            cf.merge(line_gadget((p1, r), (p2, r), "left"))
            cf.merge(line_gadget((p3, 1), (p3, r), "right"))
            cf.merge(bend_gadget((p3, r), (0, 1), (-1, 0), "right"))
            cf.merge(line_gadget((p3, r), (p2 + 1, r), "right"))
            if len(c.literals) == 3:
                cf.merge(line_gadget((p2, 1), (p2, r - 1), "left"))
            cf.merge(clause_gadget(Polarity.ALL_NEGATIVE, len(c.literals), (p2 - 1, r)))
        except TooShort as exc:
            raise LayoutInvalid(f"clause {j + 1}: {exc}") from None
        cf.names[("w", p2, r - 1)] = f"S{j + 1}"
        if c.polarity is Polarity.ALL_POSITIVE:
            cf = cf.mirrored()
        frag.merge(cf)
        sat_names[j + 1] = f"S{j + 1}"
    return _finalize(frag, formula, sat_names)


def fragment_drawing(frag: Fragment) -> Tuple[Drawing, List[str]]:
    """Turn a fragment into a validated drawing shifted into its box.

    Returns the drawing and the ids of its white vertices. Raises LayoutInvalid
    when a white vertex has a corner that is neither reserved nor walled off,
    when a target is shared by more than two whites, or when pieces overlap.
    """
    blocked = frag.clear | frag.free
    blacks = frag.blacks - blocked
    edges = [(a, b) for a, b in frag.edges
             if all(n[0] == "w" or n[1:] in blacks for n in (a, b))]

    # every white corner must be a reserved target or a black vertex
    corner_use: Dict[P, int] = {}
    for x, y in frag.whites:
        for p in ((x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)):
            if p in frag.free:
                corner_use[p] = corner_use.get(p, 0) + 1
            elif p not in blacks and p not in frag.clear:
                raise LayoutInvalid(f"white cell {(x, y)} has an unguarded corner {p}")
    crowded = sorted(p for p, k in corner_use.items() if k > 2)
    if crowded:
        raise LayoutInvalid(f"grid point {crowded[0]} is a target of more than two white vertices")

    pts = list(blacks) + [(x + 1, y + 1) for x, y in frag.whites] + list(frag.whites)
    dx = -min(p[0] for p in pts)
    dy = -min(p[1] for p in pts)
    box = GridBox(max(p[0] for p in pts) + dx, max(p[1] for p in pts) + dy)

    def vid(n: Node) -> str:
        if n in frag.names:
            return frag.names[n]
        return f"{n[0]}{n[1] + dx}_{n[2] + dy}"

    verts = []
    for x, y in sorted(blacks):
        verts.append((vid(("b", x, y)), (x + dx, y + dy)))
    whites = []
    for x, y in sorted(frag.whites):
        w = vid(("w", x, y))
        whites.append(w)
        verts.append((w, (x + dx + HALF, y + dy + HALF)))
    drawing = Drawing(verts, [(vid(a), vid(b)) for a, b in edges], box)
    try:
        validate_drawing(drawing)
    except InvalidDrawing as exc:
        raise LayoutInvalid(f"gadgets overlap: {exc}") from None
    for v, (x, y) in drawing.positions.items():
        half = v in whites
        assert (x.denominator == 2 and y.denominator == 2) if half else (
            x.denominator == 1 and y.denominator == 1), v
    return drawing, whites


def _finalize(frag: Fragment, formula: MonotoneFormula, sat_names) -> GadgetInstance:
    drawing, whites = fragment_drawing(frag)
    return GadgetInstance(
        drawing=drawing,
        white_vertices=frozenset(whites),
        c_min=Fraction(len(whites)),
        assignment_vertices={v: f"A{v}" for v in range(1, formula.num_vars + 1)},
        satisfaction_vertices=sat_names,
    )
