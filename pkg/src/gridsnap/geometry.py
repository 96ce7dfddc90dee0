"""Exact geometric primitives: direction sets, angular order, segment relations."""

from __future__ import annotations

import enum
import functools
from bisect import bisect_right
from math import gcd
from typing import Dict, List, NamedTuple, Sequence, Tuple

from .core import Drawing, GridBox, GridSnapError


class EmptyBox(GridSnapError):
    pass


class DegenerateSegment(GridSnapError):
    pass


class Direction(NamedTuple):
    dx: int
    dy: int


def _half(v) -> int:
    # 0 for angles in [0, pi), 1 for [pi, 2pi)
    return 0 if (v[1] > 0 or (v[1] == 0 and v[0] > 0)) else 1


def cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


def compare_ccw(a, b) -> int:
    """Compare two nonzero vectors by counterclockwise angle from +x.

    Returns -1, 0 or 1. Zero means same angle (parallel, same orientation).
    """
    ha, hb = _half(a), _half(b)
    if ha != hb:
        return -1 if ha < hb else 1
    c = cross(a, b)
    if c > 0:
        return -1
    if c < 0:
        return 1
    return 0


ccw_key = functools.cmp_to_key(compare_ccw)


def primitive(dx: int, dy: int) -> Direction:
    g = gcd(dx, dy)
    if g == 0:
        raise ValueError("zero vector has no direction")
    return Direction(dx // g, dy // g)


def rotate_cw(v):
    """Rotate a vector by -90 degrees."""
    return (v[1], -v[0])


class DirectionSet:
    """Primitive directions sorted counterclockwise starting at (1, 0)."""

    def __init__(self, dirs: Sequence[Direction]):
        self.dirs: Tuple[Direction, ...] = tuple(sorted(dirs, key=ccw_key))
        self.index: Dict[Direction, int] = {d: i for i, d in enumerate(self.dirs)}
        if len(self.index) != len(self.dirs):
            raise ValueError("duplicate directions")
        self._after: Dict[Tuple[int, int], Direction] = {}

    def __len__(self):
        return len(self.dirs)

    def __iter__(self):
        return iter(self.dirs)

    def __contains__(self, d):
        return tuple(d) in self.index

    def __getitem__(self, i):
        return self.dirs[i]

    def __repr__(self):
        return f"DirectionSet({len(self.dirs)} directions)"

    def first_after(self, v) -> Direction:
        """The first direction strictly counterclockwise of ``v`` (cyclically)."""
        v = (v[0], v[1])
        hit = self._after.get(v)
        if hit is None:
            i = self.index.get(primitive(*v))
            if i is None:
                i = bisect_right(self.dirs, ccw_key(v), key=ccw_key) - 1
            hit = self.dirs[(i + 1) % len(self.dirs)]
            self._after[v] = hit
        return hit


def enumerate_directions(box: GridBox) -> DirectionSet:
    """All primitive vectors in [-x_max, x_max] x [-y_max, y_max], CCW from (1, 0)."""
    if box.x_max == 0 and box.y_max == 0:
        raise EmptyBox("a 0x0 box has no directions")
    dirs = [Direction(dx, dy)
            for dx in range(-box.x_max, box.x_max + 1)
            for dy in range(-box.y_max, box.y_max + 1)
            if gcd(dx, dy) == 1]
    return DirectionSet(dirs)


def orient(a, b, c) -> int:
    """Sign of the turn a -> b -> c (1 left, -1 right, 0 collinear)."""
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (v > 0) - (v < 0)


def on_segment(p, a, b) -> bool:
    """Whether p lies on the closed segment ab (exact)."""
    return (orient(a, b, p) == 0
            and min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


class SegmentRelation(enum.Enum):
    DISJOINT = "Disjoint"
    SHARED_ENDPOINT_ONLY = "SharedEndpointOnly"
    PROPER_CROSSING = "ProperCrossing"
    ENDPOINT_ON_INTERIOR = "EndpointOnInterior"
    COLLINEAR_OVERLAP = "CollinearOverlap"


def classify_segments(p1, p2, q1, q2) -> SegmentRelation:
    p1, p2, q1, q2 = tuple(p1), tuple(p2), tuple(q1), tuple(q2)
    if p1 == p2 or q1 == q2:
        raise DegenerateSegment("segment endpoints coincide")
    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 == o2 == o3 == o4 == 0:
        # project on the dominant axis of p
        ax = 0 if p1[0] != p2[0] else 1
        a0, a1 = sorted((p1[ax], p2[ax]))
        b0, b1 = sorted((q1[ax], q2[ax]))
        lo, hi = max(a0, b0), min(a1, b1)
        if lo > hi:
            return SegmentRelation.DISJOINT
        if lo < hi:
            return SegmentRelation.COLLINEAR_OVERLAP
        return SegmentRelation.SHARED_ENDPOINT_ONLY
    if o1 * o2 < 0 and o3 * o4 < 0:
        return SegmentRelation.PROPER_CROSSING
    touches = []
    if o1 == 0 and on_segment(q1, p1, p2):
        touches.append(q1)
    if o2 == 0 and on_segment(q2, p1, p2):
        touches.append(q2)
    if o3 == 0 and on_segment(p1, q1, q2):
        touches.append(p1)
    if o4 == 0 and on_segment(p2, q1, q2):
        touches.append(p2)
    if not touches:
        return SegmentRelation.DISJOINT
    t = touches[0]
    if t in (p1, p2) and t in (q1, q2):
        return SegmentRelation.SHARED_ENDPOINT_ONLY
    return SegmentRelation.ENDPOINT_ON_INTERIOR


def rotation_system(drawing: Drawing, positions=None) -> Dict[str, List[str]]:
    """Neighbors of each vertex in CCW order of the connecting edge direction.

    The list is a cyclic sequence; it starts at the neighbor with the smallest
    angle from +x and ties (coinciding directions) are broken by id.
    """
    pos = drawing.positions if positions is None else positions
    out: Dict[str, List[str]] = {}
    for v, nbrs in drawing.neighbors().items():
        pv = pos[v]
        out[v] = sorted(nbrs, key=lambda w: (ccw_key((pos[w][0] - pv[0], pos[w][1] - pv[1])), w))
    return out


def same_cyclic_order(a: Sequence, b: Sequence) -> bool:
    """Equality up to rotation (not reflection)."""
    if len(a) != len(b):
        return False
    if not a:
        return True
    try:
        i = list(b).index(a[0])
    except ValueError:
        return False
    return list(a) == list(b[i:]) + list(b[:i])
