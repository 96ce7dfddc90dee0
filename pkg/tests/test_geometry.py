import random
from itertools import product

import pytest

from gridsnap import Drawing, GridBox, classify_segments, compare_ccw, enumerate_directions, rotation_system
from gridsnap.geometry import (DegenerateSegment, EmptyBox, SegmentRelation, ccw_key, primitive,
                               same_cyclic_order)

from oracles import atan2_key, brute_direction_count, random_drawing

R = SegmentRelation


def test_unit_box_has_eight_directions():
    dirs = enumerate_directions(GridBox(1, 1))
    assert list(dirs) == [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]


def test_two_by_two_adds_knight_moves():
    dirs = enumerate_directions(GridBox(2, 2))
    assert len(dirs) == 16
    for d in [(2, 1), (1, 2), (-2, 1), (-1, 2), (-2, -1), (-1, -2), (2, -1), (1, -2)]:
        assert d in dirs


@pytest.mark.parametrize("x_max,y_max", [(x, y) for x in range(7) for y in range(7) if x or y])
def test_direction_counts_match_gcd_enumeration(x_max, y_max):
    assert len(enumerate_directions(GridBox(x_max, y_max))) == brute_direction_count(x_max, y_max)


def test_directions_grow_with_area():
    counts = [len(enumerate_directions(GridBox(n, n))) for n in range(1, 7)]
    assert counts == sorted(counts) and len(set(counts)) == len(counts)


def test_empty_box_has_no_directions():
    with pytest.raises(EmptyBox):
        enumerate_directions(GridBox(0, 0))


@pytest.mark.parametrize("x_max,y_max", [(3, 3), (1, 5), (6, 6), (5, 2)])
def test_ccw_order_matches_atan2(x_max, y_max):
    dirs = list(enumerate_directions(GridBox(x_max, y_max)))
    assert dirs == sorted(dirs, key=atan2_key)
    assert dirs[0] == (1, 0)


def test_compare_ccw_examples():
    assert compare_ccw((1, 0), (0, 1)) == -1
    assert compare_ccw((-1, 1), (-1, -1)) == -1
    assert compare_ccw((2, 2), (1, 1)) == 0
    assert compare_ccw((1, -1), (1, 0)) == 1


def test_compare_ccw_agrees_with_atan2_on_box_vectors():
    vecs = [v for v in product(range(-3, 4), repeat=2) if v != (0, 0)]
    for a, b in product(vecs, repeat=2):
        fa, fb = atan2_key(a), atan2_key(b)
        if abs(fa - fb) < 1e-12:
            assert compare_ccw(a, b) == 0
        else:
            assert compare_ccw(a, b) == (-1 if fa < fb else 1)


def test_primitive():
    assert primitive(4, -6) == (2, -3)
    with pytest.raises(ValueError):
        primitive(0, 0)


def test_first_after_wraps():
    dirs = enumerate_directions(GridBox(1, 1))
    assert dirs.first_after((1, -1)) == (1, 0)
    assert dirs.first_after((1, 0)) == (1, 1)
    assert dirs.first_after((2, 1)) == (1, 1)


@pytest.mark.parametrize("seg,expected", [
    (((0, 0), (2, 2), (0, 2), (2, 0)), R.PROPER_CROSSING),
    (((0, 0), (1, 0), (1, 0), (2, 1)), R.SHARED_ENDPOINT_ONLY),
    (((0, 0), (2, 0), (1, 0), (3, 0)), R.COLLINEAR_OVERLAP),
    (((0, 0), (1, 0), (2, 0), (3, 0)), R.DISJOINT),
    (((0, 0), (1, 0), (1, 0), (2, 0)), R.SHARED_ENDPOINT_ONLY),
    (((0, 0), (2, 0), (1, 0), (1, 1)), R.ENDPOINT_ON_INTERIOR),
    (((0, 0), (1, 1), (0, 1), (1, 2)), R.DISJOINT),
])
def test_classify_segments(seg, expected):
    assert classify_segments(*seg) is expected
    p1, p2, q1, q2 = seg
    assert classify_segments(q2, q1, p1, p2) is expected


def test_classify_degenerate():
    with pytest.raises(DegenerateSegment):
        classify_segments((0, 0), (0, 0), (1, 1), (2, 2))


def test_rotation_system_star():
    d = Drawing([("c", (1, 1)), ("E", (2, 1)), ("N", (1, 2)), ("W", (0, 1)), ("S", (1, 0))],
                [("c", "E"), ("c", "N"), ("c", "W"), ("c", "S")], GridBox(2, 2))
    rot = rotation_system(d)
    assert rot["c"] == ["E", "N", "W", "S"]
    assert rot["E"] == ["c"]


def test_same_cyclic_order_is_rotation_not_reflection():
    assert same_cyclic_order("abc", "cab")
    assert not same_cyclic_order("abc", "acb")


def test_rotation_system_agrees_with_atan2():
    rng = random.Random(5)
    for _ in range(40):
        d = random_drawing(rng, 3, 3, rng.randint(3, 6), edge_p=0.6)
        rot = rotation_system(d)
        for v, nbrs in d.neighbors().items():
            pv = d.positions[v]
            expect = sorted(nbrs, key=lambda w: atan2_key((float(d.positions[w][0] - pv[0]),
                                                           float(d.positions[w][1] - pv[1]))))
            assert same_cyclic_order(rot[v], expect)


def test_ccw_key_sorts_like_compare():
    vecs = [(1, 1), (-1, 0), (0, -1), (1, 0)]
    assert sorted(vecs, key=ccw_key) == [(1, 0), (1, 1), (-1, 0), (0, -1)]
