import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqbit.geometry import (Point2, Segment2, dist_segment_point, informed_set_measure, make_rect,
                             point_rect_distance, sample_informed, sample_informed_batch,
                             segment_intersects_rect, segment_rect_distance, wrap_angle)

from oracles import brute_segment_near_rect

coord = st.floats(-10, 10, allow_nan=False)
point = st.tuples(coord, coord)


@pytest.mark.parametrize("seg, p, expected", [
    (((0, 0), (1, 0)), (0.5, 1), 1.0),
    (((0, 0), (0, 0)), (3, 4), 5.0),
    (((0, 0), (2, 0)), (3, 0), 1.0),
])
def test_dist_segment_point_examples(seg, p, expected):
    s = Segment2(Point2(*seg[0]), Point2(*seg[1]))
    assert dist_segment_point(s, Point2(*p)) == pytest.approx(expected, abs=1e-12)


def test_dist_segment_point_zero_on_segment():
    s = Segment2(Point2(0, 0), Point2(2, 2))
    assert dist_segment_point(s, Point2(0.7, 0.7)) == pytest.approx(0.0, abs=1e-12)


@given(point, point, point)
def test_dist_segment_point_symmetric(a, b, p):
    s1 = Segment2(Point2(*a), Point2(*b))
    s2 = Segment2(Point2(*b), Point2(*a))
    assert dist_segment_point(s1, p) == pytest.approx(dist_segment_point(s2, p), abs=1e-9)


def test_segment_intersects_rect_examples():
    r = make_rect(0, 0, 1, 1)
    assert segment_intersects_rect(Segment2(Point2(-2, 0), Point2(2, 0)), r, 0.0)
    assert not segment_intersects_rect(Segment2(Point2(-2, 3), Point2(2, 3)), r, 0.0)
    s = Segment2(Point2(-2, 2.4), Point2(2, 2.4))
    # The segment is 1.4 from the rectangle: outside a 0.5 inflation, inside 1.5.
    assert segment_rect_distance(s, r) == pytest.approx(1.4)
    assert not segment_intersects_rect(s, r, 0.5)
    assert not brute_segment_near_rect(s.a, s.b, r, 0.5)
    assert segment_intersects_rect(s, r, 1.5)
    assert brute_segment_near_rect(s.a, s.b, r, 1.5)


def test_segment_intersects_rect_rejects_negative_inflation():
    with pytest.raises(ValueError):
        segment_intersects_rect(Segment2(Point2(0, 0), Point2(1, 0)), make_rect(0, 0, 1, 1), -0.1)


def test_rounded_corner_is_not_square():
    r = make_rect(0, 0, 1, 1)
    # passes the grown square's corner region but stays outside the rounded corner
    s = Segment2(Point2(1.45, 2.0), Point2(2.0, 1.45))
    assert not segment_intersects_rect(s, r, 0.5)
    assert not brute_segment_near_rect(s.a, s.b, r, 0.5)


def test_segment_intersects_rect_matches_brute_force_oracle():
    rng = np.random.default_rng(3)
    disagreements = []
    for _ in range(10_000):
        a, b = rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2)
        r = make_rect(*rng.uniform(-1, 1, 2), *rng.uniform(0.1, 1.0, 2))
        inflate = float(rng.uniform(0, 0.6))
        got = segment_intersects_rect(Segment2(Point2(*a), Point2(*b)), r, inflate)
        want = brute_segment_near_rect(a, b, r, inflate)
        if got != want:
            # sampling can only miss contacts, and only by about one sample spacing
            gap = segment_rect_distance(Segment2(Point2(*a), Point2(*b)), r)
            if not (got and abs(gap - inflate) < np.hypot(*(b - a)) / 999):
                disagreements.append((a, b, r, inflate))
    assert not disagreements


def test_point_rect_distance():
    r = make_rect(0, 0, 1, 2)
    assert point_rect_distance((0.5, 0.5), r) == 0.0
    assert point_rect_distance((4, 6), r) == pytest.approx(5.0)


def test_make_rect_validates():
    with pytest.raises(ValueError):
        make_rect(0, 0, 0, 1)
    with pytest.raises(ValueError):
        make_rect(0, 0, 1, -1)


@given(st.floats(-100, 100))
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -math.pi <= w < math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


# -- informed sampling -------------------------------------------------------

def test_degenerate_ellipse_lies_on_segment():
    rng = np.random.default_rng(0)
    start, goal = Point2(1, 1), Point2(4, 5)
    for _ in range(100):
        p = sample_informed(start, goal, 5.0, rng)
        assert dist_segment_point(Segment2(start, goal), p) < 1e-9


def test_infinite_cost_is_uniform_over_bounds():
    rng = np.random.default_rng(1)
    bounds = make_rect(7.5, 5.5, 7.5, 5.5)
    pts = sample_informed_batch(Point2(1, 1), Point2(2, 2), math.inf, rng, 100_000, bounds)
    assert np.all((pts[:, 0] >= 0) & (pts[:, 0] <= 15) & (pts[:, 1] >= 0) & (pts[:, 1] <= 11))
    # uniform on [0, L]: sigma of the mean is L / sqrt(12 n)
    n = len(pts)
    assert abs(pts[:, 0].mean() - 7.5) < 3 * 15 / math.sqrt(12 * n)
    assert abs(pts[:, 1].mean() - 5.5) < 3 * 11 / math.sqrt(12 * n)


def test_informed_draws_satisfy_ellipse_inequality():
    rng = np.random.default_rng(2)
    pts = sample_informed_batch((0, 0), (4, 0), 5.0, rng, 100_000)
    lhs = np.hypot(pts[:, 0], pts[:, 1]) + np.hypot(pts[:, 0] - 4, pts[:, 1])
    assert np.all(lhs <= 5.0 + 1e-9)


def test_informed_draws_are_uniform_over_the_ellipse():
    rng = np.random.default_rng(4)
    pts = sample_informed_batch((0, 0), (4, 0), 5.0, rng, 200_000)
    # compare against rejection sampling from the bounding box (the acceptance oracle)
    box = rng.uniform([-0.5, -1.5], [4.5, 1.5], (600_000, 2))
    keep = np.hypot(box[:, 0], box[:, 1]) + np.hypot(box[:, 0] - 4, box[:, 1]) <= 5.0
    ref = box[keep]
    for q in (0.1, 0.25, 0.5, 0.75, 0.9):
        assert np.quantile(pts[:, 0], q) == pytest.approx(np.quantile(ref[:, 0], q), abs=0.03)
        assert np.quantile(np.abs(pts[:, 1]), q) == pytest.approx(np.quantile(np.abs(ref[:, 1]), q), abs=0.03)


def test_informed_rejects_empty_set():
    with pytest.raises(ValueError):
        sample_informed((0, 0), (4, 0), 3.9, np.random.default_rng(0))


@settings(max_examples=60)
@given(point, point, st.floats(1.0, 3.0), st.integers(0, 2**31 - 1))
def test_informed_inequality_property(a, b, factor, seed):
    c_min = math.dist(a, b)
    c_best = c_min * factor + 1e-3
    pts = sample_informed_batch(a, b, c_best, np.random.default_rng(seed), 500)
    lhs = np.hypot(pts[:, 0] - a[0], pts[:, 1] - a[1]) + np.hypot(pts[:, 0] - b[0], pts[:, 1] - b[1])
    assert np.all(lhs <= c_best + 1e-9 * max(1.0, c_best))


def test_informed_set_measure():
    bounds = make_rect(7.5, 5.5, 7.5, 5.5)
    assert informed_set_measure((0, 0), (4, 0), math.inf, bounds) == pytest.approx(165.0)
    assert informed_set_measure((0, 0), (4, 0), 5.0, bounds) == pytest.approx(math.pi * 2.5 * 1.5)
    assert informed_set_measure((0, 0), (4, 0), 1e3, bounds) == pytest.approx(165.0)
