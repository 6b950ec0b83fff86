"""2D primitives and predicates shared by the planners and the simulator.

Points, poses and twists are plain named tuples so they can be unpacked and
hashed cheaply inside the planner's inner loops.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np


class Point2(NamedTuple):
    x: float
    y: float


class Pose2D(NamedTuple):
    x: float
    y: float
    theta: float

    @property
    def position(self) -> Point2:
        return Point2(self.x, self.y)


class Twist(NamedTuple):
    v: float
    omega: float


class Segment2(NamedTuple):
    a: Point2
    b: Point2


class Disc(NamedTuple):
    center: Point2
    radius: float


class AxisRect(NamedTuple):
    center: Point2
    half_width: float
    half_height: float

    @property
    def xmin(self) -> float:
        return self.center[0] - self.half_width

    @property
    def xmax(self) -> float:
        return self.center[0] + self.half_width

    @property
    def ymin(self) -> float:
        return self.center[1] - self.half_height

    @property
    def ymax(self) -> float:
        return self.center[1] + self.half_height

    @property
    def area(self) -> float:
        return 4.0 * self.half_width * self.half_height

    def contains(self, p, margin: float = 0.0) -> bool:
        """True if ``p`` lies inside the rectangle shrunk by ``margin``."""
        return (abs(p[0] - self.center[0]) <= self.half_width - margin
                and abs(p[1] - self.center[1]) <= self.half_height - margin)

    def corners(self) -> list[Point2]:
        return [Point2(self.xmin, self.ymin), Point2(self.xmax, self.ymin),
                Point2(self.xmax, self.ymax), Point2(self.xmin, self.ymax)]


def make_rect(cx: float, cy: float, hw: float, hh: float) -> AxisRect:
    if not (hw > 0 and hh > 0):
        raise ValueError(f"rectangle half extents must be positive, got ({hw}, {hh})")
    return AxisRect(Point2(float(cx), float(cy)), float(hw), float(hh))


def distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def wrap_angle(a: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def dist_segment_point(s: Segment2, p) -> float:
    """Euclidean distance from ``p`` to the closest point of segment ``s``."""
    (ax, ay), (bx, by) = s
    dx, dy = bx - ax, by - ay
    den = dx * dx + dy * dy
    if den == 0.0:
        return math.hypot(p[0] - ax, p[1] - ay)
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / den
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - (ax + t * dx), p[1] - (ay + t * dy))


def point_rect_distance(p, r: AxisRect) -> float:
    """Distance from a point to a rectangle (0 inside)."""
    dx = max(abs(p[0] - r.center[0]) - r.half_width, 0.0)
    dy = max(abs(p[1] - r.center[1]) - r.half_height, 0.0)
    return math.hypot(dx, dy)


def _segment_clip(ax, ay, bx, by, xmin, xmax, ymin, ymax) -> bool:
    # Liang-Barsky: does the segment touch the closed box?
    t0, t1 = 0.0, 1.0
    dx, dy = bx - ax, by - ay
    for p, q in ((-dx, ax - xmin), (dx, xmax - ax), (-dy, ay - ymin), (dy, ymax - ay)):
        if p == 0.0:
            if q < 0.0:
                return False
        else:
            t = q / p
            if p < 0.0:
                if t > t1:
                    return False
                if t > t0:
                    t0 = t
            else:
                if t < t0:
                    return False
                if t < t1:
                    t1 = t
    return True


def segment_rect_distance(s: Segment2, r: AxisRect) -> float:
    """Exact distance between a segment and a closed rectangle (0 if they touch)."""
    (ax, ay), (bx, by) = s
    if _segment_clip(ax, ay, bx, by, r.xmin, r.xmax, r.ymin, r.ymax):
        return 0.0
    # Disjoint convex sets: the minimum is attained at a vertex of one of them.
    best = min(point_rect_distance(s[0], r), point_rect_distance(s[1], r))
    for c in r.corners():
        best = min(best, dist_segment_point(s, c))
    return best


def segment_intersects_rect(s: Segment2, r: AxisRect, inflate: float = 0.0) -> bool:
    """True iff ``s`` comes within ``inflate`` of ``r`` (rounded Minkowski growth)."""
    if inflate < 0:
        raise ValueError("inflate must be non-negative")
    (ax, ay), (bx, by) = s
    # Cheap reject against the square-grown box first.
    if not _segment_clip(ax, ay, bx, by, r.xmin - inflate, r.xmax + inflate,
                         r.ymin - inflate, r.ymax + inflate):
        return False
    if inflate == 0.0:
        return True
    return segment_rect_distance(s, r) <= inflate


def disc_intersects_rect(d: Disc, r: AxisRect) -> bool:
    return point_rect_distance(d.center, r) < d.radius


def discs_overlap(a: Disc, b: Disc) -> bool:
    return distance(a.center, b.center) < a.radius + b.radius


def _unit_disc(rng: np.random.Generator, n: int) -> np.ndarray:
    r = np.sqrt(rng.random(n))
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


def sample_uniform_batch(bounds: AxisRect, rng: np.random.Generator, n: int) -> np.ndarray:
    u = rng.random((n, 2))
    return np.column_stack((bounds.xmin + u[:, 0] * 2.0 * bounds.half_width,
                            bounds.ymin + u[:, 1] * 2.0 * bounds.half_height))


def sample_informed_batch(start, goal, c_best: float, rng: np.random.Generator, n: int,
                          bounds: AxisRect | None = None) -> np.ndarray:
    """Draw ``n`` points uniformly from the set {p : |p-start| + |p-goal| <= c_best}.

    A unit-disc sample is stretched onto the ellipse with foci ``start`` and
    ``goal``. With ``c_best = inf`` the draw is uniform over ``bounds`` instead.
    """
    c_min = distance(start, goal)
    if math.isinf(c_best):
        if bounds is None:
            raise ValueError("unbounded informed set needs world bounds")
        return sample_uniform_batch(bounds, rng, n)
    if c_best < c_min:
        raise ValueError(f"c_best={c_best} is below the start-goal distance {c_min}: "
                         "informed set is empty")
    center = np.array([(start[0] + goal[0]) / 2.0, (start[1] + goal[1]) / 2.0])
    if c_min > 0.0:
        e = np.array([goal[0] - start[0], goal[1] - start[1]]) / c_min
    else:
        e = np.array([1.0, 0.0])
    rot = np.array([[e[0], -e[1]], [e[1], e[0]]])
    a = c_best / 2.0
    b = math.sqrt(max(c_best * c_best - c_min * c_min, 0.0)) / 2.0
    ball = _unit_disc(rng, n) * np.array([a, b])
    return ball @ rot.T + center


def sample_informed(start, goal, c_best: float, rng: np.random.Generator,
                    bounds: AxisRect | None = None) -> Point2:
    x, y = sample_informed_batch(start, goal, c_best, rng, 1, bounds)[0]
    return Point2(float(x), float(y))


def informed_set_measure(start, goal, c_best: float, bounds: AxisRect) -> float:
    """Area of the informed ellipse, capped by the area of ``bounds``."""
    if math.isinf(c_best):
        return bounds.area
    c_min = distance(start, goal)
    b = math.sqrt(max(c_best * c_best - c_min * c_min, 0.0)) / 2.0
    return min(math.pi * (c_best / 2.0) * b, bounds.area)
