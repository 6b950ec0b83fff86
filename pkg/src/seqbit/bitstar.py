"""Batch Informed Trees over a time-frozen scene.

The planner searches an implicit random geometric graph whose vertices are
batches of samples. Once a solution exists, new samples are drawn only from
the informed ellipse of the current best cost, and samples or vertices that
cannot improve on it are pruned. Edge and vertex queues are ordered by
estimated solution cost through the edge/vertex, ties broken by smaller
cost-to-go estimate and then insertion order, so runs replay exactly.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import (AxisRect, Point2, Segment2, distance, informed_set_measure,
                       point_rect_distance, sample_informed_batch, segment_intersects_rect)
from .world import SceneSnapshot

INF = math.inf


@dataclass(frozen=True)
class PlannerConfig:
    batch_size: int = 100
    max_batches: int = 10
    time_budget: float = 30.0
    rewire_factor: float = 1.1
    rng_seed: int = 0
    edge_check_resolution: float = 0.05
    inflation: float = 0.0

    def __post_init__(self):
        if self.batch_size < 1 or self.max_batches < 1:
            raise ValueError("batch_size and max_batches must be >= 1")
        if not self.time_budget > 0:
            raise ValueError("time_budget must be positive")
        if not self.rewire_factor > 1:
            raise ValueError("rewire_factor must exceed 1")
        if self.inflation < 0:
            raise ValueError("inflation must be non-negative")


@dataclass
class PlannerSolution:
    waypoints: list[Point2]
    cost: float
    samples_used: int
    batches: int
    per_batch_costs: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class NoPath:
    """Returned (not raised) when no solution was found within the budget."""

    batches: int
    samples_used: int
    reason: str = "no solution within budget"

    def __bool__(self):
        return False


class InvalidQuery(ValueError):
    """Start or goal is in collision or outside the world bounds."""


def heuristic_cost(a, b) -> float:
    """Admissible cost estimate between two points: their Euclidean distance."""
    return distance(a, b)


class CollisionChecker:
    """Point and segment validity against inflated rectangles and shrunk bounds."""

    def __init__(self, bounds: AxisRect, rects, inflation: float):
        self.inflation = inflation
        self.bounds = bounds
        self.rects = tuple(rects)
        r = inflation
        self._lo = (bounds.xmin + r, bounds.ymin + r)
        self._hi = (bounds.xmax - r, bounds.ymax - r)
        self._boxes = [(q.xmin - r, q.xmax + r, q.ymin - r, q.ymax + r, q) for q in self.rects]

    def point_free(self, p) -> bool:
        x, y = p[0], p[1]
        if not (self._lo[0] <= x <= self._hi[0] and self._lo[1] <= y <= self._hi[1]):
            return False
        for x0, x1, y0, y1, q in self._boxes:
            if x0 <= x <= x1 and y0 <= y <= y1 and point_rect_distance(p, q) <= self.inflation:
                return False
        return True

    def points_free(self, pts: np.ndarray) -> np.ndarray:
        x, y = pts[:, 0], pts[:, 1]
        ok = (x >= self._lo[0]) & (x <= self._hi[0]) & (y >= self._lo[1]) & (y <= self._hi[1])
        for _, _, _, _, q in self._boxes:
            dx = np.maximum(np.abs(x - q.center[0]) - q.half_width, 0.0)
            dy = np.maximum(np.abs(y - q.center[1]) - q.half_height, 0.0)
            ok &= np.hypot(dx, dy) > self.inflation
        return ok

    def segment_free(self, a, b) -> bool:
        # The shrunk bounds are convex, so valid endpoints keep the segment inside.
        if not (self.point_free(a) and self.point_free(b)):
            return False
        sx0, sx1 = (a[0], b[0]) if a[0] <= b[0] else (b[0], a[0])
        sy0, sy1 = (a[1], b[1]) if a[1] <= b[1] else (b[1], a[1])
        for x0, x1, y0, y1, q in self._boxes:
            if sx1 < x0 or sx0 > x1 or sy1 < y0 or sy0 > y1:
                continue
            if segment_intersects_rect(Segment2(a, b), q, self.inflation):
                return False
        return True


def checker_for(scene: SceneSnapshot, inflation: float) -> CollisionChecker:
    return CollisionChecker(scene.bounds, scene.statics, inflation)


class BitStar:
    """One BIT* query. Call :meth:`run_batch` repeatedly, or :meth:`solve`."""

    def __init__(self, scene: SceneSnapshot, start, goal, cfg: PlannerConfig = PlannerConfig()):
        self.cfg = cfg
        self.scene = scene
        self.start = Point2(float(start[0]), float(start[1]))
        self.goal = Point2(float(goal[0]), float(goal[1]))
        self.checker = checker_for(scene, cfg.inflation)
        for label, p in (("start", self.start), ("goal", self.goal)):
            if not self.checker.point_free(p):
                raise InvalidQuery(f"{label} {tuple(p)} is in collision or out of bounds")
        self.rng = np.random.default_rng(cfg.rng_seed)
        self.c_min = distance(self.start, self.goal)

        cap = 2 + cfg.batch_size * cfg.max_batches
        self.P = np.zeros((cap, 2))
        self.P[0], self.P[1] = self.start, self.goal
        self.n = 2
        self.state = np.full(cap, 2, dtype=np.int8)   # 0 sample, 1 vertex, 2 gone
        self.state[0], self.state[1] = 1, 0
        self.g = np.full(cap, INF)
        self.g[0] = 0.0
        self.gh = np.zeros(cap)                      # cost-to-come estimate
        self.h = np.zeros(cap)                       # cost-to-go estimate
        self.gh[1] = self.h[0] = self.c_min
        self.parent = [-1] * cap
        self.children: list[set[int]] = [set() for _ in range(cap)]
        self.old = np.zeros(cap, dtype=bool)

        self.c_best = INF
        self.c_pruned = INF
        self.batches = 0
        self.per_batch_costs: list[float] = []
        self.sample_log: list[tuple[float, np.ndarray]] = []
        self.edge_checks = 0
        self._edge_cache: dict[tuple[int, int], bool] = {}
        self._qv: list = []
        self._qe: list = []
        self._in_qv = np.zeros(cap, dtype=bool)
        self._tick = 0
        self.radius = INF

    # -- helpers ---------------------------------------------------------
    def _push_vertex(self, v: int):
        self._tick += 1
        self._in_qv[v] = True
        heapq.heappush(self._qv, (self.g[v] + self.h[v], self.h[v], self._tick, v))

    def _push_edge(self, v: int, x: int, c_hat: float):
        self._tick += 1
        heapq.heappush(self._qe, (self.g[v] + c_hat + self.h[x], self.h[x], self._tick, v, x, c_hat))

    def _best_vertex_key(self) -> float:
        qv = self._qv
        while qv:
            key, _, _, v = qv[0]
            if not self._in_qv[v] or self.state[v] != 1:
                heapq.heappop(qv)
                continue
            cur = self.g[v] + self.h[v]
            if cur < key:
                heapq.heappop(qv)
                self._tick += 1
                heapq.heappush(qv, (cur, self.h[v], self._tick, v))
                continue
            return key
        return INF

    def _best_edge_key(self) -> float:
        qe = self._qe
        while qe:
            key, hx, _, v, x, c_hat = qe[0]
            if self.state[v] != 1:
                heapq.heappop(qe)
                continue
            cur = self.g[v] + c_hat + hx
            if cur < key:
                heapq.heappop(qe)
                self._push_edge(v, x, c_hat)
                continue
            return key
        return INF

    def _radius(self) -> float:
        q = int(np.count_nonzero(self.state[:self.n] < 2))
        if q < 2:
            return INF
        lam = informed_set_measure(self.start, self.goal, self.c_best, self.scene.bounds)
        return (self.cfg.rewire_factor * 2.0 * math.sqrt(1.5) * math.sqrt(lam / math.pi)
                * math.sqrt(math.log(q) / q))

    def _edge_free(self, v: int, x: int) -> bool:
        key = (v, x) if v < x else (x, v)
        hit = self._edge_cache.get(key)
        if hit is None:
            self.edge_checks += 1
            hit = self.checker.segment_free(self.P[v], self.P[x])
            self._edge_cache[key] = hit
        return hit

    def _expand(self, v: int):
        self._in_qv[v] = False
        n = self.n
        P = self.P
        d = np.hypot(P[:n, 0] - P[v, 0], P[:n, 1] - P[v, 1])
        gv, ghv = self.g[v], self.gh[v]
        near = d <= self.radius
        near[v] = False
        st = self.state[:n]
        through = ghv + d + self.h[:n] < self.c_best
        for x in np.flatnonzero(near & (st == 0) & through):
            self._push_edge(v, int(x), float(d[x]))
        if not self.old[v]:
            cand = near & (st == 1) & through & (gv + d < self.g[:n])
            for w in np.flatnonzero(cand):
                w = int(w)
                if self.parent[w] == v or self.parent[v] == w:
                    continue
                self._push_edge(v, w, float(d[w]))

    def _set_cost(self, x: int, new_g: float):
        # A cheaper vertex may now justify edges it skipped when it was
        # expanded, so the improved subtree is queued for re-expansion.
        delta = self.g[x] - new_g
        self.g[x] = new_g
        self._requeue(x)
        stack = list(self.children[x])
        while stack:
            c = stack.pop()
            self.g[c] -= delta
            self._requeue(c)
            stack.extend(self.children[c])

    def _requeue(self, v: int):
        self.old[v] = False
        if not self._in_qv[v]:
            self._push_vertex(v)

    def _prune(self):
        c = self.c_best
        n = self.n
        f = self.gh[:n] + self.h[:n]
        st = self.state[:n]
        st[(st == 0) & (f >= c)] = 2
        for v in np.flatnonzero((st == 1) & (f > c)):
            v = int(v)
            if self.state[v] != 1:
                continue
            p = self.parent[v]
            if p >= 0:
                self.children[p].discard(v)
            stack = [v]
            while stack:
                w = stack.pop()
                stack.extend(self.children[w])
                self.children[w] = set()
                self.parent[w] = -1
                self.g[w] = INF
                self.state[w] = 0 if (w != v and f[w] < c) else 2
        self.c_pruned = c

    def _sample(self, m: int) -> np.ndarray:
        out: list[np.ndarray] = []
        got = 0
        for _ in range(100):
            pts = sample_informed_batch(self.start, self.goal, self.c_best, self.rng,
                                        2 * (m - got), self.scene.bounds)
            pts = pts[self.checker.points_free(pts)][: m - got]
            out.append(pts)
            got += len(pts)
            if got >= m:
                break
        return np.vstack(out) if out else np.zeros((0, 2))

    # -- public ----------------------------------------------------------
    def run_batch(self):
        """Add one batch of samples and search until the queues cannot improve."""
        if self.c_min == 0.0:
            self.c_best = 0.0
            self.batches += 1
            self.per_batch_costs.append(0.0)
            return
        if self.c_best < self.c_pruned:
            self._prune()
        pts = self._sample(self.cfg.batch_size)
        self.sample_log.append((self.c_best, pts))
        k = len(pts)
        if self.n + k > len(self.P):
            self._grow(self.n + k)
        idx = slice(self.n, self.n + k)
        self.P[idx] = pts
        self.state[idx] = 0
        self.gh[idx] = np.hypot(pts[:, 0] - self.start[0], pts[:, 1] - self.start[1])
        self.h[idx] = np.hypot(pts[:, 0] - self.goal[0], pts[:, 1] - self.goal[1])
        self.n += k

        self.old[:self.n] = self.state[:self.n] == 1
        self._qv, self._qe = [], []
        self._in_qv[:] = False
        for v in np.flatnonzero(self.state[:self.n] == 1):
            self._push_vertex(int(v))
        self.radius = self._radius()

        while True:
            while True:
                # the key lookup drops stale entries, so it may empty the queue
                kv = self._best_vertex_key()
                if kv == INF or kv > self._best_edge_key():
                    break
                _, _, _, v = heapq.heappop(self._qv)
                self._expand(v)
            if self._best_edge_key() == INF:
                break
            _, hx, _, v, x, c_hat = heapq.heappop(self._qe)
            if self.g[v] + c_hat + hx >= self.c_best:
                break
            if self.g[v] + c_hat >= self.g[x]:
                continue
            if not self._edge_free(v, x):
                continue
            new_g = self.g[v] + c_hat
            if self.state[x] == 1:
                self.children[self.parent[x]].discard(x)
            else:
                self.state[x] = 1
            self.parent[x] = v
            self.children[v].add(x)
            self._set_cost(x, new_g)
            if self.g[1] < self.c_best:
                self.c_best = float(self.g[1])
        self._qv, self._qe = [], []
        self.batches += 1
        self.per_batch_costs.append(self.c_best)

    def _grow(self, need: int):
        cap = max(need, 2 * len(self.P))
        extra = cap - len(self.P)
        self.P = np.vstack((self.P, np.zeros((extra, 2))))
        self.state = np.concatenate((self.state, np.full(extra, 2, dtype=np.int8)))
        self.g = np.concatenate((self.g, np.full(extra, INF)))
        self.gh = np.concatenate((self.gh, np.zeros(extra)))
        self.h = np.concatenate((self.h, np.zeros(extra)))
        self.old = np.concatenate((self.old, np.zeros(extra, dtype=bool)))
        self._in_qv = np.concatenate((self._in_qv, np.zeros(extra, dtype=bool)))
        self.parent.extend([-1] * extra)
        self.children.extend(set() for _ in range(extra))

    def path(self) -> list[Point2]:
        if self.c_min == 0.0:
            return [self.start]
        if self.g[1] == INF:
            return []
        out, v = [], 1
        while v != -1:
            out.append(Point2(float(self.P[v, 0]), float(self.P[v, 1])))
            v = self.parent[v]
        out.reverse()
        return out

    @property
    def samples_used(self) -> int:
        return self.n - 2

    def solve(self) -> PlannerSolution | NoPath:
        t0 = time.perf_counter()
        while self.batches < self.cfg.max_batches:
            self.run_batch()
            if self.c_min == 0.0 or time.perf_counter() - t0 > self.cfg.time_budget:
                break
        return self._solution()

    def _solution(self) -> PlannerSolution | NoPath:
        wp = self.path()
        if not wp:
            return NoPath(self.batches, self.samples_used)
        cost = sum(distance(a, b) for a, b in zip(wp[:-1], wp[1:]))
        return PlannerSolution(wp, cost, self.samples_used, self.batches, list(self.per_batch_costs))


def plan(scene: SceneSnapshot, start, goal, cfg: PlannerConfig = PlannerConfig()) -> PlannerSolution | NoPath:
    """Plan from ``start`` to ``goal``; raises :class:`InvalidQuery` for bad endpoints."""
    return BitStar(scene, start, goal, cfg).solve()
