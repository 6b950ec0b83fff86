"""Sequential re-planning against known obstacle motion.

Each round plans on the static map plus every virtual obstacle found so far,
turns the path into a timed reference, and looks for the first future
contact with a dynamic obstacle. A contact becomes a square virtual obstacle
centered where the robot would be at impact, and the loop plans again.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .bitstar import InvalidQuery, NoPath, PlannerConfig, PlannerSolution, checker_for, plan
from .geometry import AxisRect, Point2, Pose2D, make_rect
from .trajectory import (RobotLimits, SplinePath, TimedTrajectory, fillet_polyline, fit_spline,
                         generate_reference, stationary_trajectory)
from .world import DynamicObstacle, SceneSnapshot, World, obstacle_positions, snapshot


@dataclass(frozen=True)
class CollisionPrediction:
    t_hit: float
    x_hit: Point2
    obstacle_id: int


@dataclass
class ReplanState:
    planned_paths: list[PlannerSolution] = field(default_factory=list)
    virtuals: list[AxisRect] = field(default_factory=list)
    predictions: list[CollisionPrediction] = field(default_factory=list)
    iterations: int = 0
    max_iterations: int = 8
    plan_times: list[float] = field(default_factory=list)


@dataclass
class ReplanResult:
    solution: PlannerSolution
    trajectory: TimedTrajectory
    state: ReplanState


class ReplanFailure(RuntimeError):
    """Raised when the loop cannot produce a collision-free path.

    ``reason`` is ``"max_iterations"``, ``"no_path"`` or ``"invalid_query"``.
    """

    def __init__(self, reason: str, state: ReplanState, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.state = state


@dataclass(frozen=True)
class ReplanSettings:
    max_iterations: int = 8
    clearance: float = 0.1        # planning margin on top of the robot radius
    collision_margin: float = 0.1  # extra separation demanded by the predictor
    dt: float = 0.05
    dt_check: float = 0.05
    followup_batches: int = 3      # batch cap for plans after the first in one call


def _first_overlap(robot_xy, obs_xy, thresh):
    d = np.hypot(robot_xy[:, 0] - obs_xy[:, 0], robot_xy[:, 1] - obs_xy[:, 1])
    hit = np.flatnonzero(d <= thresh)
    return int(hit[0]) if len(hit) else None


def predict_first_collision(ref: TimedTrajectory, dynamics: list[DynamicObstacle], r_robot: float,
                            horizon: float, dt_check: float, t_now: float | None = None,
                            margin: float = 0.0, tol: float = 1e-4) -> CollisionPrediction | None:
    """Earliest time within the horizon at which the robot disc meets an obstacle disc.

    The track is sampled every ``dt_check`` seconds and the first overlapping
    interval is refined by bisection down to ``tol``. Discs count as touching
    when their centers are within the sum of radii plus ``margin``.
    """
    if dt_check <= 0:
        raise ValueError("dt_check must be positive")
    if not dynamics:
        return None
    t0 = ref.t_start if t_now is None else max(t_now, ref.t_start)
    t1 = t0 + horizon
    if t1 < t0:
        return None
    times = np.arange(t0, t1, dt_check)
    times = np.append(times, t1) if (len(times) == 0 or times[-1] < t1) else times
    robot_xy = ref.positions_at(times)
    best: tuple[float, int] | None = None
    for i, o in enumerate(dynamics):
        thresh = r_robot + o.radius + margin
        k = _first_overlap(robot_xy, obstacle_positions(o, times), thresh)
        if k is None:
            continue
        if k == 0:
            t_hit = float(times[0])
        else:
            lo, hi = float(times[k - 1]), float(times[k])
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                p = ref.positions_at([mid])
                q = obstacle_positions(o, [mid])
                if math.hypot(p[0, 0] - q[0, 0], p[0, 1] - q[0, 1]) <= thresh:
                    hi = mid
                else:
                    lo = mid
            t_hit = hi
        if best is None or t_hit < best[0]:
            best = (t_hit, i)
    if best is None:
        return None
    x, y = ref.positions_at([best[0]])[0]
    return CollisionPrediction(best[0], Point2(float(x), float(y)), best[1])


def make_virtual_obstacle(x_hit, robot_diameter: float, obstacle_diameter: float) -> AxisRect:
    """Square centered on the impact point, side twice the combined diameters."""
    if robot_diameter <= 0 or obstacle_diameter <= 0:
        raise ValueError("diameters must be positive")
    half = robot_diameter + obstacle_diameter
    return make_rect(x_hit[0], x_hit[1], half, half)


def _dedupe(waypoints) -> np.ndarray:
    pts = [np.asarray(waypoints[0], dtype=float)]
    for p in waypoints[1:]:
        p = np.asarray(p, dtype=float)
        if np.hypot(*(p - pts[-1])) > 1e-6:
            pts.append(p)
    return np.array(pts)


def smooth_path(waypoints, scene: SceneSnapshot, r_robot: float, limits: RobotLimits,
                spacing: float = 0.05) -> SplinePath:
    """Spline through the planner polyline, checked against the physical footprint.

    When the spline grazes an obstacle the polyline corners are replaced by
    arcs (radius ``v_max / omega_max``, halved until clear) and the spline is
    refit through dense samples of that curve.
    """
    pts = _dedupe(waypoints)
    checker = checker_for(scene, r_robot)

    def clear(path: SplinePath) -> bool:
        s = np.linspace(0.0, path.length, max(2, int(math.ceil(path.length / spacing)) + 1))
        return bool(np.all(checker.points_free(path.point(s))))

    path = fit_spline(pts)
    if len(pts) <= 2 or clear(path):
        return path
    radius = limits.v_max / limits.omega_max
    while radius > 0.02:
        path = fit_spline(fillet_polyline(pts, radius))
        if clear(path):
            return path
        radius /= 2.0
    return fit_spline(fillet_polyline(pts, 0.01, spacing=0.02))


def replan(world: World, start, goal, t_now: float, r_robot: float, limits: RobotLimits,
           cfg: PlannerConfig = PlannerConfig(), max_iterations: int | None = None,
           start_heading: float | None = None,
           settings: ReplanSettings = ReplanSettings()) -> ReplanResult:
    """Plan, predict, add a virtual obstacle, repeat until no contact is predicted.

    Virtual obstacles are appended to ``world.virtuals`` and stay there.
    Raises :class:`ReplanFailure` when the iteration cap is hit or the
    planner reports no path.
    """
    max_it = settings.max_iterations if max_iterations is None else max_iterations
    state = ReplanState(max_iterations=max_it)
    cfg = replace(cfg, inflation=max(cfg.inflation, r_robot + settings.clearance))
    start, goal = Point2(*start[:2]), Point2(*goal[:2])
    first = True
    while True:
        scene = snapshot(world, t_now, freeze_dynamics=False)
        # Follow-up plans differ from the previous one by a single rectangle,
        # so they run on a smaller batch budget to keep the round cheap.
        run_cfg = cfg if first else replace(cfg, max_batches=min(cfg.max_batches,
                                                                 settings.followup_batches))
        first = False
        t0 = time.perf_counter()
        try:
            sol = plan(scene, start, goal, run_cfg)
        except InvalidQuery as exc:
            raise ReplanFailure("invalid_query", state, str(exc)) from exc
        finally:
            state.plan_times.append(time.perf_counter() - t0)
        state.iterations += 1
        if isinstance(sol, NoPath):
            raise ReplanFailure("no_path", state, sol.reason)
        state.planned_paths.append(sol)
        if len(sol.waypoints) < 2:
            heading = 0.0 if start_heading is None else start_heading
            return ReplanResult(sol, stationary_trajectory(Pose2D(start.x, start.y, heading), t_now),
                                state)
        path = smooth_path(sol.waypoints, scene, r_robot, limits)
        traj = generate_reference(path, limits, settings.dt, t0=t_now, initial_heading=start_heading)
        pred = predict_first_collision(traj, world.dynamics, r_robot, traj.t_end - t_now,
                                       settings.dt_check, t_now, settings.collision_margin)
        if pred is None:
            return ReplanResult(sol, traj, state)
        state.predictions.append(pred)
        if state.iterations >= max_it:
            raise ReplanFailure("max_iterations", state,
                                f"still colliding after {state.iterations} plans")
        obs = world.dynamics[pred.obstacle_id]
        v = make_virtual_obstacle(pred.x_hit, 2.0 * r_robot, 2.0 * obs.radius)
        world.virtuals.append(v)
        state.virtuals.append(v)
