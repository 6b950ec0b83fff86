"""Grid approximation of the dynamic-obstacle velocity space comparator.

Every step the (v, omega) plane is discretized and each cell is tested by
rolling the robot forward on that constant twist for the horizon while the
obstacles follow their known constant twists. Static rectangles and the arena
walls only take part once the robot is within ``d_safe`` of them; that lazy
rule is deliberate and is what lets the comparator drive itself into traps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .control import RobotState
from .geometry import AxisRect, Point2, Twist, point_rect_distance, wrap_angle
from .trajectory import RobotLimits
from .world import DynamicObstacle, World, obstacle_positions


@dataclass(frozen=True)
class DovsConfig:
    horizon: float = 5.0
    d_safe: float = 1.0
    goal_twist: Twist = Twist(0.0, 0.0)
    n_v: int = 41
    n_omega: int = 41
    dt_check: float = 0.2
    margin: float = 0.05
    heading_gain: float = 1.0

    def __post_init__(self):
        if not (self.horizon > 0 and self.d_safe > 0):
            raise ValueError("horizon and d_safe must be positive")
        if self.n_v < 8 or self.n_omega < 8:
            raise ValueError("grid resolutions must be at least 8")


@dataclass(frozen=True)
class VelocityGrid:
    v_axis: np.ndarray
    omega_axis: np.ndarray
    forbidden: np.ndarray   # shape (n_v, n_omega)

    def cell_of(self, twist: Twist) -> tuple[int, int]:
        i = int(np.argmin(np.abs(self.v_axis - twist.v)))
        j = int(np.argmin(np.abs(self.omega_axis - twist.omega)))
        return i, j

    def is_forbidden(self, twist: Twist) -> bool:
        return bool(self.forbidden[self.cell_of(twist)])


@lru_cache(maxsize=16)
def _body_arcs(v_max, w_max, n_v, n_w, horizon, dt_check):
    """Body-frame positions along every constant-twist arc, shape (n_v, n_w, H, 2)."""
    v = np.linspace(0.0, v_max, n_v)
    w = np.linspace(-w_max, w_max, n_w)
    tau = np.arange(1, int(math.ceil(horizon / dt_check - 1e-9)) + 1) * dt_check
    V, W, T = np.meshgrid(v, w, tau, indexing="ij")
    small = np.abs(W) < 1e-9
    Ws = np.where(small, 1.0, W)
    x = np.where(small, V * T, V / Ws * np.sin(Ws * T))
    y = np.where(small, 0.0, V / Ws * (1.0 - np.cos(Ws * T)))
    arcs = np.stack((x, y), axis=-1).astype(np.float32)
    arcs.setflags(write=False)
    return v, w, tau, arcs


def _walls(bounds: AxisRect, thickness: float = 1.0) -> list[AxisRect]:
    b, t = bounds, thickness
    return [AxisRect(Point2(b.center.x, b.ymin - t), b.half_width + 2 * t, t),
            AxisRect(Point2(b.center.x, b.ymax + t), b.half_width + 2 * t, t),
            AxisRect(Point2(b.xmin - t, b.center.y), t, b.half_height + 2 * t),
            AxisRect(Point2(b.xmax + t, b.center.y), t, b.half_height + 2 * t)]


def statics_in_range(state: RobotState, statics, r_robot: float, d_safe: float) -> list[AxisRect]:
    """Static rectangles whose gap to the robot disc is at most ``d_safe``."""
    p = state.pose.position
    return [r for r in statics if point_rect_distance(p, r) - r_robot <= d_safe]


def forbidden_velocities(state: RobotState, dynamics: list[DynamicObstacle], statics,
                         cfg: DovsConfig = DovsConfig(), t: float = 0.0,
                         r_robot: float = 0.25, limits: RobotLimits = RobotLimits(),
                         bounds: AxisRect | None = None) -> VelocityGrid:
    """Mark every grid twist whose constant-twist rollout meets an obstacle."""
    v_ax, w_ax, tau, arcs = _body_arcs(limits.v_max, limits.omega_max, cfg.n_v, cfg.n_omega,
                                       cfg.horizon, cfg.dt_check)
    x, y, th = state.pose
    forbidden = np.zeros((len(v_ax), len(w_ax)), dtype=bool)
    reach = limits.v_max * tau[-1]
    rects = list(statics) + (_walls(bounds) if bounds is not None else [])
    near_rects = statics_in_range(state, rects, r_robot, cfg.d_safe)
    tracks = []
    for o in dynamics:
        q = obstacle_positions(o, t + tau)
        lim = r_robot + o.radius + cfg.margin
        # Skip obstacles that cannot get within reach of any rollout.
        if np.min(np.hypot(q[:, 0] - x, q[:, 1] - y)) < reach + lim:
            tracks.append((q, lim))
    if not tracks and not near_rects:
        return VelocityGrid(v_ax, w_ax, forbidden)

    c, s = math.cos(th), math.sin(th)
    gx = x + c * arcs[..., 0] - s * arcs[..., 1]
    gy = y + s * arcs[..., 0] + c * arcs[..., 1]
    for q, lim in tracks:
        hit = (gx - q[:, 0]) ** 2 + (gy - q[:, 1]) ** 2 < lim * lim
        forbidden |= hit.any(axis=-1)

    lim = r_robot + cfg.margin
    for r in near_rects:
        dx = np.maximum(np.abs(gx - r.center[0]) - r.half_width, 0.0)
        dy = np.maximum(np.abs(gy - r.center[1]) - r.half_height, 0.0)
        forbidden |= (dx * dx + dy * dy < lim * lim).any(axis=-1)
    return VelocityGrid(v_ax, w_ax, forbidden)


def twist_distance(a: Twist, b: Twist, limits: RobotLimits) -> float:
    return abs(a.v - b.v) / limits.v_max + abs(a.omega - b.omega) / limits.omega_max


def reachable_free(grid: VelocityGrid, current: Twist, limits: RobotLimits, dt: float):
    """Indices of free cells inside the one-step acceleration window."""
    dv, dw = limits.a_max * dt + 1e-12, limits.alpha_max * dt + 1e-12
    iv = np.flatnonzero(np.abs(grid.v_axis - current.v) <= dv)
    iw = np.flatnonzero(np.abs(grid.omega_axis - current.omega) <= dw)
    return [(int(i), int(j)) for i in iv for j in iw if not grid.forbidden[i, j]]


def choose_velocity(grid: VelocityGrid, current: Twist, cfg: DovsConfig, limits: RobotLimits,
                    dt: float) -> Twist:
    """Free reachable twist closest to ``cfg.goal_twist``, else a braking turn."""
    goal = cfg.goal_twist
    dv, dw = limits.a_max * dt, limits.alpha_max * dt
    proj = Twist(min(max(goal.v, current.v - dv, 0.0), current.v + dv, limits.v_max),
                 min(max(goal.omega, current.omega - dw, -limits.omega_max),
                     current.omega + dw, limits.omega_max))
    cands: list[Twist] = []
    if not grid.is_forbidden(proj):
        cands.append(proj)
    cands.extend(Twist(float(grid.v_axis[i]), float(grid.omega_axis[j]))
                 for i, j in reachable_free(grid, current, limits, dt))
    if cands:
        return min(cands, key=lambda c: twist_distance(c, goal, limits))

    # Nothing free within reach: brake and swing toward the nearest free cell.
    free = np.argwhere(~grid.forbidden)
    if len(free):
        best = min(free, key=lambda ij: twist_distance(
            Twist(grid.v_axis[ij[0]], grid.omega_axis[ij[1]]), current, limits))
        target_w = float(grid.omega_axis[best[1]])
    else:
        target_w = goal.omega
    w = current.omega + max(-dw, min(dw, target_w - current.omega))
    return Twist(max(0.0, current.v - dv), max(-limits.omega_max, min(limits.omega_max, w)))


def goal_twist(state: RobotState, goal, limits: RobotLimits, cfg: DovsConfig,
               grid: VelocityGrid | None = None) -> Twist:
    """Full speed with a turn rate proportional to the bearing error to ``goal``.

    With the goal behind the robot the speed drops to a quarter so the robot
    turns on a tight circle instead of orbiting the goal. When ``grid`` marks
    that twist forbidden, the goal twist moves to a new direction: the fastest
    free cell, ties going to the turn rate closest to the goal-directed one.
    """
    x, y, th = state.pose
    err = wrap_angle(math.atan2(goal[1] - y, goal[0] - x) - th)
    w = max(-limits.omega_max, min(limits.omega_max, cfg.heading_gain * err))
    v = limits.v_max if abs(err) <= math.pi / 2 else 0.25 * limits.v_max
    direct = Twist(v, w)
    if grid is None or not grid.is_forbidden(direct):
        return direct
    for i in range(len(grid.v_axis) - 1, 0, -1):
        free = np.flatnonzero(~grid.forbidden[i])
        if len(free):
            j = min(free, key=lambda j: (abs(grid.omega_axis[j] - w), -grid.omega_axis[j]))
            return Twist(float(grid.v_axis[i]), float(grid.omega_axis[j]))
    return direct


def dovs_step(state: RobotState, world: World, t: float, cfg: DovsConfig, limits: RobotLimits,
              dt: float, r_robot: float, goal) -> tuple[Twist, VelocityGrid]:
    """One control period: build the forbidden grid, then pick a twist."""
    grid = forbidden_velocities(state, world.dynamics, world.statics, cfg, t, r_robot, limits,
                                world.bounds)
    cfg = replace(cfg, goal_twist=goal_twist(state, goal, limits, cfg, grid))
    return choose_velocity(grid, state.twist, cfg, limits, dt), grid
