"""Unicycle plant, posture-error tracking law and the in-place path-switch turn."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Pose2D, Twist, wrap_angle
from .trajectory import RobotLimits


@dataclass(frozen=True)
class RobotState:
    pose: Pose2D
    twist: Twist = Twist(0.0, 0.0)


@dataclass(frozen=True)
class TrackingGains:
    k_x: float = 1.0
    k_y: float = 4.0
    k_theta: float = 2.0

    def __post_init__(self):
        if min(self.k_x, self.k_y, self.k_theta) <= 0:
            raise ValueError("tracking gains must be positive")


def _clamp(x: float, lim: float) -> float:
    return max(-lim, min(lim, x))


def track(state: RobotState, ref_pose: Pose2D, ref_twist: Twist,
          gains: TrackingGains = TrackingGains(), limits: RobotLimits | None = None) -> Twist:
    """Command that drives ``state`` onto the reference (posture-error feedback).

    The error is the reference pose expressed in the robot's body frame.
    """
    x, y, th = state.pose
    dx, dy = ref_pose.x - x, ref_pose.y - y
    c, s = math.cos(th), math.sin(th)
    e_x = c * dx + s * dy
    e_y = -s * dx + c * dy
    e_th = wrap_angle(ref_pose.theta - th)
    v_r, w_r = ref_twist
    v = v_r * math.cos(e_th) + gains.k_x * e_x
    w = w_r + v_r * (gains.k_y * e_y + gains.k_theta * math.sin(e_th))
    if limits is not None:
        v, w = _clamp(v, limits.v_max), _clamp(w, limits.omega_max)
    return Twist(v, w)


def integrate_unicycle(pose: Pose2D, twist: Twist, dt: float) -> Pose2D:
    """Exact pose after holding ``twist`` for ``dt``."""
    x, y, th = pose
    v, w = twist
    # chord form: stable as omega -> 0, where v/w * (sin - sin) cancels badly
    half = 0.5 * w * dt
    chord = v * dt * (math.sin(half) / half if abs(half) > 1e-9 else 1.0 - half * half / 6.0)
    mid = th + half
    return Pose2D(x + chord * math.cos(mid), y + chord * math.sin(mid), th + w * dt)


def step_robot(state: RobotState, cmd: Twist, dt: float, limits: RobotLimits) -> RobotState:
    """Slew-limit ``cmd`` from the current twist, clamp it, then integrate over ``dt``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    v0, w0 = state.twist
    dv, dw = limits.a_max * dt, limits.alpha_max * dt
    v = _clamp(max(v0 - dv, min(v0 + dv, cmd.v)), limits.v_max)
    w = _clamp(max(w0 - dw, min(w0 + dw, cmd.omega)), limits.omega_max)
    twist = Twist(v, w)
    return RobotState(integrate_unicycle(state.pose, twist, dt), twist)


def switch_maneuver(state: RobotState, new_path_heading: float, limits: RobotLimits,
                    dt: float = 0.05) -> list[Twist]:
    """In-place turn onto ``new_path_heading`` as a list of per-step commands.

    The robot must already be at translational rest. Angular velocity ramps
    at ``alpha_max`` toward ``omega_max`` and back down, and the sequence is
    scaled so that the summed rotation lands exactly on the target. A final
    zero command leaves the robot with no residual spin.
    """
    delta = wrap_angle(new_path_heading - state.pose.theta)
    if abs(delta) < 1e-12:
        return []
    step = limits.alpha_max * dt
    n = 1
    while True:
        seq = [min(k * step, (n + 1 - k) * step, limits.omega_max) for k in range(1, n + 1)]
        total = sum(seq) * dt
        if total >= abs(delta):
            break
        n += 1
    scale = abs(delta) / total
    sign = math.copysign(1.0, delta)
    return [Twist(0.0, sign * w * scale) for w in seq] + [Twist(0.0, 0.0)]
