"""Spline smoothing of planner polylines and limit-aware reference motion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .geometry import Pose2D, Twist, wrap_angle

# 5-point Gauss-Legendre rule on [0, 1].
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
_GL_X = (_GL_X + 1.0) / 2.0
_GL_W = _GL_W / 2.0
_SUBDIV = 16


@dataclass(frozen=True)
class RobotLimits:
    v_max: float = 0.4
    omega_max: float = 0.4
    a_max: float = 0.4
    alpha_max: float = 1.0

    def __post_init__(self):
        if min(self.v_max, self.omega_max, self.a_max, self.alpha_max) <= 0:
            raise ValueError("robot limits must all be positive")


class SplinePath:
    """Natural cubic spline through waypoints, parameterized by chord length.

    Arc length is tabulated with composite Gauss-Legendre quadrature and
    inverted with Newton steps, so queries take arc length ``s``.
    """

    def __init__(self, knots):
        pts = np.asarray(knots, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("need at least 2 waypoints of shape (n, 2)")
        chords = np.hypot(*np.diff(pts, axis=0).T)
        if np.any(chords <= 1e-9):
            raise ValueError("consecutive duplicate waypoints")
        self.knots = pts
        self.u_knots = np.concatenate(([0.0], np.cumsum(chords)))
        self._cs = CubicSpline(self.u_knots, pts, bc_type="natural")
        self._d1 = self._cs.derivative(1)
        self._d2 = self._cs.derivative(2)

        u = self.u_knots
        fine = np.concatenate([np.linspace(u[i], u[i + 1], _SUBDIV, endpoint=False)
                               for i in range(len(u) - 1)] + [u[-1:]])
        self._u_tab = fine
        self._s_tab = np.concatenate(([0.0], np.cumsum(self._integrate(fine[:-1], fine[1:]))))
        self.length = float(self._s_tab[-1])

    def _speed(self, u):
        d = self._d1(u)
        return np.hypot(d[..., 0], d[..., 1])

    def _integrate(self, u0, u1):
        u0 = np.asarray(u0, dtype=float)
        h = np.asarray(u1, dtype=float) - u0
        nodes = u0[..., None] + h[..., None] * _GL_X
        return h * (self._speed(nodes) @ _GL_W)

    def arc_length_at(self, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, self.u_knots[-1])
        j = np.clip(np.searchsorted(self._u_tab, u, side="right") - 1, 0, len(self._u_tab) - 2)
        return self._s_tab[j] + self._integrate(self._u_tab[j], u)

    def param_at(self, s):
        """Invert arc length: spline parameter ``u`` with ``arc_length_at(u) == s``."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        u = np.interp(s, self._s_tab, self._u_tab)
        for _ in range(3):
            u = u - (self.arc_length_at(u) - s) / np.maximum(self._speed(u), 1e-12)
            u = np.clip(u, 0.0, self.u_knots[-1])
        return u

    def point(self, s):
        return self._cs(self.param_at(s))

    def heading(self, s):
        d = self._d1(self.param_at(s))
        return np.arctan2(d[..., 1], d[..., 0])

    def curvature(self, s):
        return _curvature_u(self, self.param_at(s))


def _curvature_u(path: SplinePath, u):
    d1 = path._d1(u)
    d2 = path._d2(u)
    num = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    return num / np.maximum(np.hypot(d1[..., 0], d1[..., 1]), 1e-12) ** 3


def fit_spline(waypoints) -> SplinePath:
    return SplinePath(waypoints)


def curvature(path: SplinePath, s):
    """Signed curvature at arc length ``s`` (scalar or array)."""
    k = path.curvature(s)
    return float(k) if np.ndim(k) == 0 else k


def fillet_polyline(waypoints, radius: float, spacing: float = 0.1) -> np.ndarray:
    """Dense samples of ``waypoints`` with each corner replaced by a circular arc.

    The arc radius at a corner shrinks when the adjacent segments are too
    short to hold the tangent points.
    """
    pts = np.asarray(waypoints, dtype=float)
    if len(pts) < 3:
        return _densify(pts, spacing)
    out = [pts[0]]
    cur = pts[0]
    for i in range(1, len(pts) - 1):
        a, b, c = pts[i - 1], pts[i], pts[i + 1]
        d_in, d_out = b - a, c - b
        l_in, l_out = np.hypot(*d_in), np.hypot(*d_out)
        u_in, u_out = d_in / l_in, d_out / l_out
        turn = math.atan2(u_in[0] * u_out[1] - u_in[1] * u_out[0], float(u_in @ u_out))
        if abs(turn) < 1e-6:
            continue
        tlen = min(radius * math.tan(abs(turn) / 2.0), 0.5 * l_in, 0.5 * l_out)
        r = tlen / math.tan(abs(turn) / 2.0)
        p_in = b - u_in * tlen
        out.extend(_densify(np.array([cur, p_in]), spacing)[1:])
        normal = np.array([-u_in[1], u_in[0]]) * math.copysign(1.0, turn)
        center = p_in + normal * r
        phi0 = math.atan2(p_in[1] - center[1], p_in[0] - center[0])
        n = max(2, int(math.ceil(r * abs(turn) / spacing)))
        for k in range(1, n + 1):
            phi = phi0 + turn * k / n
            out.append(center + r * np.array([math.cos(phi), math.sin(phi)]))
        cur = out[-1]
    out.extend(_densify(np.array([cur, pts[-1]]), spacing)[1:])
    res = [out[0]]
    for p in out[1:]:
        if np.hypot(*(p - res[-1])) > 1e-6:
            res.append(p)
    return np.array(res)


def _densify(pts: np.ndarray, spacing: float) -> np.ndarray:
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil(np.hypot(*(b - a)) / spacing)))
        for k in range(1, n + 1):
            out.append(a + (b - a) * k / n)
    return np.array(out)


@dataclass(frozen=True)
class TurnProfile:
    """Bang-bang in-place rotation: ramp at alpha to ``peak``, cruise, ramp down."""

    delta: float
    peak: float
    t_ramp: float
    t_cruise: float

    @property
    def duration(self) -> float:
        return 2.0 * self.t_ramp + self.t_cruise

    def omega(self, t):
        t = np.asarray(t, dtype=float)
        alpha = self.peak / self.t_ramp if self.t_ramp > 0 else 0.0
        T = self.duration
        w = np.where(t < self.t_ramp, alpha * t,
                     np.where(t < self.t_ramp + self.t_cruise, self.peak, alpha * (T - t)))
        return np.sign(self.delta) * np.clip(w, 0.0, self.peak)

    def angle(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.duration)
        if self.t_ramp == 0.0:
            return np.zeros_like(t)
        alpha = self.peak / self.t_ramp
        tr, tc, T = self.t_ramp, self.t_cruise, self.duration
        up = 0.5 * alpha * t ** 2
        mid = 0.5 * self.peak * tr + self.peak * (t - tr)
        td = T - t
        down = abs(self.delta) - 0.5 * alpha * td ** 2
        a = np.where(t < tr, up, np.where(t < tr + tc, mid, down))
        return np.sign(self.delta) * a


def turn_profile(delta: float, omega_max: float, alpha_max: float) -> TurnProfile:
    mag = abs(delta)
    if mag == 0.0:
        return TurnProfile(0.0, 0.0, 0.0, 0.0)
    if mag <= omega_max ** 2 / alpha_max:
        peak = math.sqrt(mag * alpha_max)
        return TurnProfile(delta, peak, peak / alpha_max, 0.0)
    return TurnProfile(delta, omega_max, omega_max / alpha_max,
                       (mag - omega_max ** 2 / alpha_max) / omega_max)


@dataclass(frozen=True)
class TimedTrajectory:
    """Reference states sampled in time: column arrays of equal length."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    omega: np.ndarray

    def __len__(self):
        return len(self.t)

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def samples(self) -> list[tuple[float, Pose2D, Twist]]:
        return [(float(t), Pose2D(float(x), float(y), float(th)), Twist(float(v), float(w)))
                for t, x, y, th, v, w in zip(self.t, self.x, self.y, self.theta, self.v, self.omega)]

    def positions_at(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        return np.column_stack((np.interp(times, self.t, self.x), np.interp(times, self.t, self.y)))

    def pose_at(self, t: float) -> Pose2D:
        return Pose2D(float(np.interp(t, self.t, self.x)), float(np.interp(t, self.t, self.y)),
                      float(np.interp(t, self.t, self.theta)))

    def twist_at(self, t: float) -> Twist:
        return Twist(float(np.interp(t, self.t, self.v)), float(np.interp(t, self.t, self.omega)))

    def arc_length(self) -> float:
        return float(np.sum(np.hypot(np.diff(self.x), np.diff(self.y))))


def _speed_profile(path: SplinePath, limits: RobotLimits, ds_target: float = 0.01,
                   scale: np.ndarray | None = None):
    n = max(2, int(math.ceil(path.length / ds_target)))
    s = np.linspace(0.0, path.length, n + 1)
    ds = s[1] - s[0]
    kap = np.abs(path.curvature(s))
    dkap = np.abs(np.gradient(path.curvature(s), ds))
    # Per-cell worst case; the slack covers variation between grid nodes.
    k_cell = np.maximum(kap[:-1], kap[1:]) * 1.05 + 1e-9
    dk_cell = np.maximum(dkap[:-1], dkap[1:]) * 1.1 + 1e-9
    k_node = np.maximum(np.concatenate((k_cell[:1], k_cell)), np.concatenate((k_cell, k_cell[-1:])))
    dk_node = np.maximum(np.concatenate((dk_cell[:1], dk_cell)), np.concatenate((dk_cell, dk_cell[-1:])))

    # Split the angular-acceleration budget between the curvature-rate term
    # (kappa' v^2) and the tangential term (kappa a).
    half_alpha = 0.45 * limits.alpha_max
    v_lim = np.minimum.reduce([np.full_like(s, limits.v_max),
                               0.97 * limits.omega_max / k_node,
                               np.sqrt(half_alpha / dk_node)])
    if scale is not None:
        v_lim = v_lim * scale
    a_cell = np.minimum(limits.a_max, half_alpha / k_cell)

    v = np.empty_like(s)
    v[0] = 0.0
    for i in range(n):
        v[i + 1] = min(v_lim[i + 1], math.sqrt(v[i] ** 2 + 2.0 * a_cell[i] * ds))
    v[-1] = 0.0
    for i in range(n - 1, -1, -1):
        v[i] = min(v[i], math.sqrt(v[i + 1] ** 2 + 2.0 * a_cell[i] * ds))
    v[0] = 0.0
    return s, v


def _sample_profile(path: SplinePath, s: np.ndarray, v: np.ndarray, dt: float):
    """Sample the piecewise constant-acceleration profile every ``dt`` seconds."""
    ds = s[1] - s[0]
    cell_t = 2.0 * ds / np.maximum(v[:-1] + v[1:], 1e-12)
    T = np.concatenate(([0.0], np.cumsum(cell_t)))
    acc = (v[1:] ** 2 - v[:-1] ** 2) / (2.0 * ds)
    times = np.arange(0.0, T[-1], dt)
    if T[-1] - times[-1] < 1e-9 * max(1.0, T[-1]):
        times = times[:-1]
    times = np.append(times, T[-1])
    j = np.clip(np.searchsorted(T, times, side="right") - 1, 0, len(cell_t) - 1)
    tau = times - T[j]
    ss = np.minimum(s[j] + v[j] * tau + 0.5 * acc[j] * tau ** 2, path.length)
    vv = np.clip(v[j] + acc[j] * tau, 0.0, None)
    ss[-1], vv[-1] = path.length, 0.0
    u = path.param_at(ss)
    return times, ss, vv, u, _curvature_u(path, u) * vv


def generate_reference(path: SplinePath, limits: RobotLimits, dt: float = 0.05,
                       t0: float = 0.0, initial_heading: float | None = None) -> TimedTrajectory:
    """Time-parameterize ``path`` from rest to rest under ``limits``.

    With ``initial_heading`` the trajectory starts with an in-place bang-bang
    turn that aligns the robot with the path tangent.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    s, v = _speed_profile(path, limits)
    scale = np.ones_like(s)
    for _ in range(40):
        times, ss, vv, u, om = _sample_profile(path, s, v, dt)
        # Curvature can change faster between profile nodes than the node
        # estimates suggest (dense fillet arcs). Slow down around any sample
        # pair that breaks the angular limits and rebuild the profile.
        step = np.diff(times)
        bad = ((np.abs(np.diff(om)) > limits.alpha_max * step)
               | (np.abs(om[1:]) > limits.omega_max) | (np.abs(om[:-1]) > limits.omega_max))
        if not bad.any():
            break
        for k in np.flatnonzero(bad):
            scale[(s >= ss[k] - 0.05) & (s <= ss[k + 1] + 0.05)] *= 0.8
        s, v = _speed_profile(path, limits, scale=scale)
    xy = path._cs(u)
    d1 = path._d1(u)
    th = np.unwrap(np.arctan2(d1[:, 1], d1[:, 0]))

    if initial_heading is not None:
        delta = wrap_angle(float(th[0]) - initial_heading)
        prof = turn_profile(delta, limits.omega_max, limits.alpha_max)
        if prof.duration > 0:
            tr = np.arange(0.0, prof.duration, dt)
            if prof.duration - tr[-1] < 1e-9:
                tr = tr[:-1]
            th = th - th[0] + initial_heading + delta
            times = np.concatenate((tr, prof.duration + times))
            xy = np.vstack((np.repeat(xy[:1], len(tr), axis=0), xy))
            th = np.concatenate((initial_heading + prof.angle(tr), th))
            vv = np.concatenate((np.zeros(len(tr)), vv))
            om = np.concatenate((prof.omega(tr), om))
    return TimedTrajectory(times + t0, xy[:, 0].copy(), xy[:, 1].copy(), th, vv, om)


def stationary_trajectory(pose: Pose2D, t0: float) -> TimedTrajectory:
    """A single-sample reference that holds ``pose``."""
    one = np.ones(1)
    return TimedTrajectory(one * t0, one * pose.x, one * pose.y, one * pose.theta,
                           np.zeros(1), np.zeros(1))
