"""Environment model: static rectangles, scripted dynamic discs, virtual overlay.

Scenario files are YAML (JSON is accepted too, being a YAML subset)::

    bounds: {w: 15, h: 11}
    robot: {radius: 0.25, v_max: 0.4, omega_max: 0.4, a_max: 0.4, alpha_max: 1.0,
            start: {x: 1, y: 1, theta: 0}, goal: {x: 14, y: 10}}
    statics: [{cx: 7, cy: 5, hw: 1, hh: 2}]
    dynamics: [{radius: 0.25, x: 3, y: 4, theta: 0, v: 0.12, omega: 0}]
    sim: {dt: 0.05, t_max: 120, runs: 30, seed: 0}
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .geometry import AxisRect, Disc, Point2, Pose2D, make_rect, point_rect_distance, wrap_angle
from .trajectory import RobotLimits


class ScenarioError(ValueError):
    """Raised when a scenario document does not match the schema."""


@dataclass(frozen=True)
class ObstacleMotion:
    v: float
    omega: float

    def __post_init__(self):
        if not (math.isfinite(self.v) and math.isfinite(self.omega)) or self.v < 0:
            raise ValueError(f"invalid obstacle motion ({self.v}, {self.omega})")


@dataclass(frozen=True)
class DynamicObstacle:
    footprint: Disc
    initial_pose: Pose2D
    motion: ObstacleMotion

    def __post_init__(self):
        if not self.footprint.radius > 0:
            raise ValueError("obstacle radius must be positive")

    @property
    def radius(self) -> float:
        return self.footprint.radius


def obstacle_pose_at(o: DynamicObstacle, t: float) -> Pose2D:
    """Closed-form constant-twist pose of ``o`` at time ``t``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    x0, y0, th0 = o.initial_pose
    v, w = o.motion.v, o.motion.omega
    if abs(w) < 1e-9:
        return Pose2D(x0 + v * t * math.cos(th0), y0 + v * t * math.sin(th0), th0)
    th = th0 + w * t
    rho = v / w
    return Pose2D(x0 + rho * (math.sin(th) - math.sin(th0)),
                  y0 - rho * (math.cos(th) - math.cos(th0)),
                  wrap_angle(th))


def obstacle_positions(o: DynamicObstacle, times: np.ndarray) -> np.ndarray:
    """Vectorized obstacle centers, shape ``(len(times), 2)``."""
    times = np.asarray(times, dtype=float)
    x0, y0, th0 = o.initial_pose
    v, w = o.motion.v, o.motion.omega
    if abs(w) < 1e-9:
        return np.column_stack((x0 + v * times * math.cos(th0), y0 + v * times * math.sin(th0)))
    th = th0 + w * times
    rho = v / w
    return np.column_stack((x0 + rho * (np.sin(th) - math.sin(th0)),
                            y0 - rho * (np.cos(th) - math.cos(th0))))


@dataclass
class World:
    bounds: AxisRect
    statics: list[AxisRect] = field(default_factory=list)
    dynamics: list[DynamicObstacle] = field(default_factory=list)
    virtuals: list[AxisRect] = field(default_factory=list)

    def __post_init__(self):
        b = self.bounds
        for i, r in enumerate(self.statics):
            if r.xmin < b.xmin or r.xmax > b.xmax or r.ymin < b.ymin or r.ymax > b.ymax:
                raise ScenarioError(f"statics[{i}] lies outside the world bounds")


@dataclass(frozen=True)
class SceneSnapshot:
    """Immutable, time-frozen view of a world.

    ``statics`` holds the static rectangles followed by the virtual ones;
    ``dynamics`` holds the obstacle discs at time ``t`` (empty when not frozen).
    """

    bounds: AxisRect
    statics: tuple[AxisRect, ...]
    dynamics: tuple[Disc, ...]
    t: float
    n_virtual: int = 0

    @property
    def physical_statics(self) -> tuple[AxisRect, ...]:
        return self.statics[:len(self.statics) - self.n_virtual]


def snapshot(w: World, t: float, freeze_dynamics: bool = True) -> SceneSnapshot:
    if t < 0:
        raise ValueError("t must be non-negative")
    discs: tuple[Disc, ...] = ()
    if freeze_dynamics:
        discs = tuple(Disc(Point2(*obstacle_pose_at(o, t)[:2]), o.radius) for o in w.dynamics)
    return SceneSnapshot(w.bounds, tuple(w.statics) + tuple(w.virtuals), discs, float(t),
                         len(w.virtuals))


@dataclass(frozen=True)
class RobotSpec:
    radius: float
    limits: RobotLimits
    start: Pose2D
    goal: Point2


@dataclass(frozen=True)
class SimSettings:
    dt: float = 0.05
    t_max: float = 120.0
    runs: int = 30
    seed: int = 0


@dataclass
class Scenario:
    name: str
    world: World
    robot: RobotSpec
    sim: SimSettings
    description: str = ""

    def fresh_world(self) -> World:
        """Deep copy of the world with an empty virtual overlay."""
        w = copy.deepcopy(self.world)
        w.virtuals = []
        return w


_TOP_KEYS = {"name", "description", "bounds", "robot", "statics", "dynamics", "sim"}


def _check_keys(d, allowed, required, where):
    if not isinstance(d, dict):
        raise ScenarioError(f"{where}: expected a mapping, got {type(d).__name__}")
    for k in d:
        if k not in allowed:
            raise ScenarioError(f"{where}: unknown key '{k}'")
    for k in required:
        if k not in d:
            raise ScenarioError(f"{where}: missing key '{k}'")


def _num(d, key, where, positive=False, nonneg=False):
    val = d[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ScenarioError(f"{where}.{key}: expected a finite number, got {val!r}")
    if positive and not val > 0:
        raise ScenarioError(f"{where}.{key}: must be > 0, got {val}")
    if nonneg and val < 0:
        raise ScenarioError(f"{where}.{key}: must be >= 0, got {val}")
    return float(val)


def parse_scenario(doc: dict, name: str = "scenario") -> Scenario:
    _check_keys(doc, _TOP_KEYS, ("bounds", "robot"), "scenario")
    _check_keys(doc["bounds"], {"w", "h"}, ("w", "h"), "bounds")
    w = _num(doc["bounds"], "w", "bounds", positive=True)
    h = _num(doc["bounds"], "h", "bounds", positive=True)
    bounds = make_rect(w / 2, h / 2, w / 2, h / 2)

    r = doc["robot"]
    _check_keys(r, {"radius", "v_max", "omega_max", "a_max", "alpha_max", "start", "goal"},
                ("radius", "start", "goal"), "robot")
    radius = _num(r, "radius", "robot", positive=True)
    lim = {}
    for k, default in (("v_max", 0.4), ("omega_max", 0.4), ("a_max", 0.4), ("alpha_max", 1.0)):
        lim[k] = _num(r, k, "robot", positive=True) if k in r else default
    _check_keys(r["start"], {"x", "y", "theta"}, ("x", "y"), "robot.start")
    _check_keys(r["goal"], {"x", "y"}, ("x", "y"), "robot.goal")
    start = Pose2D(_num(r["start"], "x", "robot.start"), _num(r["start"], "y", "robot.start"),
                   _num(r["start"], "theta", "robot.start") if "theta" in r["start"] else 0.0)
    goal = Point2(_num(r["goal"], "x", "robot.goal"), _num(r["goal"], "y", "robot.goal"))
    for label, p in (("start", start), ("goal", goal)):
        if not bounds.contains(p, margin=radius):
            raise ScenarioError(f"robot.{label} is outside the world bounds")

    statics = []
    for i, s in enumerate(doc.get("statics") or []):
        where = f"statics[{i}]"
        _check_keys(s, {"cx", "cy", "hw", "hh"}, ("cx", "cy", "hw", "hh"), where)
        statics.append(make_rect(_num(s, "cx", where), _num(s, "cy", where),
                                 _num(s, "hw", where, positive=True),
                                 _num(s, "hh", where, positive=True)))
        for label, p in (("start", start), ("goal", goal)):
            if point_rect_distance(p, statics[-1]) < radius:
                raise ScenarioError(f"robot.{label} collides with {where}")

    dynamics = []
    for i, o in enumerate(doc.get("dynamics") or []):
        where = f"dynamics[{i}]"
        _check_keys(o, {"radius", "x", "y", "theta", "v", "omega"}, ("radius", "x", "y", "v"), where)
        pose = Pose2D(_num(o, "x", where), _num(o, "y", where),
                      _num(o, "theta", where) if "theta" in o else 0.0)
        if not bounds.contains(pose):
            raise ScenarioError(f"{where}: initial position outside the world bounds")
        dynamics.append(DynamicObstacle(
            Disc(Point2(pose.x, pose.y), _num(o, "radius", where, positive=True)), pose,
            ObstacleMotion(_num(o, "v", where, nonneg=True),
                           _num(o, "omega", where) if "omega" in o else 0.0)))

    sim = SimSettings()
    if "sim" in doc:
        s = doc["sim"]
        _check_keys(s, {"dt", "t_max", "runs", "seed"}, (), "sim")
        sim = SimSettings(
            dt=_num(s, "dt", "sim", positive=True) if "dt" in s else sim.dt,
            t_max=_num(s, "t_max", "sim", positive=True) if "t_max" in s else sim.t_max,
            runs=int(_num(s, "runs", "sim", positive=True)) if "runs" in s else sim.runs,
            seed=int(_num(s, "seed", "sim")) if "seed" in s else sim.seed)

    world = World(bounds, statics, dynamics, [])
    robot = RobotSpec(radius, RobotLimits(**lim), start, goal)
    return Scenario(str(doc.get("name", name)), world, robot, sim, str(doc.get("description", "")))


def load_scenario(text: str, name: str = "scenario") -> Scenario:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario is not valid YAML: {exc}") from exc
    return parse_scenario(doc, name)


def bundled_scenarios() -> list[str]:
    files = resources.files("seqbit") / "scenarios"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


def resolve_scenario(ref: str) -> Scenario:
    """Load a scenario by file path, or by the name of a bundled scenario."""
    path = Path(ref)
    if path.is_file():
        return load_scenario(path.read_text(), path.stem)
    bundled = resources.files("seqbit") / "scenarios" / f"{ref}.yaml"
    if bundled.is_file():
        return load_scenario(bundled.read_text(), ref)
    raise ScenarioError(f"no scenario file or bundled scenario named '{ref}'")
