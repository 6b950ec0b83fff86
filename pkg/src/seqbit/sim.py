"""Fixed-step closed-loop simulation and run statistics."""

from __future__ import annotations

import io
import json
import math
import statistics
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .bitstar import PlannerConfig
from .control import RobotState, TrackingGains, step_robot, track
from .dovs import DovsConfig, dovs_step
from .geometry import AxisRect, Disc, Point2, Pose2D, Twist, distance, point_rect_distance
from .replanner import ReplanFailure, ReplanSettings, predict_first_collision, replan
from .trajectory import TimedTrajectory, stationary_trajectory
from .world import Scenario, SceneSnapshot, obstacle_pose_at, snapshot

REACHED, CRASHED, TIMEOUT = "Reached", "Crashed", "Timeout"
GOAL_TOLERANCE = 0.2
PLANNERS = ("seqbit", "dovs")


@dataclass
class TraceRecord:
    t: float
    x: float
    y: float
    theta: float
    v: float
    omega: float
    events: list[str] = field(default_factory=list)


@dataclass
class RunResult:
    planner: str
    scenario: str
    seed: int
    outcome: str
    path_length: float
    plan_time: float
    time_to_goal: float
    virtuals_used: int
    min_clearance: float
    trace: list[TraceRecord]
    virtuals: list[AxisRect] = field(default_factory=list)
    replan_calls: int = 0
    plans: int = 0
    n_dynamic: int = 0

    @property
    def reached(self) -> bool:
        return self.outcome == REACHED


@dataclass(frozen=True)
class AggregateStats:
    n: int
    path_length_mean: float
    path_length_std: float
    plan_time_mean: float
    plan_time_std: float
    time_to_goal_mean: float
    time_to_goal_std: float
    failure_rate: float


def _walls_gap(p, r: float, bounds: AxisRect) -> float:
    return min(p[0] - bounds.xmin, bounds.xmax - p[0], p[1] - bounds.ymin, bounds.ymax - p[1]) - r


def clearance(robot: Disc, scene: SceneSnapshot) -> float:
    """Smallest gap between the robot disc and any physical obstacle or wall."""
    gap = _walls_gap(robot.center, robot.radius, scene.bounds)
    for d in scene.dynamics:
        gap = min(gap, distance(robot.center, d.center) - robot.radius - d.radius)
    for r in scene.physical_statics:
        gap = min(gap, point_rect_distance(robot.center, r) - robot.radius)
    return gap


def detect_collision(robot: Disc, scene: SceneSnapshot) -> bool:
    """True iff the robot disc overlaps a physical obstacle or leaves the arena.

    Virtual rectangles are planning constructs and never collide.
    """
    return clearance(robot, scene) < 0.0


def _fmt_rect(r: AxisRect) -> str:
    return f"cx={r.center.x:.6f};cy={r.center.y:.6f};hw={r.half_width:.6f};hh={r.half_height:.6f}"


@dataclass
class _Runner:
    scenario: Scenario
    seed: int
    cfg: PlannerConfig
    dt: float
    t_max: float

    def __post_init__(self):
        self.world = self.scenario.fresh_world()
        robot = self.scenario.robot
        self.r = robot.radius
        self.limits = robot.limits
        self.goal = robot.goal
        self.state = RobotState(robot.start, Twist(0.0, 0.0))
        self.t = 0.0
        self.trace: list[TraceRecord] = []
        self.pending: list[str] = []
        self.length = 0.0
        self.plan_time = 0.0
        self.min_gap = math.inf

    def record(self):
        (x, y, th), (v, w) = self.state.pose, self.state.twist
        self.trace.append(TraceRecord(self.t, x, y, th, v, w, self.pending))
        self.pending = []

    def check(self) -> str | None:
        scene = snapshot(self.world, self.t, freeze_dynamics=True)
        gap = clearance(Disc(self.state.pose.position, self.r), scene)
        self.min_gap = min(self.min_gap, gap)
        if gap < 0.0:
            self.pending.append("CRASH")
            return CRASHED
        if distance(self.state.pose.position, self.goal) <= GOAL_TOLERANCE:
            self.pending.append("GOAL")
            return REACHED
        return None

    def advance(self, cmd: Twist):
        before = self.state.pose.position
        self.state = step_robot(self.state, cmd, self.dt, self.limits)
        self.length += distance(before, self.state.pose.position)
        self.t = round(self.t + self.dt, 9)


def _result(run: _Runner, planner: str, outcome: str, **extra) -> RunResult:
    return RunResult(planner, run.scenario.name, run.seed, outcome, run.length, run.plan_time,
                     run.t if outcome == REACHED else math.nan, len(run.world.virtuals),
                     run.min_gap, run.trace, list(run.world.virtuals),
                     n_dynamic=len(run.world.dynamics), **extra)


def run_seqbit(scenario: Scenario, seed: int = 0, cfg: PlannerConfig | None = None,
               gains: TrackingGains = TrackingGains(), settings: ReplanSettings = ReplanSettings(),
               dt: float | None = None, t_max: float | None = None,
               monitor_every: float = 1.0, max_deviation: float = 0.5) -> RunResult:
    """Track a replanned reference; replan whenever a new contact is predicted.

    Replanning always starts from rest: the robot brakes, the loop plans from
    the stopping pose, and the new reference opens with the in-place turn.
    """
    cfg = cfg or PlannerConfig(rng_seed=seed)
    dt = dt or scenario.sim.dt
    run = _Runner(scenario, seed, cfg, dt, t_max or scenario.sim.t_max)
    settings = replace(settings, dt=dt)
    ref: TimedTrajectory | None = None
    calls = plans = 0
    mode, wait_until = "plan", 0.0
    next_monitor = monitor_every

    def do_replan() -> TimedTrajectory | None:
        nonlocal calls, plans
        calls += 1
        pose = run.state.pose
        n_before = len(run.world.virtuals)
        t0 = time.perf_counter()
        try:
            res = replan(run.world, pose.position, run.goal, run.t, run.r, run.limits, cfg,
                         start_heading=pose.theta, settings=settings)
        except ReplanFailure as exc:
            run.plan_time += time.perf_counter() - t0
            plans += exc.state.iterations
            # Virtuals from a failed round never produced a path; drop them.
            del run.world.virtuals[n_before:]
            return None
        run.plan_time += time.perf_counter() - t0
        plans += res.state.iterations
        for v in res.state.virtuals:
            run.pending.append("VIRTUAL_ADDED(" + _fmt_rect(v) + ")")
        traj = res.trajectory
        if np.any((traj.v == 0.0) & (traj.omega != 0.0)):
            run.pending.append("SWITCH")
        return traj

    outcome = None
    while True:
        if mode == "plan":
            run.pending.append("PLAN" if calls == 0 else "REPLAN")
            ref = do_replan()
            if ref is None:
                mode, wait_until = "wait", run.t + 1.0
            else:
                mode = "follow"
                next_monitor = run.t + monitor_every
        outcome = run.check()
        run.record()
        if outcome or run.t >= run.t_max - 1e-9:
            break

        if mode in ("brake", "wait"):
            run.advance(Twist(0.0, 0.0))
            at_rest = abs(run.state.twist.v) < 1e-9 and abs(run.state.twist.omega) < 1e-9
            if at_rest and (mode == "brake" or run.t >= wait_until - 1e-9):
                mode = "plan"
            continue

        cmd = track(run.state, ref.pose_at(run.t), ref.twist_at(run.t), gains, run.limits)
        run.advance(cmd)
        if run.t >= next_monitor - 1e-9:
            next_monitor += monitor_every
            dev = distance(run.state.pose.position, ref.pose_at(run.t).position)
            pred = None
            if run.t < ref.t_end:
                pred = predict_first_collision(ref, run.world.dynamics, run.r, ref.t_end - run.t,
                                               settings.dt_check, run.t, 0.0)
            if pred is not None or dev > max_deviation:
                mode = "brake"

    if outcome is None:
        outcome = TIMEOUT
    return _result(run, "seqbit", outcome, replan_calls=calls, plans=plans)


def run_dovs(scenario: Scenario, seed: int = 0, cfg: DovsConfig = DovsConfig(),
             dt: float | None = None, t_max: float | None = None) -> RunResult:
    """Drive with the velocity-space comparator, recomputed every step.

    The comparator has no random component; ``seed`` only labels the run.
    """
    dt = dt or scenario.sim.dt
    run = _Runner(scenario, seed, PlannerConfig(rng_seed=seed), dt, t_max or scenario.sim.t_max)
    run.pending.append("PLAN")
    outcome = None
    while True:
        outcome = run.check()
        run.record()
        if outcome or run.t >= run.t_max - 1e-9:
            break
        t0 = time.perf_counter()
        cmd, _ = dovs_step(run.state, run.world, run.t, cfg, run.limits, dt, run.r, run.goal)
        run.plan_time += time.perf_counter() - t0
        run.advance(cmd)
    if outcome is None:
        outcome = TIMEOUT
    return _result(run, "dovs", outcome)


def run(scenario: Scenario, planner: str, seed: int = 0, **kwargs) -> RunResult:
    if planner == "seqbit":
        return run_seqbit(scenario, seed, **kwargs)
    if planner == "dovs":
        return run_dovs(scenario, seed, **kwargs)
    raise ValueError(f"unknown planner '{planner}' (expected one of {PLANNERS})")


def aggregate(results: list[RunResult]) -> AggregateStats:
    """Mean and sample standard deviation per metric over the successful runs."""
    if not results:
        raise ValueError("cannot aggregate an empty result list")
    if len({r.scenario for r in results}) > 1:
        raise ValueError("results come from different scenarios")
    ok = [r for r in results if r.reached]

    def ms(vals):
        if not vals:
            return math.nan, math.nan
        return statistics.fmean(vals), (statistics.stdev(vals) if len(vals) > 1 else 0.0)

    pl = ms([r.path_length for r in ok])
    pt = ms([r.plan_time for r in ok])
    tg = ms([r.time_to_goal for r in ok])
    return AggregateStats(len(results), pl[0], pl[1], pt[0], pt[1], tg[0], tg[1],
                          1.0 - len(ok) / len(results))


# -- trace log -------------------------------------------------------------

TRACE_HEADER = "t,x,y,theta,v,omega,event"


def scenario_metadata(s: Scenario) -> dict:
    w = s.world
    return {
        "name": s.name,
        "bounds": {"w": 2 * w.bounds.half_width, "h": 2 * w.bounds.half_height},
        "robot": {"radius": s.robot.radius,
                  "start": {"x": s.robot.start.x, "y": s.robot.start.y, "theta": s.robot.start.theta},
                  "goal": {"x": s.robot.goal.x, "y": s.robot.goal.y}},
        "statics": [{"cx": r.center.x, "cy": r.center.y, "hw": r.half_width, "hh": r.half_height}
                    for r in w.statics],
        "dynamics": [{"radius": o.radius, "x": o.initial_pose.x, "y": o.initial_pose.y,
                      "theta": o.initial_pose.theta, "v": o.motion.v, "omega": o.motion.omega}
                     for o in w.dynamics],
    }


def format_trace(result: RunResult, scenario: Scenario) -> str:
    """Serialize a run as ``#``-prefixed metadata lines followed by CSV records.

    Only simulated quantities are written, so the text is a pure function of
    (scenario, planner, seed).
    """
    out = io.StringIO()
    out.write(f"# planner {result.planner}\n")
    out.write(f"# seed {result.seed}\n")
    out.write(f"# outcome {result.outcome}\n")
    out.write("# scenario " + json.dumps(scenario_metadata(scenario), sort_keys=True) + "\n")
    out.write(TRACE_HEADER + "\n")
    for r in result.trace:
        out.write(f"{r.t:.3f},{r.x:.6f},{r.y:.6f},{r.theta:.6f},{r.v:.6f},{r.omega:.6f},"
                  f"{'|'.join(r.events)}\n")
    return out.getvalue()


@dataclass
class Trace:
    planner: str
    outcome: str
    meta: dict
    records: list[TraceRecord]

    def virtuals(self) -> list[AxisRect]:
        rects = []
        for r in self.records:
            for ev in r.events:
                if ev.startswith("VIRTUAL_ADDED(") and ev.endswith(")"):
                    kv = dict(item.split("=") for item in ev[len("VIRTUAL_ADDED("):-1].split(";"))
                    rects.append(AxisRect(Point2(float(kv["cx"]), float(kv["cy"])),
                                          float(kv["hw"]), float(kv["hh"])))
        return rects


class TraceError(ValueError):
    pass


def parse_trace(text: str) -> Trace:
    meta: dict = {}
    planner = outcome = ""
    records: list[TraceRecord] = []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(" ")
            try:
                if key == "scenario":
                    meta = json.loads(val)
                elif key == "planner":
                    planner = val
                elif key == "outcome":
                    outcome = val
            except json.JSONDecodeError as exc:
                raise TraceError(f"line {lineno}: bad scenario metadata") from exc
            continue
        if not header_seen:
            if line.strip() != TRACE_HEADER:
                raise TraceError(f"line {lineno}: expected header '{TRACE_HEADER}'")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise TraceError(f"line {lineno}: expected 7 fields, got {len(parts)}")
        try:
            vals = [float(p) for p in parts[:6]]
        except ValueError as exc:
            raise TraceError(f"line {lineno}: non-numeric field") from exc
        records.append(TraceRecord(*vals, [e for e in parts[6].split("|") if e]))
    if not header_seen or not records:
        raise TraceError("trace has no records")
    if "bounds" not in meta:
        raise TraceError("trace lacks scenario metadata")
    return Trace(planner, outcome, meta, records)
