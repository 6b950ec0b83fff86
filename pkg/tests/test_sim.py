import math

import pytest

from seqbit.geometry import Disc, Point2, Pose2D, make_rect
from seqbit.sim import (GOAL_TOLERANCE, RunResult, TraceError, aggregate, detect_collision,
                        format_trace, parse_trace, run)
from seqbit.world import DynamicObstacle, ObstacleMotion, World, resolve_scenario, snapshot

ARENA = make_rect(7.5, 5.5, 7.5, 5.5)


def result(length, outcome="Reached", scenario="s", plan_time=0.1, ttg=30.0):
    return RunResult("seqbit", scenario, 0, outcome, length, plan_time, ttg, 0, 0.5, [])


@pytest.mark.parametrize("planner", ["seqbit", "dovs"])
def test_empty_world_either_planner(planner):
    sc = resolve_scenario("open-field")
    r = run(sc, planner, 1)
    assert r.reached and r.virtuals_used == 0
    assert r.path_length <= 1.05 * math.dist(sc.robot.start.position, sc.robot.goal)
    last = r.trace[-1]
    assert math.dist((last.x, last.y), sc.robot.goal) <= GOAL_TOLERANCE
    assert "GOAL" in last.events


def test_paper_3obs_outcomes():
    sc = resolve_scenario("paper-3obs")
    s = run(sc, "seqbit", 7)
    assert s.reached and s.virtuals_used == 2 and s.min_clearance > 0
    d = run(sc, "dovs", 7)
    assert d.outcome == "Crashed" and "CRASH" in d.trace[-1].events
    assert math.isnan(d.time_to_goal)


def test_unknown_planner():
    with pytest.raises(ValueError):
        run(resolve_scenario("open-field"), "rrt", 0)


def test_timeout():
    r = run(resolve_scenario("open-field"), "seqbit", 0, t_max=5.0)
    assert r.outcome == "Timeout"


# -- collision detection -----------------------------------------------------

def _scene(statics=(), dynamics=(), virtuals=()):
    w = World(ARENA, list(statics), list(dynamics))
    w.virtuals.extend(virtuals)
    return snapshot(w, 0.0)


def test_far_from_everything():
    assert not detect_collision(Disc(Point2(7, 5), 0.25), _scene([make_rect(2, 2, 0.5, 0.5)]))


def test_inside_static():
    assert detect_collision(Disc(Point2(2, 2), 0.25), _scene([make_rect(2, 2, 0.5, 0.5)]))


def test_overlapping_dynamic_and_wall():
    o = DynamicObstacle(Disc(Point2(5, 5), 0.25), Pose2D(5, 5, 0), ObstacleMotion(0.1, 0))
    assert detect_collision(Disc(Point2(5.4, 5), 0.25), _scene(dynamics=[o]))
    assert detect_collision(Disc(Point2(0.2, 5), 0.25), _scene())


def test_virtual_rect_is_not_physical():
    assert not detect_collision(Disc(Point2(3, 3), 0.25), _scene(virtuals=[make_rect(3, 3, 1, 1)]))


# -- statistics --------------------------------------------------------------

def test_aggregate_single_run():
    a = aggregate([result(12.0)])
    assert a.path_length_mean == 12.0 and a.path_length_std == 0.0 and a.failure_rate == 0.0


def test_aggregate_two_runs_and_failures():
    a = aggregate([result(10.0), result(14.0), result(3.0, "Crashed", ttg=math.nan)])
    assert a.path_length_mean == 12.0
    assert a.path_length_std == pytest.approx(math.sqrt(8.0))
    assert a.failure_rate == pytest.approx(1 / 3)
    assert a.n == 3


def test_aggregate_all_failed_and_errors():
    a = aggregate([result(3.0, "Crashed")])
    assert a.failure_rate == 1.0 and math.isnan(a.path_length_mean)
    with pytest.raises(ValueError):
        aggregate([])
    with pytest.raises(ValueError):
        aggregate([result(1.0, scenario="a"), result(1.0, scenario="b")])


def test_paper_1obs_lengths_are_stable():
    sc = resolve_scenario("paper-1obs")
    a = aggregate([run(sc, "seqbit", s) for s in range(10)])
    assert a.failure_rate == 0.0
    assert a.path_length_std / a.path_length_mean < 0.10


# -- trace log ---------------------------------------------------------------

def test_trace_round_trip():
    sc = resolve_scenario("paper-2obs")
    r = run(sc, "seqbit", 3)
    tr = parse_trace(format_trace(r, sc))
    assert tr.planner == "seqbit" and tr.outcome == r.outcome
    assert len(tr.records) == len(r.trace)
    assert tr.meta["name"] == "paper-2obs" and len(tr.meta["dynamics"]) == 2
    got = [c for v in tr.virtuals() for c in (*v.center, v.half_width)]
    want = [c for v in r.virtuals for c in (*v.center, v.half_width)]
    assert got == pytest.approx(want, abs=1e-6)
    assert tr.records[0].events[0] == "PLAN"


@pytest.mark.parametrize("text", [
    "",
    "# planner seqbit\nt,x,y\n1,2,3\n",
    "# scenario {\"bounds\": {\"w\": 1, \"h\": 1}}\nt,x,y,theta,v,omega,event\n0,0,0,0,0,zero,\n",
    "# scenario {broken\nt,x,y,theta,v,omega,event\n",
    "t,x,y,theta,v,omega,event\n0,0,0,0,0,0,\n",
])
def test_malformed_traces(text):
    with pytest.raises(TraceError):
        parse_trace(text)


@pytest.mark.parametrize("planner", ["seqbit", "dovs"])
def test_runs_are_deterministic(planner):
    sc = resolve_scenario("paper-2obs")
    a, b = run(sc, planner, 5), run(sc, planner, 5)
    assert format_trace(a, sc) == format_trace(b, sc)
