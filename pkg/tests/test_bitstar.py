import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqbit.bitstar import BitStar, InvalidQuery, NoPath, PlannerConfig, heuristic_cost, plan
from seqbit.geometry import make_rect, point_rect_distance
from seqbit.world import World, snapshot

from oracles import visibility_shortest_path

BOUNDS = make_rect(7.5, 5.5, 7.5, 5.5)
START, GOAL = (1.0, 1.0), (14.0, 10.0)


def scene(rects=()):
    return snapshot(World(BOUNDS, list(rects)), 0.0)


def random_rects(rng, max_rects=5, keep_clear=(START, GOAL)):
    """Up to ``max_rects`` rectangles inside the arena that leave the given points free."""
    while True:
        rects = []
        for _ in range(int(rng.integers(1, max_rects + 1))):
            hw, hh = rng.uniform(0.3, 2.0, 2)
            rects.append(make_rect(rng.uniform(hw + 0.01, 15 - hw - 0.01),
                                   rng.uniform(hh + 0.01, 11 - hh - 0.01), hw, hh))
        if all(point_rect_distance(p, r) > 0.3 for r in rects for p in keep_clear):
            return rects


def test_empty_map_is_nearly_straight():
    sol = plan(scene(), START, GOAL, PlannerConfig(batch_size=100, max_batches=10))
    assert sol.cost <= math.dist(START, GOAL) * 1.02
    assert sol.waypoints[0] == START and sol.waypoints[-1] == GOAL
    assert sol.batches == 10 and len(sol.per_batch_costs) == 10


def test_start_equals_goal():
    sol = plan(scene(), (3.0, 3.0), (3.0, 3.0))
    assert sol.cost == 0.0
    assert sol.waypoints == [(3.0, 3.0)]


def test_wall_with_gap_matches_visibility_graph():
    # a wall across the arena with one opening near the top
    rects = [make_rect(7.5, 4.0, 0.3, 4.0), make_rect(7.5, 10.5, 0.3, 0.5)]
    sol = plan(scene(rects), (2.0, 3.0), (13.0, 3.0), PlannerConfig(rng_seed=1))
    ref = visibility_shortest_path((2.0, 3.0), (13.0, 3.0), rects, BOUNDS)
    assert ref < math.inf
    assert ref <= sol.cost <= ref * 1.03


@pytest.mark.parametrize("m", range(3))
def test_random_maps_match_visibility_graph(m):
    rects = random_rects(np.random.default_rng(100 + m))
    sol = plan(scene(rects), START, GOAL, PlannerConfig(rng_seed=m))
    ref = visibility_shortest_path(START, GOAL, rects, BOUNDS)
    assert ref - 1e-9 <= sol.cost <= ref * 1.03


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 3))
def test_anytime_cost_never_increases(map_seed, seed):
    rects = random_rects(np.random.default_rng(map_seed))
    sol = plan(scene(rects), START, GOAL, PlannerConfig(rng_seed=seed, max_batches=6))
    c = sol.per_batch_costs
    assert all(b <= a for a, b in zip(c, c[1:]))


def test_samples_after_first_solution_are_informed():
    rects = random_rects(np.random.default_rng(5))
    bt = BitStar(scene(rects), START, GOAL, PlannerConfig(rng_seed=2))
    bt.solve()
    informed = [(c, pts) for c, pts in bt.sample_log if c < math.inf]
    assert informed
    for c, pts in informed:
        lhs = np.hypot(*(pts - START).T) + np.hypot(*(pts - GOAL).T)
        assert np.all(lhs <= c + 1e-9)


def test_heuristic_is_admissible():
    rng = np.random.default_rng(9)
    rects = random_rects(rng)
    for _ in range(20):
        a, b = rng.uniform([0.2, 0.2], [14.8, 10.8], (2, 2))
        if any(point_rect_distance(p, r) < 1e-3 for r in rects for p in (a, b)):
            continue
        assert heuristic_cost(a, b) <= visibility_shortest_path(a, b, rects, BOUNDS) + 1e-9


@pytest.mark.parametrize("m", range(5))
def test_solution_edges_are_collision_free(m):
    rects = random_rects(np.random.default_rng(200 + m))
    cfg = PlannerConfig(rng_seed=m, inflation=0.25)
    sol = plan(scene(rects), START, GOAL, cfg)
    if not sol:
        pytest.skip("no path on this map")
    step = cfg.edge_check_resolution / 10
    for a, b in zip(sol.waypoints[:-1], sol.waypoints[1:]):
        n = max(2, int(math.dist(a, b) / step) + 1)
        t = np.linspace(0, 1, n)[:, None]
        pts = np.asarray(a) + t * (np.asarray(b) - np.asarray(a))
        assert np.all((pts >= 0.25 - 1e-9) & (pts <= np.array([14.75, 10.75]) + 1e-9))
        for r in rects:
            assert min(point_rect_distance(p, r) for p in pts) > cfg.inflation


def test_same_seed_same_answer():
    rects = random_rects(np.random.default_rng(11))
    a = plan(scene(rects), START, GOAL, PlannerConfig(rng_seed=4))
    b = plan(scene(rects), START, GOAL, PlannerConfig(rng_seed=4))
    assert a.waypoints == b.waypoints and a.per_batch_costs == b.per_batch_costs


def test_blocked_goal_returns_no_path():
    wall = make_rect(7.5, 5.5, 0.3, 5.5)
    res = plan(scene([wall]), START, GOAL, PlannerConfig(max_batches=3))
    assert isinstance(res, NoPath) and not res
    assert res.batches == 3


@pytest.mark.parametrize("start, goal", [((5.0, 5.0), GOAL), (START, (5.0, 5.0)), ((-1.0, 1.0), GOAL)])
def test_bad_endpoints_raise(start, goal):
    with pytest.raises(InvalidQuery):
        plan(scene([make_rect(5, 5, 1, 1)]), start, goal)


def test_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(batch_size=0)
    with pytest.raises(ValueError):
        PlannerConfig(rewire_factor=1.0)
    with pytest.raises(ValueError):
        PlannerConfig(inflation=-0.1)
