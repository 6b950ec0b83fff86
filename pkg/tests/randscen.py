"""Random dynamic scenarios for statistical tests.

Each scenario is a 15 x 11 m arena with a few static boxes and one to three
moving discs whose tracks are aimed at the straight start-goal line near the
time a robot cruising at full speed would pass, so that most of them force
at least one re-plan.
"""

from __future__ import annotations

import math

import numpy as np

from seqbit.world import parse_scenario

W, H = 15.0, 11.0


def _free(p, rects, margin):
    return all(abs(p[0] - r["cx"]) > r["hw"] + margin or abs(p[1] - r["cy"]) > r["hh"] + margin
               for r in rects)


def random_dynamic_scenario(seed: int):
    rng = np.random.default_rng(seed)
    start = (1.5, float(rng.uniform(2.0, 9.0)))
    goal = (13.5, float(rng.uniform(2.0, 9.0)))
    statics = []
    for _ in range(int(rng.integers(0, 3))):
        hw, hh = (float(v) for v in rng.uniform(0.2, 1.0, 2))
        r = {"cx": float(rng.uniform(4.0, 11.0)), "cy": float(rng.uniform(hh + 0.5, H - hh - 0.5)),
             "hw": hw, "hh": hh}
        if _free(start, [r], 1.0) and _free(goal, [r], 1.0):
            statics.append(r)
    length = math.dist(start, goal)
    dynamics = []
    while len(dynamics) < int(rng.integers(1, 4)):
        f = rng.uniform(0.25, 0.75)
        cross = (start[0] + f * (goal[0] - start[0]), start[1] + f * (goal[1] - start[1]))
        t_cross = f * length / 0.4 + rng.uniform(1.0, 4.0)
        v = float(rng.uniform(0.1, 0.3))
        th = float(rng.uniform(-math.pi, math.pi))
        x0 = cross[0] - v * t_cross * math.cos(th)
        y0 = cross[1] - v * t_cross * math.sin(th)
        if not (0.5 < x0 < W - 0.5 and 0.5 < y0 < H - 0.5):
            continue
        if math.dist((x0, y0), start) < 1.5 or math.dist((x0, y0), goal) < 1.0:
            continue
        if not _free((x0, y0), statics, 0.3):
            continue
        dynamics.append({"radius": 0.25, "x": x0, "y": y0, "theta": th, "v": v, "omega": 0.0})
    doc = {"bounds": {"w": W, "h": H},
           "robot": {"radius": 0.25, "start": {"x": start[0], "y": start[1], "theta": 0.0},
                     "goal": {"x": goal[0], "y": goal[1]}},
           "statics": statics, "dynamics": dynamics}
    return parse_scenario(doc, f"random-{seed}")
