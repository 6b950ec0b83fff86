"""Sequential informed-tree replanning among moving obstacles, with a velocity-space baseline."""

from .bitstar import BitStar, NoPath, PlannerConfig, PlannerSolution, plan
from .replanner import ReplanFailure, ReplanResult, replan
from .sim import RunResult, aggregate, run
from .world import Scenario, ScenarioError, World, load_scenario, resolve_scenario

__all__ = [
    "BitStar", "NoPath", "PlannerConfig", "PlannerSolution", "plan",
    "ReplanFailure", "ReplanResult", "replan",
    "RunResult", "aggregate", "run",
    "Scenario", "ScenarioError", "World", "load_scenario", "resolve_scenario",
]
