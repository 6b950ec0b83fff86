"""Command-line entry point for simulation runs and their summaries."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .plot import render_svg
from .sim import (CRASHED, PLANNERS, REACHED, TIMEOUT, AggregateStats, RunResult, TraceError,
                  aggregate, format_trace, parse_trace, run)
from .world import ScenarioError, resolve_scenario

EXIT_CODES = {REACHED: 0, CRASHED: 2, TIMEOUT: 3}
EXIT_BAD_INPUT = 1
BENCH_HEADER = ["planner", "n_dynamic", "path_length_mean", "path_length_std", "plan_time_mean",
                "plan_time_std", "time_to_goal_mean", "time_to_goal_std", "failure_rate"]


def exit_code(outcome: str) -> int:
    return EXIT_CODES[outcome]


def _with_overrides(dt: float | None, tmax: float | None) -> dict:
    kw = {}
    if dt is not None:
        kw["dt"] = dt
    if tmax is not None:
        kw["t_max"] = tmax
    return kw


def _metrics_line(r: RunResult) -> str:
    return (f"planner={r.planner} scenario={r.scenario} seed={r.seed} outcome={r.outcome} "
            f"path_length={r.path_length:.3f} plan_time={r.plan_time:.4f} "
            f"time_to_goal={r.time_to_goal:.2f} virtuals={r.virtuals_used} "
            f"min_clearance={r.min_clearance:.3f}")


def cmd_run(args) -> int:
    try:
        scenario = resolve_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    result = run(scenario, args.planner, args.seed, **_with_overrides(args.dt, args.tmax))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{scenario.name}_{args.planner}_seed{args.seed}"
    text = format_trace(result, scenario)
    (out / f"{stem}.trace.csv").write_text(text)
    (out / f"{stem}.svg").write_text(render_svg([parse_trace(text)]))
    print(_metrics_line(result))
    return exit_code(result.outcome)


def _bench_job(job):
    ref, planner, seed, kw = job
    r = run(resolve_scenario(ref), planner, seed, **kw)
    r.trace = []  # traces are not needed for statistics; keep inter-process payloads small
    return r


def stats_row(planner: str, n_dynamic: int, s: AggregateStats) -> list[str]:
    vals = [s.path_length_mean, s.path_length_std, s.plan_time_mean, s.plan_time_std,
            s.time_to_goal_mean, s.time_to_goal_std, s.failure_rate]
    return [planner, str(n_dynamic)] + [repr(float(v)) for v in vals]


def parse_bench_csv(text: str) -> list[tuple[str, int, AggregateStats]]:
    """Inverse of the bench CSV writer (``n`` is not stored and comes back as 0)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != BENCH_HEADER:
        raise ValueError("not a bench CSV")
    out = []
    for row in rows[1:]:
        nums = [float(v) for v in row[2:]]
        out.append((row[0], int(row[1]), AggregateStats(0, *nums)))
    return out


def run_bench(refs: list[str], planners: list[str], runs: int, seed: int, jobs: int = 1,
              dt: float | None = None, tmax: float | None = None) -> str:
    """Run every (scenario, planner) pair ``runs`` times and return the CSV text."""
    if runs < 1:
        raise ValueError("runs must be at least 1")
    scenarios = [resolve_scenario(r) for r in refs]
    kw = _with_overrides(dt, tmax)
    job_list = []
    for ref in refs:
        for planner in planners:
            job_list += [(ref, planner, seed + k, kw) for k in range(runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_bench_job, job_list))
    else:
        results = [_bench_job(j) for j in job_list]

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    i = 0
    for sc in scenarios:
        for planner in planners:
            chunk = results[i:i + runs]
            i += runs
            w.writerow(stats_row(planner, len(sc.world.dynamics), aggregate(chunk)))
    return buf.getvalue()


def cmd_bench(args) -> int:
    planners = args.planner or list(PLANNERS)
    try:
        text = run_bench(args.scenarios, planners, args.runs, args.seed, args.jobs, args.dt, args.tmax)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.csv").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_plot(args) -> int:
    try:
        traces = [parse_trace(Path(p).read_text()) for p in args.traces]
    except (OSError, TraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    svg = render_svg(traces)
    if args.output:
        Path(args.output).write_text(svg)
    else:
        sys.stdout.write(svg)
    return 0


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seqbit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one run and write its trace plus an SVG")
    r.add_argument("scenario", help="scenario file or bundled scenario name")
    r.add_argument("--planner", choices=PLANNERS, default="seqbit")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default="out")
    r.add_argument("--dt", type=float)
    r.add_argument("--tmax", type=float)
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="seeded runs per scenario and planner, CSV to stdout")
    b.add_argument("scenarios", nargs="+")
    b.add_argument("--planner", choices=PLANNERS, action="append",
                   help="repeat to select several (default: all)")
    b.add_argument("--runs", type=_positive_int, default=30)
    b.add_argument("--seed", type=int, default=0, help="seed of the first run")
    b.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1)
    b.add_argument("--out")
    b.add_argument("--dt", type=float)
    b.add_argument("--tmax", type=float)
    b.set_defaults(func=cmd_bench)

    pl = sub.add_parser("plot", help="render one or more trace logs as SVG")
    pl.add_argument("traces", nargs="+")
    pl.add_argument("-o", "--output")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
