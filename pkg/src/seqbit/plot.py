"""SVG rendering of simulation traces."""

from __future__ import annotations

import numpy as np

from .geometry import Disc, Point2, Pose2D
from .sim import Trace
from .world import DynamicObstacle, ObstacleMotion, obstacle_positions

SCALE = 50.0  # pixels per meter
PAD = 20.0
DYN_COLORS = ("#7a3db8", "#d9822b", "#2a9d8f", "#8c564b", "#e377c2")


def _f(x: float) -> str:
    return f"{x:.2f}"


def render_svg(traces: list[Trace]) -> str:
    """Arena, statics (gray), virtuals (blue), obstacle tracks (dashed), robot paths (red)."""
    if not traces:
        raise ValueError("nothing to plot")
    meta = traces[0].meta
    W, H = float(meta["bounds"]["w"]), float(meta["bounds"]["h"])
    width, height = W * SCALE + 2 * PAD, H * SCALE + 2 * PAD

    def px(x: float) -> str:
        return _f(PAD + x * SCALE)

    def py(y: float) -> str:
        return _f(PAD + (H - y) * SCALE)

    def rect(cx, cy, hw, hh, cls, style):
        return (f'<rect class="{cls}" x="{px(cx - hw)}" y="{py(cy + hh)}" '
                f'width="{_f(2 * hw * SCALE)}" height="{_f(2 * hh * SCALE)}" {style}/>')

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
           f'viewBox="0 0 {_f(width)} {_f(height)}">',
           f'<rect class="arena" x="{px(0)}" y="{py(H)}" width="{_f(W * SCALE)}" '
           f'height="{_f(H * SCALE)}" fill="white" stroke="black" stroke-width="2"/>']
    for s in meta.get("statics", []):
        out.append(rect(s["cx"], s["cy"], s["hw"], s["hh"], "static", 'fill="gray"'))

    t_end = max(tr.records[-1].t for tr in traces)
    times = np.linspace(0.0, t_end, max(2, int(t_end / 0.5) + 1))
    for i, d in enumerate(meta.get("dynamics", [])):
        o = DynamicObstacle(Disc(Point2(d["x"], d["y"]), d["radius"]),
                            Pose2D(d["x"], d["y"], d["theta"]), ObstacleMotion(d["v"], d["omega"]))
        pts = obstacle_positions(o, times)
        color = DYN_COLORS[i % len(DYN_COLORS)]
        out.append(f'<polyline class="dynamic-track" fill="none" stroke="{color}" '
                   f'stroke-dasharray="6,4" points="'
                   + " ".join(f"{px(x)},{py(y)}" for x, y in pts) + '"/>')
        out.append(f'<circle class="dynamic" cx="{px(d["x"])}" cy="{py(d["y"])}" '
                   f'r="{_f(d["radius"] * SCALE)}" fill="none" stroke="{color}"/>')
        out.append(f'<text x="{px(d["x"])}" y="{py(d["y"] + d["radius"] + 0.1)}" font-size="12" '
                   f'text-anchor="middle">D{i + 1}</text>')

    for tr in traces:
        for v in tr.virtuals():
            out.append(rect(v.center.x, v.center.y, v.half_width, v.half_height, "virtual",
                            'fill="blue" fill-opacity="0.25" stroke="blue"'))
    for tr in traces:
        out.append('<polyline class="robot-path" fill="none" stroke="red" stroke-width="2" points="'
                   + " ".join(f"{px(r.x)},{py(r.y)}" for r in tr.records) + '"/>')
        if tr.outcome == "Crashed":
            last = tr.records[-1]
            out.append(f'<circle class="crash" cx="{px(last.x)}" cy="{py(last.y)}" r="8" '
                       'fill="none" stroke="black" stroke-width="2"/>')

    robot = meta["robot"]
    s, g = robot["start"], robot["goal"]
    out.append(f'<circle class="start" cx="{px(s["x"])}" cy="{py(s["y"])}" '
               f'r="{_f(robot["radius"] * SCALE)}" fill="green"/>')
    out.append(f'<circle class="goal" cx="{px(g["x"])}" cy="{py(g["y"])}" r="6" '
               'fill="none" stroke="green" stroke-width="3"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
