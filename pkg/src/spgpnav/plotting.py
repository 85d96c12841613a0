"""Self-contained SVG figures: trial trajectories and makespan against radius.

The markup is written by hand so the bytes depend only on the data; numbers are
printed with a fixed precision.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from spgpnav.metrics import TrajectoryLog
from spgpnav.scenarios import ScenarioConfig

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f")
WIDTH = 640
HEIGHT = 480
PAD = 48


def _f(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Frame:
    """Maps world coordinates into the drawing area, y pointing up."""

    def __init__(self, xmin, xmax, ymin, ymax, width=WIDTH, height=HEIGHT, pad=PAD,
                 equal=True):
        if xmax - xmin <= 0:
            xmin, xmax = xmin - 1.0, xmax + 1.0
        if ymax - ymin <= 0:
            ymin, ymax = ymin - 1.0, ymax + 1.0
        sx = (width - 2 * pad) / (xmax - xmin)
        sy = (height - 2 * pad) / (ymax - ymin)
        if equal:
            sx = sy = min(sx, sy)
        self.sx, self.sy = sx, sy
        # centre the used area
        self.ox = pad + ((width - 2 * pad) - sx * (xmax - xmin)) / 2 - sx * xmin
        self.oy = height - pad - ((height - 2 * pad) - sy * (ymax - ymin)) / 2 + sy * ymin

    def x(self, v):
        return self.ox + self.sx * v

    def y(self, v):
        return self.oy - self.sy * v

    def pt(self, p):
        return f"{_f(self.x(p[0]))},{_f(self.y(p[1]))}"


def _document(body: list[str], title: str) -> str:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _bounds(log: TrajectoryLog, config: ScenarioConfig):
    pts = [log.positions.reshape(-1, 2), log.original_goals.reshape(-1, 2)]
    for w in config.walls:
        pts.append(np.array([w.start, w.end]))
    for o in config.obstacles:
        pts.append(np.array([o.center]) + [[-o.radius, -o.radius], [o.radius, o.radius]])
    allp = np.vstack(pts)
    lo = allp.min(axis=0) - 0.3
    hi = allp.max(axis=0) + 0.3
    return lo[0], hi[0], lo[1], hi[1]


def trajectory_svg(log: TrajectoryLog, config: ScenarioConfig, title: str | None = None) -> str:
    """Walls, disks, per-agent paths, starts, goals and pseudo-goal markers."""
    if log.positions.shape[0] == 0:
        raise ValueError("log has no samples")
    fr = _Frame(*_bounds(log, config))
    body = ['<g id="obstacles" fill="#bbbbbb" stroke="#555555">']
    for k, w in enumerate(config.walls):
        body.append(
            f'<line class="wall" id="wall-{k}" x1="{_f(fr.x(w.start[0]))}" '
            f'y1="{_f(fr.y(w.start[1]))}" x2="{_f(fr.x(w.end[0]))}" y2="{_f(fr.y(w.end[1]))}" '
            f'stroke="#555555" stroke-width="{_f(2 * w.radius * fr.sx)}" stroke-linecap="round"/>')
    for k, o in enumerate(config.obstacles):
        body.append(f'<circle class="obstacle" id="obstacle-{k}" cx="{_f(fr.x(o.center[0]))}" '
                    f'cy="{_f(fr.y(o.center[1]))}" r="{_f(o.radius * fr.sx)}"/>')
    body.append("</g>")

    n = log.positions.shape[1]
    body.append('<g id="paths" fill="none" stroke-width="2">')
    for i in range(n):
        colour = PALETTE[i % len(PALETTE)]
        pts = " ".join(fr.pt(p) for p in log.positions[:, i, :])
        body.append(f'<polyline class="path" id="path-{log.ids[i]}" stroke="{colour}" '
                    f'points="{pts}"/>')
    body.append("</g>")

    body.append('<g id="markers">')
    radius_px = [a.safety_radius * fr.sx for a in sorted(config.agents, key=lambda a: a.id)]
    for i in range(n):
        colour = PALETTE[i % len(PALETTE)]
        s = log.positions[0, i]
        e = log.positions[-1, i]
        g = log.original_goals[i]
        body.append(f'<circle class="start" cx="{_f(fr.x(s[0]))}" cy="{_f(fr.y(s[1]))}" '
                    f'r="{_f(radius_px[i])}" fill="none" stroke="{colour}"/>')
        body.append(f'<circle class="end" cx="{_f(fr.x(e[0]))}" cy="{_f(fr.y(e[1]))}" '
                    f'r="{_f(radius_px[i])}" fill="{colour}" fill-opacity="0.35" '
                    f'stroke="{colour}"/>')
        gx, gy = fr.x(g[0]), fr.y(g[1])
        body.append(f'<path class="goal" d="M{_f(gx - 6)},{_f(gy - 6)}L{_f(gx + 6)},{_f(gy + 6)}'
                    f'M{_f(gx - 6)},{_f(gy + 6)}L{_f(gx + 6)},{_f(gy - 6)}" '
                    f'stroke="{colour}" stroke-width="2"/>')
    for step, kind, agent, payload in log.events:
        if kind != "perturb" or payload is None:
            continue
        colour = PALETTE[agent % len(PALETTE)]
        px, py = fr.x(payload[0]), fr.y(payload[1])
        body.append(f'<path class="pseudo-goal" d="M{_f(px)},{_f(py - 5)}L{_f(px + 5)},{_f(py)}'
                    f'L{_f(px)},{_f(py + 5)}L{_f(px - 5)},{_f(py)}Z" fill="{colour}" '
                    f'stroke="black" stroke-width="0.5"><title>agent {agent} step {step}</title>'
                    f'</path>')
    body.append("</g>")
    if title is None:
        title = f"{config.name}, {n} agents"
    body.append(f'<text x="{PAD}" y="{PAD // 2}" font-family="sans-serif" font-size="14">'
                f"{escape(title)}</text>")
    return _document(body, title)


def sweep_svg(curve, title: str = "makespan vs perturbation radius") -> str:
    """Line chart of ``(delta, mean makespan, std)`` triples with error bars."""
    curve = sorted((float(d), float(m), float(s)) for d, m, s in curve)
    if not curve:
        raise ValueError("sweep has no points")
    ds = [c[0] for c in curve]
    lo = min(m - s for _, m, s in curve)
    hi = max(m + s for _, m, s in curve)
    span = hi - lo if hi > lo else max(abs(hi), 1.0)
    lo, hi = lo - 0.1 * span, hi + 0.1 * span
    dspan = (max(ds) - min(ds)) or 1.0
    fr = _Frame(min(ds) - 0.1 * dspan, max(ds) + 0.1 * dspan, lo, hi, pad=64, equal=False)

    body = ['<g id="axes" stroke="black" font-family="sans-serif" font-size="12">']
    x0, x1 = 64, WIDTH - 64
    y0, y1 = HEIGHT - 64, 64
    body.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>')
    body.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>')
    for d in ds:
        body.append(f'<text x="{_f(fr.x(d))}" y="{y0 + 18}" text-anchor="middle" stroke="none">'
                    f"{_f(d)}</text>")
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        body.append(f'<text x="{x0 - 6}" y="{_f(fr.y(v) + 4)}" text-anchor="end" stroke="none">'
                    f"{_f(round(v, 1))}</text>")
    body.append(f'<text x="{WIDTH // 2}" y="{HEIGHT - 20}" text-anchor="middle" stroke="none">'
                "perturbation radius (m)</text>")
    body.append(f'<text x="18" y="{HEIGHT // 2}" text-anchor="middle" stroke="none" '
                f'transform="rotate(-90 18 {HEIGHT // 2})">mean makespan (steps)</text>')
    body.append("</g>")

    pts = " ".join(f"{_f(fr.x(d))},{_f(fr.y(m))}" for d, m, _ in curve)
    body.append(f'<polyline class="curve" fill="none" stroke="{PALETTE[0]}" stroke-width="2" '
                f'points="{pts}"/>')
    body.append('<g id="points">')
    for d, m, s in curve:
        x = fr.x(d)
        if s > 0 and math.isfinite(s):
            body.append(f'<line class="errorbar" x1="{_f(x)}" y1="{_f(fr.y(m - s))}" '
                        f'x2="{_f(x)}" y2="{_f(fr.y(m + s))}" stroke="{PALETTE[0]}"/>')
        body.append(f'<circle class="marker" cx="{_f(x)}" cy="{_f(fr.y(m))}" r="4" '
                    f'fill="{PALETTE[0]}"><title>delta {_f(d)}: {_f(m)} steps</title></circle>')
    body.append("</g>")
    body.append(f'<text x="64" y="32" font-family="sans-serif" font-size="14">'
                f"{escape(title)}</text>")
    return _document(body, title)


def write_svg(text: str, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
