"""Deterministic, dependency-free SVG plots of episodes.

Hand-rolled SVG keeps regeneration byte-identical for identical inputs;
rendering-library output embeds unstable metadata.
"""

from __future__ import annotations

import numpy as np

from .fileio import atomic_write_text
from .sim import EpisodeResult, MissionSpec

_W, _H, _PAD = 860.0, 520.0, 40.0


def _fmt(v: float) -> str:
    return f"{v:.3f}"


class _Frame:
    """World-to-canvas transform with a flipped y axis and equal aspect."""

    def __init__(self, xs: np.ndarray, ys: np.ndarray):
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        spanx = max(x1 - x0, 1e-9)
        spany = max(y1 - y0, 1e-9)
        self.scale = min((_W - 2 * _PAD) / spanx, (_H - 2 * _PAD) / spany)
        self.x0 = x0 - (((_W - 2 * _PAD) / self.scale) - spanx) / 2.0
        self.y1 = y1 + (((_H - 2 * _PAD) / self.scale) - spany) / 2.0

    def x(self, v) -> float:
        return _PAD + (v - self.x0) * self.scale

    def y(self, v) -> float:
        return _PAD + (self.y1 - v) * self.scale

    def polyline(self, pts: np.ndarray, style: str) -> str:
        coords = " ".join(f"{_fmt(self.x(p[0]))},{_fmt(self.y(p[1]))}" for p in pts)
        return f'<polyline fill="none" {style} points="{coords}"/>'


def render_episode_svg(result: EpisodeResult, mission: MissionSpec,
                       max_samples: int = 64) -> str:
    """Obstacles (circles), reference (dotted), executed trajectory (solid),
    and an optional snapshot of sampled rollouts (grey)."""
    executed = result.states[:, 0:2]
    ref_pts = mission.reference.waypoints
    xs = [executed[:, 0], ref_pts[:, 0]]
    ys = [executed[:, 1], ref_pts[:, 1]]
    for ob in mission.world.obstacles:
        xs.append(np.array([ob.center[0] - ob.radius, ob.center[0] + ob.radius]))
        ys.append(np.array([ob.center[1] - ob.radius, ob.center[1] + ob.radius]))
    if mission.world.bounds is not None:
        (bx0, by0), (bx1, by1) = mission.world.bounds
        xs.append(np.array([bx0, bx1]))
        ys.append(np.array([by0, by1]))
    frame = _Frame(np.concatenate(xs), np.concatenate(ys))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W:.0f}" height="{_H:.0f}" '
        f'viewBox="0 0 {_W:.0f} {_H:.0f}">',
        f'<rect width="{_W:.0f}" height="{_H:.0f}" fill="white"/>',
        f'<text x="{_PAD:.0f}" y="24" font-family="monospace" font-size="14">'
        f'{mission.name}: executed trajectory</text>',
    ]
    if result.sample_snapshot is not None:
        for traj in result.sample_snapshot[:max_samples]:
            parts.append(frame.polyline(traj, 'stroke="#bbbbbb" stroke-width="0.6"'))
    for ob in mission.world.obstacles:
        parts.append(f'<circle cx="{_fmt(frame.x(ob.center[0]))}" '
                     f'cy="{_fmt(frame.y(ob.center[1]))}" '
                     f'r="{_fmt(ob.radius * frame.scale)}" '
                     'fill="#d0d0d0" stroke="black" stroke-width="1.2"/>')
    parts.append(frame.polyline(ref_pts, 'stroke="black" stroke-width="1" stroke-dasharray="6,5"'))
    parts.append(frame.polyline(executed, 'stroke="#cc2222" stroke-width="1.8"'))
    gx, gy = frame.x(mission.goal[0]), frame.y(mission.goal[1])
    parts.append(f'<circle cx="{_fmt(gx)}" cy="{_fmt(gy)}" r="4" fill="#cc2222"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_series_svg(values: np.ndarray, label: str, dt: float) -> str:
    """Simple step-vs-value curve (used for the exploration rate)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        values = np.zeros(1)
    ts = np.arange(values.size) * dt
    frame = _Frame(np.array([0.0, max(float(ts[-1]), 1e-9)]),
                   np.array([0.0, max(float(values.max()), 1e-9)]))
    pts = np.column_stack([ts, values])
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W:.0f}" height="{_H:.0f}" '
        f'viewBox="0 0 {_W:.0f} {_H:.0f}">',
        f'<rect width="{_W:.0f}" height="{_H:.0f}" fill="white"/>',
        f'<text x="{_PAD:.0f}" y="24" font-family="monospace" font-size="14">{label}</text>',
        frame.polyline(np.array([[0.0, 0.0], [ts[-1], 0.0]]),
                       'stroke="#888888" stroke-width="0.8"'),
        frame.polyline(pts, 'stroke="#2244cc" stroke-width="1.5"'),
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def emit_plot(result: EpisodeResult, mission: MissionSpec, path: str, max_samples: int = 64):
    """Write the episode trajectory plot; regeneration from the same log is
    byte-identical."""
    atomic_write_text(path, render_episode_svg(result, mission, max_samples))


def emit_series_plot(values: np.ndarray, label: str, dt: float, path: str):
    atomic_write_text(path, render_series_svg(values, label, dt))
