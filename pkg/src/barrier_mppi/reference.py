"""Arc-length parameterized polyline references for tracking missions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class ReferencePath:
    """Piecewise-linear path with precomputed segment geometry."""

    waypoints: np.ndarray

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[1] != 2 or wp.shape[0] < 2:
            raise ConfigError("reference waypoints must be a (K>=2, 2) array")
        seg = np.diff(wp, axis=0)
        lengths = np.hypot(seg[:, 0], seg[:, 1])
        if (lengths <= 0).any():
            raise ConfigError("reference waypoints contain a zero-length segment")
        object.__setattr__(self, "waypoints", wp)
        object.__setattr__(self, "_seg", seg)
        object.__setattr__(self, "_lengths", lengths)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(lengths)]))
        object.__setattr__(self, "_tangents", seg / lengths[:, None])

    @property
    def total_length(self) -> float:
        return float(self._cum[-1])

    @property
    def end(self) -> np.ndarray:
        return self.waypoints[-1]

    def _segment_index(self, s: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._cum, s, side="right") - 1
        return np.clip(idx, 0, len(self._lengths) - 1)

    def point_at(self, s) -> np.ndarray:
        """Point at arc length s (clamped to the path), (..., 2)."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.total_length)
        idx = self._segment_index(s)
        frac = (s - self._cum[idx]) / self._lengths[idx]
        return self.waypoints[idx] + frac[..., None] * self._seg[idx]

    def tangent_at(self, s) -> np.ndarray:
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.total_length)
        return self._tangents[self._segment_index(s)]

    def states_at(self, times, v_set: float, state_dim: int) -> np.ndarray:
        """Reference states at the given times for a path traversed at v_set.

        The point advances by min(v_set * t, length); heading is the path
        tangent; the speed reference is v_set until the end is reached and
        zero afterwards.  Velocity components fill [vx, vz] for 5-state
        models and [v] for 4-state models.
        """
        times = np.atleast_1d(np.asarray(times, dtype=float))
        s = v_set * times
        pts = self.point_at(s)
        tan = self.tangent_at(s)
        speed = np.where(s < self.total_length, v_set, 0.0)
        out = np.zeros(times.shape + (state_dim,))
        out[..., 0:2] = pts
        out[..., 2] = np.arctan2(tan[..., 1], tan[..., 0])
        if state_dim == 5:
            out[..., 3] = speed * tan[..., 0]
            out[..., 4] = speed * tan[..., 1]
        else:
            out[..., 3] = speed
        return out

    def distances(self, points: np.ndarray) -> np.ndarray:
        """Euclidean distance of each point to the nearest point on the path."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = pts[:, None, :] - self.waypoints[None, :-1, :]
        t = (rel * self._seg[None]).sum(-1) / (self._lengths ** 2)[None]
        t = np.clip(t, 0.0, 1.0)
        nearest = self.waypoints[None, :-1, :] + t[..., None] * self._seg[None]
        d = np.hypot(pts[:, None, 0] - nearest[..., 0], pts[:, None, 1] - nearest[..., 1])
        return d.min(axis=1)


def reference_point(path: ReferencePath, v_set: float, t: float, state_dim: int = 4) -> np.ndarray:
    """Reference state at time t (see ReferencePath.states_at)."""
    return path.states_at(np.asarray([t]), v_set, state_dim)[0]
