"""Obstacle worlds, robot shape points, and constraint evaluation.

Constraints are squared-distance margins h = |p - c|^2 - r^2 per
(shape point, obstacle) pair: positive outside, zero on the boundary,
negative inside.  The boundary h = 0 counts as safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# Stand-in for +inf when a world has no obstacles, kept finite so downstream
# arithmetic (exp weighting, comparisons) stays well defined.
NO_OBSTACLE_MARGIN = 1e30


@dataclass(frozen=True)
class Obstacle:
    """Circular obstacle: world-frame center (m) and radius (m)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.center.shape != (2,):
            raise ConfigError(f"obstacle center must be a 2-vector, got shape {self.center.shape}")
        if not self.radius > 0:
            raise ConfigError(f"obstacle radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class ShapeModel:
    """Body-frame sample points at which obstacle constraints are checked."""

    offsets: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "offsets", np.asarray(self.offsets, dtype=float))
        if self.offsets.ndim != 2 or self.offsets.shape[1] != 2 or self.offsets.shape[0] == 0:
            raise ConfigError("shape offsets must be a non-empty (P, 2) array")

    def __len__(self) -> int:
        return self.offsets.shape[0]


def quadrotor_shape(frame_length: float = 0.4) -> ShapeModel:
    """Seven collision points on a planar quadrotor frame.

    Five points at quarter intervals along the frame axis plus one at each
    propeller tip (no vertical offset, so the tips coincide with the ends).
    """
    half = frame_length / 2.0
    axis = [(-half, 0.0), (-half / 2.0, 0.0), (0.0, 0.0), (half / 2.0, 0.0), (half, 0.0)]
    props = [(-half, 0.0), (half, 0.0)]
    return ShapeModel(np.array(axis + props))


def vehicle_shape(length: float = 4.0, width: float = 3.0) -> ShapeModel:
    """Eight collision points on a rectangular vehicle body: corners plus
    edge midpoints, centered on the state position."""
    hl, hw = length / 2.0, width / 2.0
    pts = [
        (-hl, -hw), (-hl, hw), (hl, -hw), (hl, hw),   # corners
        (-hl, 0.0), (hl, 0.0), (0.0, -hw), (0.0, hw),  # edge midpoints
    ]
    return ShapeModel(np.array(pts))


@dataclass(frozen=True)
class World:
    """Obstacle list plus an optional axis-aligned bounding rectangle
    ((xmin, ymin), (xmax, ymax)) used for plotting extents only."""

    obstacles: tuple[Obstacle, ...] = ()
    bounds: tuple[tuple[float, float], tuple[float, float]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if self.bounds is not None:
            (x0, y0), (x1, y1) = self.bounds
            if not (x1 > x0 and y1 > y0):
                raise ConfigError("world bounds must have positive area")

    def centers(self) -> np.ndarray:
        if not self.obstacles:
            return np.zeros((0, 2))
        return np.array([o.center for o in self.obstacles])

    def radii(self) -> np.ndarray:
        return np.array([o.radius for o in self.obstacles])


def transform_shape_points(state: np.ndarray, shape: ShapeModel) -> np.ndarray:
    """Place body-frame shape points in the world frame.

    state[..., 0:2] is the planar position and state[..., 2] the rotation
    angle.  Accepts any leading batch shape; returns (..., P, 2).
    """
    state = np.asarray(state, dtype=float)
    c = np.cos(state[..., 2])
    s = np.sin(state[..., 2])
    ox = shape.offsets[:, 0]
    oy = shape.offsets[:, 1]
    px = state[..., 0, None] + c[..., None] * ox - s[..., None] * oy
    py = state[..., 1, None] + s[..., None] * ox + c[..., None] * oy
    return np.stack([px, py], axis=-1)


def constraint_value(point: np.ndarray, obstacle: Obstacle) -> float:
    """Squared-distance margin of one point to one obstacle."""
    d = np.asarray(point, dtype=float) - obstacle.center
    return float(d[0] * d[0] + d[1] * d[1] - obstacle.radius * obstacle.radius)


def constraint_pairs(states: np.ndarray, shape: ShapeModel, world: World) -> np.ndarray:
    """Margins for every (shape point, obstacle) pair: (..., P, J)."""
    pts = transform_shape_points(states, shape)
    centers = world.centers()
    radii = world.radii()
    dx = pts[..., 0, None] - centers[:, 0]
    dy = pts[..., 1, None] - centers[:, 1]
    return dx * dx + dy * dy - radii * radii


def min_constraint(state: np.ndarray, shape: ShapeModel, world: World) -> float:
    """Worst-case margin over all pairs; NO_OBSTACLE_MARGIN in free space."""
    if not world.obstacles:
        return NO_OBSTACLE_MARGIN
    return float(constraint_pairs(state, shape, world).min())


def min_constraint_batch(states: np.ndarray, shape: ShapeModel, world: World) -> np.ndarray:
    """min_constraint over a (..., n) state batch, returning (...)."""
    states = np.asarray(states, dtype=float)
    if not world.obstacles:
        return np.full(states.shape[:-1], NO_OBSTACLE_MARGIN)
    h = constraint_pairs(states, shape, world)
    return h.min(axis=(-2, -1))


def is_collision(state: np.ndarray, shape: ShapeModel, world: World) -> bool:
    """True iff any shape point lies strictly inside any obstacle."""
    return min_constraint(state, shape, world) < 0.0
