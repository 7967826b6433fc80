"""Discrete-time vehicle models behind a common stepping interface.

Both models are forward-Euler maps x_{k+1} = f(x_k, u_k) evaluated on the
previous state throughout (no substepping).  Step functions broadcast over
arbitrary leading batch shapes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import world as _world
from .errors import ConfigError


@dataclass(frozen=True)
class QuadrotorModel:
    """Planar quadrotor in the vertical x-z plane.

    State [x, z, theta, vx, vz]; control [pitch rate (rad/s), excess
    throttle (N)].  Throttle is thrust above hover, so zero control with
    level attitude is an equilibrium.
    """

    mass: float = 0.5
    frame_length: float = 0.4
    inertia: float = 0.005  # declared for completeness; pitch rate is commanded directly
    gravity: float = 9.81
    max_pitch_rate: float = 4.0
    max_thrust: float = 0.981
    dt: float = 0.02

    state_dim = 5
    control_dim = 2
    angle_index = 2
    kind = "quadrotor"

    def __post_init__(self):
        if self.mass <= 0 or self.frame_length <= 0 or self.dt <= 0:
            raise ConfigError("quadrotor mass, frame length, and dt must be positive")

    @property
    def control_limits(self) -> np.ndarray:
        return np.array([self.max_pitch_rate, self.max_thrust])

    @property
    def char_length(self) -> float:
        return self.frame_length

    def clamp(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.clip(u, -self.control_limits, self.control_limits)

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        dt = self.dt
        theta = x[..., 2]
        accel = self.gravity + u[..., 1] / self.mass  # (m g + u_t) / m
        out = np.empty(np.broadcast_shapes(x.shape, u.shape[:-1] + (5,)))
        out[..., 0] = x[..., 0] + x[..., 3] * dt
        out[..., 1] = x[..., 1] + x[..., 4] * dt
        out[..., 2] = theta + u[..., 0] * dt
        out[..., 3] = x[..., 3] - accel * np.sin(theta) * dt
        out[..., 4] = x[..., 4] + (accel * np.cos(theta) - self.gravity) * dt
        return out

    def speed(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.hypot(x[..., 3], x[..., 4])

    def default_shape(self) -> _world.ShapeModel:
        return _world.quadrotor_shape(self.frame_length)


@dataclass(frozen=True)
class AckermannModel:
    """Kinematic Ackermann-steered ground vehicle.

    State [x, y, theta, v]; control [steering angle (rad), acceleration
    (m/s^2)].
    """

    wheelbase: float = 3.0
    body_length: float = 4.0
    body_width: float = 3.0
    max_steer: float = 1.013
    max_accel: float = 2.0
    dt: float = 0.02

    state_dim = 4
    control_dim = 2
    angle_index = 2
    kind = "vehicle"

    def __post_init__(self):
        if self.wheelbase <= 0 or self.dt <= 0:
            raise ConfigError("vehicle wheelbase and dt must be positive")

    @property
    def control_limits(self) -> np.ndarray:
        return np.array([self.max_steer, self.max_accel])

    @property
    def char_length(self) -> float:
        return self.body_length

    def clamp(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.clip(u, -self.control_limits, self.control_limits)

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        dt = self.dt
        theta = x[..., 2]
        v = x[..., 3]
        out = np.empty(np.broadcast_shapes(x.shape, u.shape[:-1] + (4,)))
        out[..., 0] = x[..., 0] + v * np.cos(theta) * dt
        out[..., 1] = x[..., 1] + v * np.sin(theta) * dt
        out[..., 2] = theta + v * np.tan(u[..., 0]) / self.wheelbase * dt
        out[..., 3] = v + u[..., 1] * dt
        return out

    def speed(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.abs(x[..., 3])

    def default_shape(self) -> _world.ShapeModel:
        return _world.vehicle_shape(self.body_length, self.body_width)


Model = QuadrotorModel | AckermannModel


def make_model(kind: str, **overrides) -> Model:
    if kind == "quadrotor":
        return QuadrotorModel(**overrides)
    if kind == "vehicle":
        return AckermannModel(**overrides)
    raise ConfigError(f"unknown model kind {kind!r}")


def clamp_control(u: np.ndarray, model: Model) -> np.ndarray:
    """Saturate each control channel to the model's limits (idempotent)."""
    return model.clamp(u)


def rollout(x0: np.ndarray, controls: np.ndarray, model: Model) -> np.ndarray:
    """Integrate a control plan from x0: (..., N, m) -> (..., N+1, n).

    Controls are clamped before each step, so the trajectory respects input
    limits regardless of how the plan was produced.
    """
    x0 = np.asarray(x0, dtype=float)
    controls = np.asarray(controls, dtype=float)
    n = model.state_dim
    steps = controls.shape[-2]
    lead = np.broadcast_shapes(x0.shape[:-1], controls.shape[:-2])
    states = np.empty(lead + (steps + 1, n))
    states[..., 0, :] = x0
    clamped = model.clamp(controls)
    for k in range(steps):
        states[..., k + 1, :] = model.step(states[..., k, :], clamped[..., k, :])
    return states
