"""Inverse barrier function, barrier-state recursion, and barrier costs.

The barrier value of a margin h is 1/h, saturated to beta_max once h drops
to the floor eps_h.  beta_max stands in for infinity: any state at or past
the safe-set boundary pins its barrier state to exactly beta_max, so
saturation propagates through the recursion like an absorbing flag within
that step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .world import ShapeModel, World, constraint_pairs


@dataclass(frozen=True)
class BarrierParams:
    """gamma: recursion pole in (0,1); r_weight: cost weight on the barrier
    state; beta_max: saturation value; eps_h: margin floor for 1/h."""

    gamma: float = 0.9
    r_weight: float = 1.0
    beta_max: float = 1e6
    eps_h: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"barrier gamma must lie in (0, 1), got {self.gamma}")
        if self.r_weight < 0:
            raise ConfigError("barrier cost weight must be >= 0")
        if not (self.beta_max > 0 and np.isfinite(self.beta_max)):
            raise ConfigError("beta_max must be positive and finite")
        if self.eps_h <= 0:
            raise ConfigError("eps_h must be positive")


@dataclass
class AugmentedState:
    """Physical state plus the scalar barrier state riding along with it."""

    physical: np.ndarray
    w: float

    def __post_init__(self):
        self.physical = np.asarray(self.physical, dtype=float)


def barrier_fn(h: float | np.ndarray, params: BarrierParams = BarrierParams()) -> float | np.ndarray:
    """Inverse barrier 1/h, returning beta_max for h <= eps_h."""
    h = np.asarray(h, dtype=float)
    safe = h > params.eps_h
    out = np.where(safe, 1.0 / np.where(safe, h, 1.0), params.beta_max)
    return float(out) if out.ndim == 0 else out


def fused_barrier(state: np.ndarray, shape: ShapeModel, world: World,
                  params: BarrierParams = BarrierParams()) -> float:
    """Sum of barrier values over all (shape point, obstacle) pairs,
    saturated at beta_max.  Zero in an empty world."""
    return float(fused_barrier_batch(np.asarray(state, dtype=float), shape, world, params))


def fused_barrier_batch(states: np.ndarray, shape: ShapeModel, world: World,
                        params: BarrierParams = BarrierParams()) -> np.ndarray:
    """fused_barrier over a (..., n) state batch, returning (...)."""
    states = np.asarray(states, dtype=float)
    if not world.obstacles:
        return np.zeros(states.shape[:-1])
    h = constraint_pairs(states, shape, world)
    return fused_from_pairs(h, params)


def fused_from_pairs(h: np.ndarray, params: BarrierParams = BarrierParams()) -> np.ndarray:
    """Fused barrier from precomputed pair margins (..., P, J) -> (...)."""
    b = barrier_fn(h, params)
    total = np.minimum(np.asarray(b).sum(axis=(-2, -1)), params.beta_max)
    # once any pair is at the floor, the state counts as boundary-saturated
    saturated = (h <= params.eps_h).any(axis=(-2, -1))
    return np.where(saturated, params.beta_max, total)


def dbas_update(w_prev: float, next_state: np.ndarray, desired_state: np.ndarray,
                shape: ShapeModel, world: World, params: BarrierParams) -> float:
    """One step of the barrier-state recursion.

    w_next = B(next) - gamma * (B(desired) - w_prev), clamped to
    [0, beta_max].  A saturated next state (collision or boundary) forces
    w_next to exactly beta_max, since beta_max models infinity.  With no
    obstacles there is no constraint to encode and the result is 0.
    """
    if not world.obstacles:
        return 0.0
    b_next = fused_barrier(next_state, shape, world, params)
    b_des = fused_barrier(desired_state, shape, world, params)
    return dbas_recursion_step(np.asarray(w_prev, dtype=float), b_next, b_des, params).item()


def dbas_recursion_step(w_prev: np.ndarray, fused_next: np.ndarray, fused_desired: float,
                        params: BarrierParams) -> np.ndarray:
    """Vectorized recursion step on precomputed fused barrier values."""
    raw = fused_next - params.gamma * (fused_desired - w_prev)
    out = np.clip(raw, 0.0, params.beta_max)
    return np.where(fused_next >= params.beta_max, params.beta_max, out)


def dbas_trajectory(fused_states: np.ndarray, fused_desired: np.ndarray,
                    params: BarrierParams) -> np.ndarray:
    """Barrier-state sequence along rollouts.

    fused_states: (..., N+1) fused barrier of each rollout state;
    fused_desired: (N+1,) fused barrier of the desired states.  Returns
    (..., N+1) with w[0] = fused_states[..., 0].
    """
    fused_states = np.asarray(fused_states, dtype=float)
    w = np.empty_like(fused_states)
    w[..., 0] = fused_states[..., 0]
    for k in range(fused_states.shape[-1] - 1):
        w[..., k + 1] = dbas_recursion_step(
            w[..., k], fused_states[..., k + 1], float(fused_desired[k + 1]), params)
    return w


def augmented_step(aug: AugmentedState, u: np.ndarray, desired_state: np.ndarray,
                   model, shape: ShapeModel, world: World,
                   params: BarrierParams) -> AugmentedState:
    """Advance the physical state by the model step and the barrier state by
    the recursion evaluated at the new physical state."""
    nxt = model.step(aug.physical, model.clamp(u))
    w = dbas_update(aug.w, nxt, desired_state, shape, world, params)
    return AugmentedState(nxt, w)


def barrier_cost(traj_w: np.ndarray, r_weight: float) -> float | np.ndarray:
    """Weighted sum of barrier-state values along a trajectory: (..., N+1) -> (...)."""
    total = r_weight * np.asarray(traj_w, dtype=float).sum(axis=-1)
    return float(total) if np.ndim(total) == 0 else total
