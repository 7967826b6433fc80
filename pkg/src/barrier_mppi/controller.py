"""Sampling-based MPC loop: rollout costing, exponential-weighted control
updates, Savitzky-Golay smoothing, and the receding-horizon step.

Three variants share the loop:

* ``vanilla``  - Gaussian perturbations, collision handled by an impulse
  penalty added once per colliding rollout.
* ``log``      - normal-log-normal perturbations, same impulse penalty.
* ``dbas-log`` - normal-log-normal perturbations, augmented with a barrier
  state whose running cost replaces the impulse penalty; the exploration
  rate adapts to the barrier cost of the current plan.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np
import scipy.signal

from . import _kernels
from .barrier import BarrierParams, fused_barrier_batch
from .dynamics import AckermannModel, Model, QuadrotorModel
from .errors import ConfigError, DegenerateBatchError
from .sampling import (PerturbationBatch, SamplingParams, _Workspace, adaptive_rate,
                       sample_batch)
from .world import ShapeModel, World

_TWO_PI = 2.0 * np.pi

DEFAULT_Q_WEIGHTS = {
    "quadrotor": (5.0, 5.0, 1.0, 0.5, 0.5),
    "vehicle": (5.0, 5.0, 1.0, 0.5),
}


class Variant(str, Enum):
    VANILLA = "vanilla"
    LOG = "log"
    DBAS_LOG = "dbas-log"

    @classmethod
    def parse(cls, name) -> "Variant":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {"vanilla": cls.VANILLA, "log": cls.LOG, "log-mppi": cls.LOG,
                   "dbas-log": cls.DBAS_LOG, "dbas-log-mppi": cls.DBAS_LOG}
        if key not in aliases:
            raise ConfigError(f"unknown controller variant {name!r}")
        return aliases[key]


@dataclass(frozen=True)
class ControllerConfig:
    """Loop settings shared by all variants.

    lambda_ is the softmin temperature of the weighted average; gamma_ctrl
    weighs the bilinear control cost u^T (S_e Sigma)^-1 v.  q_weights
    defaults to per-model tracking weights when left None.
    """

    variant: Variant = Variant.DBAS_LOG
    num_samples: int = 1024
    horizon: int = 20
    lambda_: float = 1.0
    gamma_ctrl: float = 2.0
    sg_window: int = 9
    sg_order: int = 3
    q_weights: tuple | None = None
    terminal_scale: float = 10.0
    collision_penalty: float = 1e5
    sampling: SamplingParams = field(default_factory=SamplingParams)
    barrier: BarrierParams = field(default_factory=BarrierParams)

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if self.num_samples < 1 or self.horizon < 1:
            raise ConfigError("num_samples and horizon must be >= 1")
        if not self.lambda_ > 0:
            raise ConfigError(f"lambda must be positive, got {self.lambda_}")
        if self.sg_window < 3 or self.sg_window % 2 == 0:
            raise ConfigError("sg_window must be an odd integer >= 3")
        if not 1 <= self.sg_order < self.sg_window:
            raise ConfigError("sg_order must satisfy 1 <= order < window")
        if self.q_weights is not None:
            object.__setattr__(self, "q_weights", tuple(float(v) for v in self.q_weights))
        mode = "gaussian" if self.variant == Variant.VANILLA else "nln"
        if self.sampling.mode != mode:
            object.__setattr__(self, "sampling", replace(self.sampling, mode=mode))

    @property
    def uses_barrier(self) -> bool:
        return self.variant == Variant.DBAS_LOG

    def resolved_q_weights(self, model: Model) -> np.ndarray:
        w = self.q_weights if self.q_weights is not None else DEFAULT_Q_WEIGHTS[model.kind]
        w = np.asarray(w, dtype=float)
        if w.shape != (model.state_dim,):
            raise ConfigError(f"q_weights must have {model.state_dim} entries for {model.kind}")
        return w


@dataclass(frozen=True)
class CostBreakdown:
    """Per-trajectory cost components; total is their exact sum.

    barrier_cost carries the safety term of whichever variant produced it:
    the weighted barrier-state sum for dbas-log, the collision impulse
    penalty for vanilla/log.
    """

    state_cost: np.ndarray
    control_cost: np.ndarray
    barrier_cost: np.ndarray
    terminal_cost: np.ndarray
    total: np.ndarray


def wrap_angle(d):
    """Wrap an angle difference to (-pi, pi]."""
    return -((np.pi - np.asarray(d, dtype=float)) % _TWO_PI - np.pi)


def quadratic_cost(states: np.ndarray, ref: np.ndarray, weights: np.ndarray,
                   angle_index: int = 2) -> np.ndarray:
    """Weighted squared tracking error with the angle channel wrapped."""
    diff = np.asarray(states, dtype=float) - ref
    diff[..., angle_index] = wrap_angle(diff[..., angle_index])
    return (weights * diff * diff).sum(axis=-1)


def running_cost(state: np.ndarray, reference_point: np.ndarray, weights) -> float:
    """Tracking cost of one state against one reference point."""
    return float(quadratic_cost(np.asarray(state, dtype=float),
                                np.asarray(reference_point, dtype=float),
                                np.asarray(weights, dtype=float)))


def trajectory_cost(states: np.ndarray, w_values: np.ndarray | None, perturbed: np.ndarray,
                    nominal: np.ndarray, ref_states: np.ndarray, config: ControllerConfig,
                    model: Model, shape: ShapeModel | None = None, world: World | None = None,
                    exploration_rate: float = 1.0) -> CostBreakdown:
    """Cost of explicit rollouts: states (..., N+1, n), perturbed controls
    (..., N, m) against the nominal plan (N, m).

    For the dbas-log variant w_values (..., N+1) supplies the barrier-state
    trace; vanilla/log instead need shape+world to detect colliding
    rollouts for the impulse penalty (an empty/absent world means none).
    """
    states = np.asarray(states, dtype=float)
    ref_states = np.asarray(ref_states, dtype=float)
    horizon = np.asarray(perturbed).shape[-2]
    q_w = config.resolved_q_weights(model)
    state_cost = quadratic_cost(states[..., :horizon, :], ref_states[:horizon], q_w).sum(axis=-1)
    terminal_cost = config.terminal_scale * quadratic_cost(
        states[..., horizon, :], ref_states[horizon], q_w)
    inv_cov = 1.0 / (exploration_rate * config.sampling.sigma_u)
    control_cost = config.gamma_ctrl * (nominal * inv_cov * perturbed).sum(axis=(-2, -1))
    if config.uses_barrier:
        if w_values is None:
            raise ConfigError("dbas-log trajectory cost needs barrier-state values")
        safety = config.barrier.r_weight * np.asarray(w_values, dtype=float).sum(axis=-1)
    else:
        if world is None or not world.obstacles:
            safety = np.zeros(states.shape[:-2])
        else:
            from .world import min_constraint_batch
            collided = (min_constraint_batch(states, shape, world) < 0.0).any(axis=-1)
            safety = config.collision_penalty * collided.astype(float)
    total = state_cost + control_cost + safety + terminal_cost
    return CostBreakdown(state_cost, control_cost, safety, terminal_cost, total)


def softmin_weights(costs: np.ndarray, lambda_: float) -> np.ndarray:
    """Normalized exponential weights exp(-(S - min S) / lambda).

    Subtracting the batch minimum pins the best weight at exactly 1, so the
    normalizer cannot underflow for finite costs; a non-finite batch raises
    DegenerateBatchError.
    """
    costs = np.asarray(costs, dtype=float)
    if not np.isfinite(costs).all():
        raise DegenerateBatchError("cost batch contains non-finite values")
    w = np.exp(-(costs - costs.min()) / lambda_)
    total = w.sum()
    if not total > 0.0:
        raise DegenerateBatchError("all rollout weights collapsed to zero")
    return w / total


def weighted_update(nominal: np.ndarray, batch, costs: np.ndarray,
                    lambda_: float) -> np.ndarray:
    """Shift the nominal plan by the weight-averaged perturbations."""
    deltas = batch.deltas if isinstance(batch, PerturbationBatch) else np.asarray(batch)
    w = softmin_weights(costs, lambda_)
    return np.asarray(nominal, dtype=float) + np.einsum("m,mkc->kc", w, deltas)


@lru_cache(maxsize=32)
def _sg_matrix(n_steps: int, window: int, order: int) -> np.ndarray:
    """Linear operator equal to Savitzky-Golay filtering of a length-n
    sequence, with edges handled by polynomial fits on the truncated window."""
    return scipy.signal.savgol_filter(np.eye(n_steps), window, order, axis=0, mode="interp")


def sg_smooth(sequence: np.ndarray, window: int, order: int) -> np.ndarray:
    """Savitzky-Golay smoothing per control channel.

    Sequences shorter than the window pass through unchanged.
    """
    seq = np.asarray(sequence, dtype=float)
    if seq.shape[0] < window:
        return seq.copy()
    return _sg_matrix(seq.shape[0], window, order) @ seq


@dataclass
class StepDiagnostics:
    exploration_rate: float
    next_exploration_rate: float
    min_cost: float
    mean_cost: float
    ess: float
    applied: np.ndarray
    optimized: np.ndarray
    collision_fraction: float
    plan_barrier_cost: float


@dataclass
class StepResult:
    applied: np.ndarray
    shifted: np.ndarray
    diagnostics: StepDiagnostics


def _kernel_costs(x0, nominal, deltas, ref_states, fused_ref, q_w, config: ControllerConfig,
                  model: Model, shape: ShapeModel, world: World, exploration_rate: float):
    """Dispatch the fused rollout/cost kernel for the model."""
    centers = world.centers()
    radii2 = world.radii() ** 2
    term_w = config.terminal_scale * q_w
    inv_cov = 1.0 / (exploration_rate * config.sampling.sigma_u)
    bp = config.barrier
    if isinstance(model, AckermannModel):
        parts = _kernels.vehicle_rollout_costs(
            x0, nominal, deltas, ref_states, fused_ref, q_w, term_w,
            centers, radii2, shape.offsets, inv_cov, model.dt, model.wheelbase,
            model.max_steer, model.max_accel, config.gamma_ctrl, bp.gamma,
            bp.eps_h, bp.beta_max, bp.r_weight, config.uses_barrier)
    elif isinstance(model, QuadrotorModel):
        parts = _kernels.quadrotor_rollout_costs(
            x0, nominal, deltas, ref_states, fused_ref, q_w, term_w,
            centers, radii2, shape.offsets, inv_cov, model.dt, model.gravity,
            model.mass, model.max_pitch_rate, model.max_thrust, config.gamma_ctrl,
            bp.gamma, bp.eps_h, bp.beta_max, bp.r_weight, config.uses_barrier)
    else:
        raise ConfigError(f"no rollout kernel for model {model!r}")
    state_c, ctrl_c, barrier_c, term_c, collided = parts
    if not config.uses_barrier:
        barrier_c = config.collision_penalty * collided.astype(float)
    total = state_c + ctrl_c + barrier_c + term_c
    return CostBreakdown(state_c, ctrl_c, barrier_c, term_c, total), collided


def control_step(x0: np.ndarray, nominal: np.ndarray, ref_states: np.ndarray,
                 config: ControllerConfig, model: Model, shape: ShapeModel, world: World,
                 seed: int, exploration_rate: float = 1.0,
                 fused_ref: np.ndarray | None = None,
                 workspace: _Workspace | None = None) -> StepResult:
    """One receding-horizon optimization step.

    Samples M perturbation sequences at the current exploration rate, rolls
    them out, softmin-averages them into an updated plan, smooths and clamps
    it, and returns the first control plus the left-shifted plan (last entry
    re-initialized to zero).  For dbas-log the barrier cost of the updated
    plan sets the exploration rate for the next call.
    """
    x0 = np.asarray(x0, dtype=float)
    nominal = np.asarray(nominal, dtype=float)
    ref_states = np.ascontiguousarray(ref_states, dtype=float)
    cfg = config
    q_w = cfg.resolved_q_weights(model)
    if fused_ref is None:
        # barrier recursion desired state: a safe equilibrium, whose fused
        # barrier is ~0; tying it to the tracked reference point breaks down
        # whenever the reference line passes through an obstacle
        fused_ref = np.zeros(cfg.horizon + 1)

    batch = sample_batch(cfg.sampling, cfg.num_samples, cfg.horizon, seed,
                         exploration_rate, workspace=workspace)
    breakdown, collided = _kernel_costs(x0, nominal, batch.deltas, ref_states, fused_ref,
                                        q_w, cfg, model, shape, world, exploration_rate)
    weights = softmin_weights(breakdown.total, cfg.lambda_)
    updated = nominal + np.einsum("m,mkc->kc", weights, batch.deltas)
    optimized = model.clamp(sg_smooth(updated, cfg.sg_window, cfg.sg_order))

    if cfg.uses_barrier:
        plan_parts, _ = _kernel_costs(x0, optimized, np.zeros((1,) + optimized.shape),
                                      ref_states, fused_ref, q_w, cfg, model, shape, world,
                                      exploration_rate)
        plan_cb = float(plan_parts.barrier_cost[0])
        next_rate = adaptive_rate(plan_cb, cfg.sampling.mu_coarseness)
    else:
        plan_cb = 0.0
        next_rate = 1.0

    shifted = np.vstack([optimized[1:], np.zeros((1, optimized.shape[1]))])
    diag = StepDiagnostics(
        exploration_rate=exploration_rate,
        next_exploration_rate=next_rate,
        min_cost=float(breakdown.total.min()),
        mean_cost=float(breakdown.total.mean()),
        ess=float(1.0 / (weights ** 2).sum()),
        applied=optimized[0].copy(),
        optimized=optimized,
        collision_fraction=float(collided.mean()),
        plan_barrier_cost=plan_cb,
    )
    return StepResult(optimized[0].copy(), shifted, diag)


class Controller:
    """Stateful receding-horizon wrapper around control_step.

    Owns the warm-started nominal plan and the exploration rate between
    steps; one instance drives one episode.
    """

    def __init__(self, config: ControllerConfig, model: Model,
                 shape: ShapeModel | None = None, world: World = World()):
        self.config = config
        self.model = model
        self.shape = shape if shape is not None else model.default_shape()
        self.world = world
        self._workspace = _Workspace()
        self.reset()

    def reset(self):
        self.nominal = np.zeros((self.config.horizon, self.model.control_dim))
        self.exploration_rate = (self.config.sampling.mu_coarseness
                                 if self.config.uses_barrier else 1.0)

    def step(self, x: np.ndarray, ref_states: np.ndarray, seed: int,
             fused_ref: np.ndarray | None = None):
        """Optimize from state x against the horizon's reference states and
        return (applied control, diagnostics)."""
        result = control_step(x, self.nominal, ref_states, self.config, self.model,
                              self.shape, self.world, seed, self.exploration_rate, fused_ref,
                              workspace=self._workspace)
        self.nominal = result.shifted
        self.exploration_rate = result.diagnostics.next_exploration_rate
        return result.applied, result.diagnostics
