"""Mission definitions, closed-loop episodes, and benchmark metrics.

An episode senses the exact state, runs one controller step, applies the
first control to the true dynamics, and repeats until the goal circle is
reached, a collision occurs, or the step budget runs out.  Success means
the goal was reached with zero collisions.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .controller import Controller, ControllerConfig
from .dynamics import Model, rollout as rollout_controls
from .errors import ConfigError
from .reference import ReferencePath
from .sampling import derive_seed
from .world import ShapeModel, World, is_collision, min_constraint_batch

WORKER_ENV_VAR = "BARRIER_MPPI_THREADS"

STATE_COLUMNS = {
    "quadrotor": ("x", "z", "theta", "vx", "vz"),
    "vehicle": ("x", "y", "theta", "v"),
}
CONTROL_COLUMNS = {
    "quadrotor": ("omega", "thrust"),
    "vehicle": ("steer", "accel"),
}


@dataclass(frozen=True)
class MissionSpec:
    """A benchmark scenario: model, world, start state, and reference."""

    name: str
    model: Model
    world: World
    shape: ShapeModel
    start: np.ndarray
    reference: ReferencePath
    v_set: float
    goal: np.ndarray
    goal_radius: float
    episode_horizon: int

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=float))
        if self.start.shape != (self.model.state_dim,):
            raise ConfigError(f"start state must have {self.model.state_dim} entries")
        if not self.v_set > 0:
            raise ConfigError("v_set must be positive")
        if self.episode_horizon < 1:
            raise ConfigError("episode horizon must be >= 1")
        if is_collision(self.start, self.shape, self.world):
            raise ConfigError("start state collides with an obstacle")

    @property
    def dt(self) -> float:
        return self.model.dt


def make_mission(name: str, model: Model, world: World, start, waypoints, v_set: float,
                 shape: ShapeModel | None = None, goal=None, goal_radius: float | None = None,
                 episode_horizon: int | None = None) -> MissionSpec:
    """Build a MissionSpec, filling derived defaults: the goal is the path
    end, the goal radius twice the robot's characteristic length, and the
    step budget three times the nominal traversal time."""
    if not v_set > 0:
        raise ConfigError("v_set must be positive")
    path = ReferencePath(waypoints)
    shape = shape if shape is not None else model.default_shape()
    if goal is None:
        goal = path.end
    if goal_radius is None:
        goal_radius = 2.0 * model.char_length
    if episode_horizon is None:
        episode_horizon = int(3 * np.ceil(path.total_length / v_set / model.dt))
    return MissionSpec(name, model, world, shape, start, path, v_set,
                       goal, goal_radius, episode_horizon)


@dataclass
class EpisodeResult:
    """One closed-loop run with its per-step log."""

    success: bool
    reason: str  # goal | collision | timeout
    steps: int
    tracking_error: float
    avg_speed: float
    seed: int
    states: np.ndarray          # (steps+1, n)
    controls: np.ndarray        # (steps, m)
    exploration: np.ndarray     # (steps,)
    min_cost: np.ndarray        # (steps,)
    collision: np.ndarray       # (steps+1,) bool
    sample_snapshot: np.ndarray | None = None


@dataclass
class MissionMetrics:
    """Per-controller aggregate over paired trials.

    Error and speed statistics cover successful trials only and are None
    when there were no successes.
    """

    trials: int
    successes: int
    success_rate: float
    error_mean: float | None
    error_std: float | None
    speed_mean: float | None
    speed_std: float | None
    per_trial: list = field(default_factory=list)


def tracking_error(states: np.ndarray, path: ReferencePath) -> float:
    """Mean distance of the executed states to the nearest point on the
    reference polyline."""
    states = np.asarray(states, dtype=float)
    if states.size == 0:
        raise ConfigError("tracking_error needs a non-empty trajectory")
    return float(path.distances(states[:, 0:2]).mean())


def _avg_speed(states: np.ndarray, dt: float) -> float:
    """Executed path length divided by elapsed time."""
    if states.shape[0] < 2:
        return 0.0
    d = np.diff(states[:, 0:2], axis=0)
    return float(np.hypot(d[:, 0], d[:, 1]).sum() / ((states.shape[0] - 1) * dt))


def run_episode(mission: MissionSpec, config: ControllerConfig, seed: int,
                sample_snapshot_step: int | None = None,
                snapshot_rollouts: int = 64) -> EpisodeResult:
    """Run one closed-loop episode.

    Per-step sampling streams derive from the episode seed and step index,
    so a repeated (mission, config, seed) run is bit-identical.  When
    sample_snapshot_step is set, the sampled rollout positions of that step
    are recorded for plotting.
    """
    model = mission.model
    ctrl = Controller(config, model, mission.shape, mission.world)
    horizon = config.horizon
    n_ref = mission.episode_horizon + horizon + 1
    ref_all = mission.reference.states_at(
        np.arange(n_ref) * mission.dt, mission.v_set, model.state_dim)

    x = mission.start.copy()
    states = [x.copy()]
    controls, rates, min_costs = [], [], []
    collisions = [is_collision(x, mission.shape, mission.world)]
    snapshot = None
    reason = "timeout"
    for k in range(mission.episode_horizon):
        refs = ref_all[k:k + horizon + 1]
        step_seed = derive_seed(seed, k)
        if sample_snapshot_step is not None and k == sample_snapshot_step:
            snapshot = _sample_positions(ctrl, x, step_seed, snapshot_rollouts)
        u, diag = ctrl.step(x, refs, step_seed)
        x = model.step(x, u)
        states.append(x.copy())
        controls.append(u)
        rates.append(diag.exploration_rate)
        min_costs.append(diag.min_cost)
        hit = is_collision(x, mission.shape, mission.world)
        collisions.append(hit)
        if hit:
            reason = "collision"
            break
        if np.hypot(x[0] - mission.goal[0], x[1] - mission.goal[1]) <= mission.goal_radius:
            reason = "goal"
            break

    states = np.array(states)
    return EpisodeResult(
        success=(reason == "goal"),
        reason=reason,
        steps=len(controls),
        tracking_error=tracking_error(states, mission.reference),
        avg_speed=_avg_speed(states, mission.dt),
        seed=seed,
        states=states,
        controls=np.array(controls).reshape(len(controls), model.control_dim),
        exploration=np.array(rates),
        min_cost=np.array(min_costs),
        collision=np.array(collisions, dtype=bool),
        sample_snapshot=snapshot,
    )


def _sample_positions(ctrl: Controller, x: np.ndarray, step_seed: int, count: int) -> np.ndarray:
    """Positions of the first `count` sampled rollouts at one step (slow
    modular path; plotting only)."""
    from .sampling import sample_batch

    cfg = ctrl.config
    batch = sample_batch(cfg.sampling, cfg.num_samples, cfg.horizon, step_seed,
                         ctrl.exploration_rate, rollouts=(0, min(count, cfg.num_samples)))
    traj = rollout_controls(x, ctrl.nominal + batch.deltas, ctrl.model)
    return traj[..., 0:2]


def _episode_job(args):
    mission, config, seed = args
    return run_episode(mission, config, seed)


def _aggregate(trials: int, results: list[EpisodeResult]) -> MissionMetrics:
    per_trial = [
        {"trial": i, "seed": r.seed, "success": bool(r.success), "reason": r.reason,
         "steps": int(r.steps), "tracking_error": float(r.tracking_error),
         "avg_speed": float(r.avg_speed)}
        for i, r in enumerate(results)
    ]
    ok = [r for r in results if r.success]
    if ok:
        errs = np.array([r.tracking_error for r in ok])
        spds = np.array([r.avg_speed for r in ok])
        stats = (float(errs.mean()), float(errs.std()), float(spds.mean()), float(spds.std()))
    else:
        stats = (None, None, None, None)
    return MissionMetrics(trials=trials, successes=len(ok),
                          success_rate=100.0 * len(ok) / trials,
                          error_mean=stats[0], error_std=stats[1],
                          speed_mean=stats[2], speed_std=stats[3],
                          per_trial=per_trial)


def resolve_workers(requested: int | None = None) -> int:
    """Worker process count capped by the BARRIER_MPPI_THREADS env var."""
    cap = os.environ.get(WORKER_ENV_VAR)
    workers = requested if requested is not None else (os.cpu_count() or 1)
    if cap is not None:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"{WORKER_ENV_VAR} must be an integer, got {cap!r}")
    return max(1, workers)


def run_mission(mission: MissionSpec, configs: dict[str, ControllerConfig], trials: int,
                base_seed: int, workers: int | None = None,
                episode_sink=None) -> dict[str, MissionMetrics]:
    """Run paired trials of each controller on a mission.

    Trial i uses seed base_seed + i for every controller, so all variants
    see identical sampling streams per trial.  Aggregation runs in a fixed
    (controller, trial) order regardless of worker scheduling; episode_sink
    (label, trial, EpisodeResult) is invoked in that same order.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    labels = list(configs)
    jobs = [(mission, configs[lab], base_seed + i) for lab in labels for i in range(trials)]
    n_workers = resolve_workers(workers)
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_episode_job, jobs, chunksize=1))
    else:
        results = [_episode_job(j) for j in jobs]
    metrics: dict[str, MissionMetrics] = {}
    for li, lab in enumerate(labels):
        runs = results[li * trials:(li + 1) * trials]
        if episode_sink is not None:
            for i, r in enumerate(runs):
                episode_sink(lab, i, r)
        metrics[lab] = _aggregate(trials, runs)
    return metrics


def episode_csv(result: EpisodeResult, model_kind: str, dt: float) -> str:
    """Render one episode log as CSV text.

    Row 0 holds the initial state with zero controls; row k >= 1 holds the
    state after applying control k-1 together with that step's diagnostics.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("step", "t") + STATE_COLUMNS[model_kind] + CONTROL_COLUMNS[model_kind]
                    + ("exploration_rate", "min_cost", "collision"))
    m = result.controls.shape[1] if result.controls.size else 2
    for k in range(result.states.shape[0]):
        if k == 0:
            u = np.zeros(m)
            rate = result.exploration[0] if result.exploration.size else 1.0
            mc = 0.0
        else:
            u = result.controls[k - 1]
            rate = result.exploration[k - 1]
            mc = result.min_cost[k - 1]
        row = ([k, f"{k * dt:.6g}"] + [f"{v:.10g}" for v in result.states[k]]
               + [f"{v:.10g}" for v in u] + [f"{rate:.10g}", f"{mc:.10g}",
                                             int(result.collision[k])])
        writer.writerow(row)
    return buf.getvalue()
