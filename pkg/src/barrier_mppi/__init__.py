"""Sampling-based MPC with barrier-state safety augmentation.

Vanilla, log, and dbas-log MPPI controllers over planar quadrotor and
Ackermann vehicle models, plus the obstacle-avoidance mission benchmark.
"""

from .barrier import (AugmentedState, BarrierParams, augmented_step, barrier_cost,
                      barrier_fn, dbas_update, fused_barrier)
from .controller import (Controller, ControllerConfig, CostBreakdown, StepDiagnostics,
                         Variant, control_step, running_cost, sg_smooth, softmin_weights,
                         trajectory_cost, weighted_update, wrap_angle)
from .dynamics import AckermannModel, QuadrotorModel, clamp_control, make_model, rollout
from .errors import ConfigError, DegenerateBatchError
from .reference import ReferencePath, reference_point
from .sampling import (PerturbationBatch, SamplingParams, adaptive_rate, derive_seed,
                       nln_moments, sample_gaussian, sample_nln)
from .sim import (EpisodeResult, MissionMetrics, MissionSpec, make_mission, run_episode,
                  run_mission, tracking_error)
from .world import (NO_OBSTACLE_MARGIN, Obstacle, ShapeModel, World, constraint_value,
                    is_collision, min_constraint, quadrotor_shape, transform_shape_points,
                    vehicle_shape)

__version__ = "0.1.0"
