import numpy as np
import pytest
import scipy.signal
from hypothesis import given, settings
from hypothesis import strategies as st

from barrier_mppi.barrier import BarrierParams, dbas_trajectory, fused_barrier_batch
from barrier_mppi.controller import (Controller, ControllerConfig, Variant, control_step,
                                     quadratic_cost, running_cost, sg_smooth,
                                     softmin_weights, trajectory_cost, weighted_update,
                                     wrap_angle)
from barrier_mppi.dynamics import AckermannModel, QuadrotorModel, rollout
from barrier_mppi.errors import ConfigError, DegenerateBatchError
from barrier_mppi.reference import ReferencePath
from barrier_mppi.sampling import SamplingParams, sample_batch
from barrier_mppi.world import Obstacle, World, vehicle_shape

CAR = AckermannModel()
QUAD = QuadrotorModel()


def car_config(variant="dbas-log", **kw):
    kw.setdefault("sampling", SamplingParams(sigma_u=(0.075, 2.0)))
    return ControllerConfig(variant=variant, **kw)


class TestWrapAngle:
    def test_small_angles_unchanged(self):
        assert wrap_angle(0.3) == pytest.approx(0.3)
        assert wrap_angle(-0.3) == pytest.approx(-0.3)

    def test_wraps_across_pi(self):
        # theta = pi - 0.1 vs reference -pi + 0.1 differ by 0.2, not 2pi - 0.2
        d = (np.pi - 0.1) - (-np.pi + 0.1)
        assert wrap_angle(d) == pytest.approx(-0.2)
        assert abs(wrap_angle(d)) == pytest.approx(0.2)

    def test_half_open_interval(self):
        assert wrap_angle(np.pi) == pytest.approx(np.pi)
        assert wrap_angle(-np.pi) == pytest.approx(np.pi)

    @given(d=st.floats(-50, 50))
    @settings(max_examples=200)
    def test_range_and_equivalence(self, d):
        w = wrap_angle(d)
        assert -np.pi < w <= np.pi + 1e-12
        assert np.cos(w) == pytest.approx(np.cos(d), abs=1e-9)
        assert np.sin(w) == pytest.approx(np.sin(d), abs=1e-9)


class TestRunningCost:
    def test_zero_at_reference(self):
        s = np.array([1.0, 2.0, 0.5, 3.0])
        assert running_cost(s, s, np.ones(4)) == 0.0

    def test_identity_unit_offset(self):
        s = np.array([1.0, 0.0, 0.0, 0.0])
        assert running_cost(s, np.zeros(4), np.ones(4)) == pytest.approx(1.0)

    def test_angle_wrap_in_cost(self):
        s = np.array([0.0, 0.0, np.pi - 0.1, 0.0])
        ref = np.array([0.0, 0.0, -np.pi + 0.1, 0.0])
        assert running_cost(s, ref, np.ones(4)) == pytest.approx(0.04)


class TestSoftminWeights:
    def test_probability_vector(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            w = softmin_weights(rng.uniform(0, 100, 256), 1.0)
            assert (w >= 0).all()
            assert abs(w.sum() - 1.0) < 1e-12

    def test_uniform_for_equal_costs(self):
        w = softmin_weights(np.full(10, 3.25), 0.7)
        np.testing.assert_allclose(w, 0.1, rtol=1e-15)

    def test_argmin_limit(self):
        rng = np.random.default_rng(1)
        costs = rng.uniform(1, 10, 64)
        w = softmin_weights(costs, 1e-8)
        expected = np.zeros(64)
        expected[costs.argmin()] = 1.0
        np.testing.assert_array_equal(w, expected)

    def test_shift_invariance_close(self):
        rng = np.random.default_rng(2)
        costs = rng.uniform(0, 50, 128)
        a = softmin_weights(costs, 0.8)
        b = softmin_weights(costs + 17.3, 0.8)
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_shift_invariance_bit_exact_on_exact_sums(self):
        # dyadic costs plus a power-of-two shift add exactly, so the
        # rho-subtraction cancels bit for bit
        rng = np.random.default_rng(3)
        costs = rng.integers(0, 2 ** 27, 64).astype(float) * 2.0 ** -20
        a = softmin_weights(costs, 1.0)
        b = softmin_weights(costs + 128.0, 1.0)
        np.testing.assert_array_equal(a, b)

    def test_lambda_scaling_equivalence(self):
        rng = np.random.default_rng(4)
        costs = rng.uniform(0, 20, 64)
        a = softmin_weights(costs, 0.5)
        b = softmin_weights(costs * 7.0, 0.5 * 7.0)
        np.testing.assert_allclose(a, b, rtol=1e-9)

    def test_non_finite_raises(self):
        with pytest.raises(DegenerateBatchError):
            softmin_weights(np.array([1.0, np.nan]), 1.0)
        with pytest.raises(DegenerateBatchError):
            softmin_weights(np.array([1.0, np.inf]), 1.0)


class TestWeightedUpdate:
    def test_equal_costs_give_mean_perturbation(self):
        rng = np.random.default_rng(5)
        nominal = rng.normal(size=(6, 2))
        deltas = rng.normal(size=(32, 6, 2))
        out = weighted_update(nominal, deltas, np.full(32, 2.0), 1.0)
        np.testing.assert_allclose(out, nominal + deltas.mean(axis=0), rtol=1e-12)

    def test_argmin_selection_at_tiny_lambda(self):
        rng = np.random.default_rng(6)
        nominal = np.zeros((4, 2))
        deltas = rng.normal(size=(16, 4, 2))
        costs = rng.uniform(1, 5, 16)
        out = weighted_update(nominal, deltas, costs, 1e-8)
        np.testing.assert_array_equal(out, deltas[costs.argmin()])


class TestSgSmooth:
    def test_constant_unchanged(self):
        seq = np.full((20, 2), 1.7)
        np.testing.assert_allclose(sg_smooth(seq, 9, 3), seq, atol=1e-12)

    def test_polynomial_exact(self):
        t = np.arange(20.0)
        seq = np.stack([0.3 * t ** 3 - t + 2, t ** 2 * 0.1], axis=1)
        np.testing.assert_allclose(sg_smooth(seq, 9, 3), seq, atol=1e-9)

    def test_matches_scipy(self):
        rng = np.random.default_rng(7)
        seq = rng.normal(size=(20, 2))
        ours = sg_smooth(seq, 9, 3)
        ref = scipy.signal.savgol_filter(seq, 9, 3, axis=0, mode="interp")
        np.testing.assert_allclose(ours, ref, atol=1e-12)

    def test_short_sequence_identity(self):
        seq = np.random.default_rng(8).normal(size=(5, 2))
        np.testing.assert_array_equal(sg_smooth(seq, 9, 3), seq)

    def test_white_noise_variance_reduction(self):
        rng = np.random.default_rng(9)
        wins = 0
        for _ in range(100):
            seq = rng.normal(size=(100, 1))
            out = sg_smooth(seq, 9, 3)
            wins += out.var() < seq.var()
        assert wins == 100


def _modular_costs(x0, nominal, deltas, ref_states, config, model, shape, world,
                   exploration_rate):
    """Independent cost pipeline from the public module operations."""
    perturbed = model.clamp(nominal + deltas)
    states = rollout(x0, perturbed, model)
    if config.uses_barrier:
        fused = fused_barrier_batch(states, shape, world, config.barrier)
        fused_ref = fused_barrier_batch(ref_states, shape, world, config.barrier)
        w = dbas_trajectory(fused, fused_ref, config.barrier)
    else:
        w = None
    return trajectory_cost(states, w, perturbed, nominal, ref_states, config, model,
                           shape, world, exploration_rate)


class TestKernelAgainstModularPipeline:
    @pytest.mark.parametrize("variant", ["vanilla", "log", "dbas-log"])
    @pytest.mark.parametrize("model_kind", ["vehicle", "quadrotor"])
    def test_cost_components_match(self, variant, model_kind):
        from barrier_mppi.controller import _kernel_costs

        rng = np.random.default_rng(10)
        model = CAR if model_kind == "vehicle" else QUAD
        shape = model.default_shape()
        world = World((Obstacle(center=(6.0, 0.5), radius=1.2),
                       Obstacle(center=(12.0, -1.0), radius=2.0)))
        cfg = ControllerConfig(variant=variant,
                               sampling=SamplingParams(sigma_u=(0.075, 2.0)))
        n = model.state_dim
        x0 = np.zeros(n)
        x0[3] = 3.0
        nominal = rng.normal(size=(cfg.horizon, 2)) * 0.2
        deltas = rng.normal(size=(64, cfg.horizon, 2))
        ref_states = np.zeros((cfg.horizon + 1, n))
        ref_states[:, 0] = np.linspace(0, 4, cfg.horizon + 1)
        ref_states[:, 3] = 3.0 if n == 4 else 0.0
        se = 1.3
        fused_ref = (fused_barrier_batch(ref_states, shape, world, cfg.barrier)
                     if cfg.uses_barrier else np.zeros(cfg.horizon + 1))
        fast, collided = _kernel_costs(x0, nominal, deltas, ref_states, fused_ref,
                                       cfg.resolved_q_weights(model), cfg, model,
                                       shape, world, se)
        slow = _modular_costs(x0, nominal, deltas, ref_states, cfg, model, shape, world, se)
        np.testing.assert_allclose(fast.state_cost, slow.state_cost, rtol=1e-9, atol=1e-9)
        np.testing.assert_allclose(fast.control_cost, slow.control_cost, rtol=1e-9, atol=1e-9)
        np.testing.assert_allclose(fast.barrier_cost, slow.barrier_cost, rtol=1e-9, atol=1e-9)
        np.testing.assert_allclose(fast.terminal_cost, slow.terminal_cost, rtol=1e-9, atol=1e-9)
        np.testing.assert_allclose(fast.total, slow.total, rtol=1e-9, atol=1e-9)

    def test_breakdown_total_is_sum_of_parts(self):
        rng = np.random.default_rng(11)
        cfg = car_config("dbas-log")
        world = World((Obstacle(center=(5.0, 0.0), radius=1.0),))
        shape = CAR.default_shape()
        x0 = np.array([0.0, -4.0, 0.0, 2.0])
        deltas = rng.normal(size=(16, cfg.horizon, 2))
        ref = np.zeros((cfg.horizon + 1, 4))
        bd = _modular_costs(x0, np.zeros((cfg.horizon, 2)), deltas, ref, cfg, CAR,
                            shape, world, 1.0)
        total = bd.state_cost + bd.control_cost + bd.barrier_cost + bd.terminal_cost
        np.testing.assert_allclose(bd.total, total, rtol=1e-9)


class TestTrajectoryCost:
    def test_zero_nominal_kills_control_term(self):
        rng = np.random.default_rng(12)
        cfg = car_config("log")
        states = np.zeros((cfg.horizon + 1, 4))
        v = rng.normal(size=(cfg.horizon, 2))
        bd = trajectory_cost(states, None, v, np.zeros((cfg.horizon, 2)),
                             np.zeros((cfg.horizon + 1, 4)), cfg, CAR, world=World())
        assert bd.control_cost == 0.0

    def test_perfect_tracking_leaves_control_only(self):
        cfg = car_config("log")
        ref = np.zeros((cfg.horizon + 1, 4))
        ref[:, 0] = np.arange(cfg.horizon + 1) * 0.1
        ref[:, 3] = 5.0
        nominal = np.full((cfg.horizon, 2), 0.05)
        bd = trajectory_cost(ref.copy(), None, nominal.copy(), nominal, ref, cfg, CAR,
                             world=World())
        assert bd.state_cost == 0.0
        assert bd.terminal_cost == 0.0
        assert bd.barrier_cost == 0.0
        assert bd.total == bd.control_cost != 0.0

    def test_grazing_vs_distant_risk_ordering(self):
        """Two mirrored trajectories with identical tracking and control
        costs: only the barrier variant separates the one grazing an
        obstacle from the one far away; the impulse baseline ties them."""
        horizon = 20
        world = World((Obstacle(center=(5.0, 2.0), radius=1.0),))
        shape = vehicle_shape(0.5, 0.5)  # small body so grazing stays collision-free
        t = np.linspace(0, 10, horizon + 1)
        bump = 0.6 * np.exp(-0.5 * (t - 5.0) ** 2)
        near = np.zeros((horizon + 1, 4))
        near[:, 0] = t
        near[:, 1] = bump
        far = near.copy()
        far[:, 1] = -bump
        ref = np.zeros((horizon + 1, 4))
        ref[:, 0] = t
        v = np.zeros((horizon, 2))
        nominal = np.zeros((horizon, 2))

        from barrier_mppi.world import min_constraint_batch
        assert (min_constraint_batch(near, shape, world) > 0).all()

        dbas = ControllerConfig(variant="dbas-log", horizon=horizon,
                                sampling=SamplingParams(sigma_u=(0.075, 2.0)))
        fused_near = fused_barrier_batch(near, shape, world, dbas.barrier)
        fused_far = fused_barrier_batch(far, shape, world, dbas.barrier)
        fused_ref = fused_barrier_batch(ref, shape, world, dbas.barrier)
        w_near = dbas_trajectory(fused_near, fused_ref, dbas.barrier)
        w_far = dbas_trajectory(fused_far, fused_ref, dbas.barrier)
        bd_near = trajectory_cost(near, w_near, v, nominal, ref, dbas, CAR, shape, world)
        bd_far = trajectory_cost(far, w_far, v, nominal, ref, dbas, CAR, shape, world)
        assert bd_near.state_cost == bd_far.state_cost
        assert bd_near.terminal_cost == bd_far.terminal_cost
        assert bd_near.total > bd_far.total

        vanilla = ControllerConfig(variant="vanilla", horizon=horizon,
                                   sampling=SamplingParams(sigma_u=(0.075, 2.0)))
        bd_near_v = trajectory_cost(near, None, v, nominal, ref, vanilla, CAR, shape, world)
        bd_far_v = trajectory_cost(far, None, v, nominal, ref, vanilla, CAR, shape, world)
        assert bd_near_v.total == bd_far_v.total


def _free_space_setup(model, variant="dbas-log", horizon=20):
    cfg = ControllerConfig(variant=variant, horizon=horizon,
                           sampling=SamplingParams(
                               sigma_u=(0.075, 2.0) if model is CAR else (0.4, 0.12)))
    x0 = np.zeros(model.state_dim)
    ref = np.zeros((horizon + 1, model.state_dim))
    return cfg, x0, ref


class TestControlStep:
    def test_zero_reference_keeps_control_small(self):
        cfg, x0, ref = _free_space_setup(CAR, "log")
        res = control_step(x0, np.zeros((cfg.horizon, 2)), ref, cfg, CAR,
                           CAR.default_shape(), World(), seed=42)
        sigma = np.sqrt(cfg.sampling.sigma_u * np.exp(2 * 0.7 ** 2))
        floor = 3.0 * sigma / np.sqrt(cfg.num_samples)
        assert (np.abs(res.applied) < 5 * floor).all()

    def test_determinism(self):
        cfg, x0, ref = _free_space_setup(CAR)
        world = World((Obstacle(center=(3.0, 0.5), radius=1.0),))
        a = control_step(x0, np.zeros((cfg.horizon, 2)), ref, cfg, CAR,
                         CAR.default_shape(), world, seed=7)
        b = control_step(x0, np.zeros((cfg.horizon, 2)), ref, cfg, CAR,
                         CAR.default_shape(), world, seed=7)
        np.testing.assert_array_equal(a.applied, b.applied)
        np.testing.assert_array_equal(a.shifted, b.shifted)
        assert a.diagnostics.next_exploration_rate == b.diagnostics.next_exploration_rate

    def test_receding_horizon_shift(self):
        cfg, x0, ref = _free_space_setup(CAR, "log")
        res = control_step(x0, np.zeros((cfg.horizon, 2)), ref, cfg, CAR,
                           CAR.default_shape(), World(), seed=3)
        np.testing.assert_array_equal(res.shifted[:-1], res.diagnostics.optimized[1:])
        np.testing.assert_array_equal(res.shifted[-1], np.zeros(2))

    def test_applied_respects_limits(self):
        cfg, x0, ref = _free_space_setup(CAR, "vanilla")
        big = SamplingParams(sigma_u=(25.0, 25.0), mode="gaussian")
        cfg = ControllerConfig(variant="vanilla", sampling=big)
        for seed in range(5):
            res = control_step(x0, np.zeros((cfg.horizon, 2)), ref, cfg, CAR,
                               CAR.default_shape(), World(), seed=seed)
            assert (np.abs(res.applied) <= CAR.control_limits + 1e-12).all()

    def test_obstacle_ahead_raises_exploration(self):
        cfg, x0, ref = _free_space_setup(CAR)
        x0[3] = 5.0
        ref[:, 0] = np.linspace(0, 2, cfg.horizon + 1)
        world = World((Obstacle(center=(3.5, 0.0), radius=1.5),))
        res = control_step(x0, np.zeros((cfg.horizon, 2)), ref, cfg, CAR,
                           CAR.default_shape(), world, seed=5)
        mu = cfg.sampling.mu_coarseness
        assert res.diagnostics.next_exploration_rate > mu
        free = control_step(np.zeros(4), np.zeros((cfg.horizon, 2)),
                            np.zeros((cfg.horizon + 1, 4)), cfg, CAR,
                            CAR.default_shape(), World(), seed=5)
        assert free.diagnostics.next_exploration_rate == pytest.approx(mu, rel=1e-6)

    def test_ess_diagnostic_range(self):
        cfg, x0, ref = _free_space_setup(CAR, "log")
        res = control_step(x0, np.zeros((cfg.horizon, 2)), ref, cfg, CAR,
                           CAR.default_shape(), World(), seed=11)
        assert 1.0 <= res.diagnostics.ess <= cfg.num_samples


class TestControllerClass:
    def test_warm_start_carries_over(self):
        cfg, x0, ref = _free_space_setup(CAR, "log")
        ctrl = Controller(cfg, CAR)
        u1, d1 = ctrl.step(x0, ref, seed=1)
        np.testing.assert_array_equal(ctrl.nominal[:-1], d1.optimized[1:])
        u2, _ = ctrl.step(x0, ref, seed=2)
        assert not np.array_equal(u1, u2)

    def test_initial_exploration_rate(self):
        cfg, _, _ = _free_space_setup(CAR, "dbas-log")
        assert Controller(cfg, CAR).exploration_rate == cfg.sampling.mu_coarseness
        cfg_log, _, _ = _free_space_setup(CAR, "log")
        assert Controller(cfg_log, CAR).exploration_rate == 1.0

    def test_tracking_converges_with_more_samples(self):
        """Free-space station keeping tightens monotonically with the sample
        count (paired seeds): executed jitter tracks the estimator noise of
        the weighted average."""
        errors = []
        for m_samples in (16, 64, 256, 1024):
            cfg = ControllerConfig(variant="vanilla", num_samples=m_samples,
                                   sampling=SamplingParams(sigma_u=(0.075, 2.0)))
            ctrl = Controller(cfg, CAR)
            x = np.zeros(4)
            refs = np.zeros((cfg.horizon + 1, 4))
            dists = []
            for k in range(200):
                u, _ = ctrl.step(x, refs, seed=1000 + k)
                x = CAR.step(x, u)
                dists.append(np.hypot(x[0], x[1]))
            errors.append(np.mean(dists))
        assert errors[0] > errors[1] > errors[2] > errors[3]


class TestConfigValidation:
    def test_bad_lambda(self):
        with pytest.raises(ConfigError):
            ControllerConfig(lambda_=0.0)

    def test_bad_sg(self):
        with pytest.raises(ConfigError):
            ControllerConfig(sg_window=8)
        with pytest.raises(ConfigError):
            ControllerConfig(sg_window=5, sg_order=5)

    def test_variant_parse(self):
        assert Variant.parse("dbas_log") == Variant.DBAS_LOG
        assert Variant.parse("LOG") == Variant.LOG
        with pytest.raises(ConfigError):
            Variant.parse("nope")

    def test_variant_fixes_sampling_mode(self):
        cfg = ControllerConfig(variant="vanilla",
                               sampling=SamplingParams(sigma_u=(1.0, 1.0), mode="nln"))
        assert cfg.sampling.mode == "gaussian"
