"""Fused rollout-and-cost kernels for the sampling loop.

These jitted loops reproduce, per sampled rollout, exactly what the modular
pipeline computes (dynamics rollout -> pair margins -> fused barrier ->
barrier-state recursion -> quadratic costs); the test suite checks the two
paths against each other.  Kept separate so the public modules stay plain
numpy.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_TWO_PI = 2.0 * np.pi
_FASTMATH = {"contract", "reassoc", "nsz"}


@njit(cache=True, inline="always")
def _wrap_angle(d):
    # fast path: already wrapped (identity of the fmod form on (-pi, pi])
    if -np.pi < d <= np.pi:
        return d
    return -((np.pi - d) % _TWO_PI - np.pi)


@njit(cache=True, inline="always", fastmath=_FASTMATH)
def _pair_scan(x, y, cs, sn, offs, centers, radii2, eps_h, need_sum):
    """Fused-barrier raw sum and minimum margin over all pairs at one pose.

    need_sum=False (impulse variants) skips the reciprocal accumulation and
    only tracks the minimum margin.
    """
    f = 0.0
    hmin = 1e30
    for p in range(offs.shape[0]):
        px = x + cs * offs[p, 0] - sn * offs[p, 1]
        py = y + sn * offs[p, 0] + cs * offs[p, 1]
        if need_sum:
            for j in range(centers.shape[0]):
                dx = px - centers[j, 0]
                dy = py - centers[j, 1]
                h = dx * dx + dy * dy - radii2[j]
                hmin = min(hmin, h)
                f += 1.0 / (h if h > eps_h else eps_h)
        else:
            for j in range(centers.shape[0]):
                dx = px - centers[j, 0]
                dy = py - centers[j, 1]
                h = dx * dx + dy * dy - radii2[j]
                hmin = min(hmin, h)
    return f, hmin


@njit(cache=True, inline="always")
def _saturate(f, hmin, eps_h, beta_max):
    if hmin <= eps_h or f > beta_max:
        return beta_max
    return f


@njit(cache=True, fastmath=_FASTMATH)
def vehicle_rollout_costs(x0, nominal, deltas, ref, fused_ref, q_w, term_w,
                          centers, radii2, offs, inv_cov_se, dt, wheelbase,
                          lim_steer, lim_accel, gamma_ctrl, gamma_dbas,
                          eps_h, beta_max, r_weight, use_barrier):
    """Per-rollout cost components for the Ackermann model.

    Returns (state_cost, control_cost, barrier_cost, terminal_cost,
    collided) arrays over the M rollouts.  barrier_cost is the weighted
    barrier-state sum when use_barrier, else zero.
    """
    num = deltas.shape[0]
    horizon = deltas.shape[1]
    state_cost = np.zeros(num)
    control_cost = np.zeros(num)
    barrier_total = np.zeros(num)
    terminal_cost = np.zeros(num)
    collided = np.zeros(num, dtype=np.bool_)
    for i in range(num):
        x = x0[0]
        y = x0[1]
        th = x0[2]
        vel = x0[3]
        cs = np.cos(th)
        sn = np.sin(th)
        f, hmin = _pair_scan(x, y, cs, sn, offs, centers, radii2, eps_h, use_barrier)
        coll = hmin < 0.0
        w = _saturate(f, hmin, eps_h, beta_max)
        wsum = w
        sc = 0.0
        cc = 0.0
        for k in range(horizon):
            dxr = x - ref[k, 0]
            dyr = y - ref[k, 1]
            dth = _wrap_angle(th - ref[k, 2])
            dv = vel - ref[k, 3]
            sc += q_w[0] * dxr * dxr + q_w[1] * dyr * dyr + q_w[2] * dth * dth + q_w[3] * dv * dv
            v0 = nominal[k, 0] + deltas[i, k, 0]
            v1 = nominal[k, 1] + deltas[i, k, 1]
            if v0 > lim_steer:
                v0 = lim_steer
            elif v0 < -lim_steer:
                v0 = -lim_steer
            if v1 > lim_accel:
                v1 = lim_accel
            elif v1 < -lim_accel:
                v1 = -lim_accel
            cc += nominal[k, 0] * inv_cov_se[0] * v0 + nominal[k, 1] * inv_cov_se[1] * v1
            x = x + vel * cs * dt
            y = y + vel * sn * dt
            th = th + vel * np.tan(v0) / wheelbase * dt
            vel = vel + v1 * dt
            cs = np.cos(th)
            sn = np.sin(th)
            f, hmin = _pair_scan(x, y, cs, sn, offs, centers, radii2, eps_h, use_barrier)
            if hmin < 0.0:
                coll = True
            if use_barrier:
                fsat = _saturate(f, hmin, eps_h, beta_max)
                if fsat >= beta_max:
                    w = beta_max
                else:
                    w = fsat - gamma_dbas * (fused_ref[k + 1] - w)
                    if w < 0.0:
                        w = 0.0
                    elif w > beta_max:
                        w = beta_max
                wsum += w
        dxr = x - ref[horizon, 0]
        dyr = y - ref[horizon, 1]
        dth = _wrap_angle(th - ref[horizon, 2])
        dv = vel - ref[horizon, 3]
        terminal_cost[i] = (term_w[0] * dxr * dxr + term_w[1] * dyr * dyr
                            + term_w[2] * dth * dth + term_w[3] * dv * dv)
        state_cost[i] = sc
        control_cost[i] = gamma_ctrl * cc
        collided[i] = coll
        if use_barrier:
            barrier_total[i] = r_weight * wsum
    return state_cost, control_cost, barrier_total, terminal_cost, collided


@njit(cache=True, fastmath=_FASTMATH)
def quadrotor_rollout_costs(x0, nominal, deltas, ref, fused_ref, q_w, term_w,
                            centers, radii2, offs, inv_cov_se, dt, gravity, mass,
                            lim_rate, lim_thrust, gamma_ctrl, gamma_dbas,
                            eps_h, beta_max, r_weight, use_barrier):
    """Per-rollout cost components for the planar quadrotor (x-z plane)."""
    num = deltas.shape[0]
    horizon = deltas.shape[1]
    state_cost = np.zeros(num)
    control_cost = np.zeros(num)
    barrier_total = np.zeros(num)
    terminal_cost = np.zeros(num)
    collided = np.zeros(num, dtype=np.bool_)
    for i in range(num):
        x = x0[0]
        z = x0[1]
        th = x0[2]
        vx = x0[3]
        vz = x0[4]
        cs = np.cos(th)
        sn = np.sin(th)
        f, hmin = _pair_scan(x, z, cs, sn, offs, centers, radii2, eps_h, use_barrier)
        coll = hmin < 0.0
        w = _saturate(f, hmin, eps_h, beta_max)
        wsum = w
        sc = 0.0
        cc = 0.0
        for k in range(horizon):
            dxr = x - ref[k, 0]
            dzr = z - ref[k, 1]
            dth = _wrap_angle(th - ref[k, 2])
            dvx = vx - ref[k, 3]
            dvz = vz - ref[k, 4]
            sc += (q_w[0] * dxr * dxr + q_w[1] * dzr * dzr + q_w[2] * dth * dth
                   + q_w[3] * dvx * dvx + q_w[4] * dvz * dvz)
            v0 = nominal[k, 0] + deltas[i, k, 0]
            v1 = nominal[k, 1] + deltas[i, k, 1]
            if v0 > lim_rate:
                v0 = lim_rate
            elif v0 < -lim_rate:
                v0 = -lim_rate
            if v1 > lim_thrust:
                v1 = lim_thrust
            elif v1 < -lim_thrust:
                v1 = -lim_thrust
            cc += nominal[k, 0] * inv_cov_se[0] * v0 + nominal[k, 1] * inv_cov_se[1] * v1
            accel = gravity + v1 / mass
            x = x + vx * dt
            z = z + vz * dt
            vx = vx - accel * sn * dt
            vz = vz + (accel * cs - gravity) * dt
            th = th + v0 * dt
            cs = np.cos(th)
            sn = np.sin(th)
            f, hmin = _pair_scan(x, z, cs, sn, offs, centers, radii2, eps_h, use_barrier)
            if hmin < 0.0:
                coll = True
            if use_barrier:
                fsat = _saturate(f, hmin, eps_h, beta_max)
                if fsat >= beta_max:
                    w = beta_max
                else:
                    w = fsat - gamma_dbas * (fused_ref[k + 1] - w)
                    if w < 0.0:
                        w = 0.0
                    elif w > beta_max:
                        w = beta_max
                wsum += w
        dxr = x - ref[horizon, 0]
        dzr = z - ref[horizon, 1]
        dth = _wrap_angle(th - ref[horizon, 2])
        dvx = vx - ref[horizon, 3]
        dvz = vz - ref[horizon, 4]
        terminal_cost[i] = (term_w[0] * dxr * dxr + term_w[1] * dzr * dzr
                            + term_w[2] * dth * dth + term_w[3] * dvx * dvx
                            + term_w[4] * dvz * dvz)
        state_cost[i] = sc
        control_cost[i] = gamma_ctrl * cc
        collided[i] = coll
        if use_barrier:
            barrier_total[i] = r_weight * wsum
    return state_cost, control_cost, barrier_total, terminal_cost, collided
