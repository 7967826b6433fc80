"""Perturbation sampling with counter-based deterministic streams.

Every sampled value is a pure function of (seed, rollout index, timestep,
channel): a splitmix64 word stream indexed by those coordinates feeds a
Box-Muller transform.  Batches are therefore bit-identical no matter how
rollout generation is partitioned across workers, and regenerating with the
same seed reproduces the same batch.

Two samplers share the Gaussian component: the normal-log-normal (NLN)
sampler multiplies each Gaussian draw by an independent log-normal factor,
so the degenerate log-normal (sigma_ln = 0, mu_ln = 0) reduces bit-exactly
to the Gaussian sampler.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_U64_GOLDEN = np.uint64(_GOLDEN)
_TWO_NEG53 = 2.0 ** -53


def mix64(x: int) -> int:
    """splitmix64 finalizer on python ints (mod 2^64)."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base: int, index: int) -> int:
    """Independent child seed for a sub-stream (per step, per trial, ...)."""
    return mix64((base & _MASK64) + (((index + 1) * _GOLDEN) & _MASK64))


@njit(cache=True)
def _fill_words(out0, out1, key, lo, horizon, channels):  # pragma: no cover - jitted
    rows = out0.shape[0]
    for r in range(rows):
        i = np.uint64(lo + r)
        for k in range(horizon):
            for c in range(channels):
                slot = ((i * np.uint64(horizon) + np.uint64(k)) * np.uint64(channels)
                        + np.uint64(c)) * np.uint64(2)
                x = key + (slot + np.uint64(1)) * _U64_GOLDEN
                x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
                x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
                out0[r, k, c] = x ^ (x >> np.uint64(31))
                x = key + (slot + np.uint64(2)) * _U64_GOLDEN
                x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
                x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
                out1[r, k, c] = x ^ (x >> np.uint64(31))


class _Workspace:
    """Reusable per-controller sampling buffers.

    Avoids five large allocations per control step (page-fault churn and
    cache eviction dominate the step time otherwise).  Single-threaded use
    only; batches sampled through a workspace alias its arrays.
    """

    def __init__(self):
        self.shape = None

    def arrays(self, shape):
        if self.shape != shape:
            self.w0 = np.empty(shape, dtype=np.uint64)
            self.w1 = np.empty(shape, dtype=np.uint64)
            self.f0 = np.empty(shape)
            self.f1 = np.empty(shape)
            self.f2 = np.empty(shape)
            self.f3 = np.empty(shape)
            self.shape = shape
        return self.w0, self.w1, self.f0, self.f1, self.f2, self.f3


def _normal_pairs(seed: int, rows: int, lo: int, horizon: int, channels: int,
                  second: bool = True, workspace: _Workspace | None = None):
    """One or two independent standard-normal arrays of shape (rows, N, m).

    Box-Muller on the per-element word pair: the first normal (cosine leg)
    feeds Gaussian perturbations, the second (sine leg, derived from the
    same point on the unit circle) the log-normal factor, so both samplers
    consume identical word streams.
    """
    shape = (rows, horizon, channels)
    if workspace is None:
        workspace = _Workspace()
    w0, w1, r, ang, out, half = workspace.arrays(shape)
    _fill_words(w0, w1, np.uint64(mix64(seed)), lo, horizon, channels)
    np.right_shift(w0, np.uint64(11), out=w0)
    np.copyto(r, w0, casting="unsafe")
    r *= _TWO_NEG53          # u1 in [0, 1)
    np.negative(r, out=r)
    np.log1p(r, out=r)
    r *= -2.0
    np.sqrt(r, out=r)        # Box-Muller radius
    np.right_shift(w1, np.uint64(11), out=w1)
    np.copyto(ang, w1, casting="unsafe")
    ang *= _TWO_NEG53        # u2 in [0, 1)
    if second:
        np.copyto(half, ang)
    ang *= 2.0 * np.pi
    np.cos(ang, out=out)
    za = np.multiply(out, r, out=ang)   # reuse ang as za storage
    if not second:
        return za, None
    # sine leg from the same circle point: |sin| = sqrt(1 - cos^2), sign
    # from the angle's half-plane (u2 <= 0.5)
    np.multiply(out, out, out=out)
    np.subtract(1.0, out, out=out)
    np.sqrt(out, out=out)
    np.subtract(0.5, half, out=half)
    np.copysign(out, half, out=out)
    np.multiply(out, r, out=out)
    return za, out


@dataclass(frozen=True)
class SamplingParams:
    """Perturbation distribution settings.

    sigma_u holds the per-channel variances (the diagonal of the sampling
    covariance).  mu_ln/sigma_ln parameterize the log-normal factor of the
    NLN mixture; the defaults make its mean exactly 1 so the covariance
    stays the interpretable scale knob.  mu_coarseness is the free-space
    exploration-rate baseline.
    """

    sigma_u: np.ndarray = (0.075, 2.0)
    mu_ln: float = -0.245
    sigma_ln: float = 0.7
    mu_coarseness: float = 0.4
    mode: str = "nln"

    def __post_init__(self):
        object.__setattr__(self, "sigma_u", np.atleast_1d(np.asarray(self.sigma_u, dtype=float)))
        if self.sigma_u.ndim != 1 or not (self.sigma_u > 0).all():
            raise ConfigError("sigma_u must be a vector of positive per-channel variances")
        if self.sigma_ln < 0:
            raise ConfigError("sigma_ln must be >= 0")
        if not 0.0 < self.mu_coarseness < 1.0:
            raise ConfigError(f"mu_coarseness must lie in (0, 1), got {self.mu_coarseness}")
        if self.mode not in ("gaussian", "nln"):
            raise ConfigError(f"unknown sampling mode {self.mode!r}")


@dataclass(frozen=True)
class PerturbationBatch:
    """Sampled control perturbations (M, N, m) plus the stream coordinates
    that regenerate them."""

    deltas: np.ndarray
    seed: int
    exploration_rate: float


def _check_dims(num_rollouts: int, horizon: int, channels: int, sigma, rollouts):
    if num_rollouts < 1 or horizon < 1 or channels < 1:
        raise ConfigError("batch dimensions must all be >= 1")
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if sigma.shape == (1,):
        sigma = np.repeat(sigma, channels)
    if sigma.shape != (channels,):
        raise ConfigError(f"sigma must have one variance per channel, got shape {sigma.shape}")
    if (sigma < 0).any():
        raise ConfigError("sigma variances must be >= 0")
    lo, hi = (0, num_rollouts) if rollouts is None else rollouts
    if not 0 <= lo <= hi <= num_rollouts:
        raise ConfigError(f"rollout range ({lo}, {hi}) outside [0, {num_rollouts}]")
    return sigma, lo, hi


def sample_gaussian(num_rollouts: int, horizon: int, channels: int, sigma, seed: int,
                    exploration_rate: float = 1.0, rollouts=None,
                    workspace: _Workspace | None = None) -> PerturbationBatch:
    """Zero-mean Gaussian perturbations with per-channel variance
    exploration_rate * sigma_c.

    rollouts=(lo, hi) generates only that slice of the batch; slices
    concatenate bit-exactly to the full batch.
    """
    sigma, lo, hi = _check_dims(num_rollouts, horizon, channels, sigma, rollouts)
    z, _ = _normal_pairs(seed, hi - lo, lo, horizon, channels, second=False,
                         workspace=workspace)
    stds = np.sqrt(exploration_rate * sigma)
    z *= stds
    return PerturbationBatch(z, seed, exploration_rate)


def sample_nln(num_rollouts: int, horizon: int, channels: int, sigma, mu_ln: float,
               sigma_ln: float, seed: int, exploration_rate: float = 1.0,
               rollouts=None, workspace: _Workspace | None = None) -> PerturbationBatch:
    """Normal-log-normal perturbations: each entry is the product of a
    zero-mean Gaussian draw (variance exploration_rate * sigma_c) and an
    independent log-normal draw with parameters (mu_ln, sigma_ln)."""
    sigma, lo, hi = _check_dims(num_rollouts, horizon, channels, sigma, rollouts)
    z, z_ln = _normal_pairs(seed, hi - lo, lo, horizon, channels, workspace=workspace)
    stds = np.sqrt(exploration_rate * sigma)
    z_ln *= sigma_ln
    z_ln += mu_ln
    np.exp(z_ln, out=z_ln)
    z *= stds
    z *= z_ln
    return PerturbationBatch(z, seed, exploration_rate)


def sample_batch(params: SamplingParams, num_rollouts: int, horizon: int, seed: int,
                 exploration_rate: float = 1.0, rollouts=None,
                 workspace: _Workspace | None = None) -> PerturbationBatch:
    """Dispatch on params.mode with params' channel count.

    Passing a workspace reuses its buffers (the returned deltas alias them);
    the default allocates fresh arrays.
    """
    channels = params.sigma_u.shape[0]
    if params.mode == "gaussian":
        return sample_gaussian(num_rollouts, horizon, channels, params.sigma_u, seed,
                               exploration_rate, rollouts, workspace=workspace)
    return sample_nln(num_rollouts, horizon, channels, params.sigma_u, params.mu_ln,
                      params.sigma_ln, seed, exploration_rate, rollouts,
                      workspace=workspace)


def nln_moments(mu_n: float, sigma_n: float, mu_ln: float, sigma_ln: float):
    """Mean and variance of the product of an N(mu_n, sigma_n^2) draw and an
    independent log-normal(mu_ln, sigma_ln) draw."""
    mean = mu_n * np.exp(mu_ln + 0.5 * sigma_ln ** 2)
    var = ((mu_n ** 2 + sigma_n ** 2) * np.exp(2.0 * mu_ln + 2.0 * sigma_ln ** 2)
           - mu_n ** 2 * np.exp(2.0 * mu_ln + sigma_ln ** 2))
    return float(mean), float(var)


def adaptive_rate(barrier_cost_star: float, mu_coarseness: float) -> float:
    """Exploration rate mu * ln(e + C_B): equals mu in free space and grows
    logarithmically with the barrier cost of the current plan."""
    return float(mu_coarseness * np.log(np.e + max(barrier_cost_star, 0.0)))
