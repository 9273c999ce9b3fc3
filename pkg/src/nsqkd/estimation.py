"""Monte Carlo check of the parameter-estimation confidence bounds.

Simulates the linear channel y = t*x + z seen during parameter estimation,
runs the maximum-likelihood estimators, and measures how often the
worst-case confidence bounds actually cover the true channel.

Randomness contract: Philox counter-based generator keyed by a 64-bit
seed; per-trial streams derive from SeedSequence(seed, spawn_key=(trial,)).
Gaussian variates come from the inverse normal CDF applied to open-interval
uniforms - a deterministic transform with no rejection step, so streams
are reproducible across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .finite_size import z_from_epsilon

__all__ = [
    "SampleBatch",
    "MlEstimate",
    "simulate_channel",
    "ml_estimate",
    "confidence_bounds",
    "coverage_experiment",
    "batch_to_csv",
    "batch_from_csv",
]

_U53 = 2**53


@dataclass(frozen=True)
class SampleBatch:
    """Paired estimation samples: Alice's modulation x, Bob's measurement y."""

    x: np.ndarray
    y: np.ndarray
    seed: int

    def __post_init__(self):
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ValueError("x and y must be equal-length 1-d arrays")
        if self.m < 2:
            raise ValueError(f"need at least 2 samples, got {self.m}")

    @property
    def m(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class MlEstimate:
    t_hat: float
    sigma2_hat: float


def _generator(seed: int, stream: int | None = None) -> np.random.Generator:
    if stream is None:
        ss = np.random.SeedSequence(seed)
    else:
        ss = np.random.SeedSequence(seed, spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(ss))


def _standard_normal(rng: np.random.Generator, size: int) -> np.ndarray:
    # 53-bit uniforms strictly inside (0, 1), then the inverse CDF
    u = (rng.integers(1, _U53, size=size, endpoint=True) - 0.5) / _U53
    return ndtri(u)


def simulate_channel(
    t: float, sigma2: float, v_a: float, m: int, seed: int
) -> SampleBatch:
    """Draw m samples of the linear estimation channel y = t*x + z.

    x is centered Gaussian with variance v_a; z is centered Gaussian with
    variance sigma2, independent of x. Reproducible from the seed.
    """
    if sigma2 < 0.0:
        raise ValueError(f"noise variance must be >= 0, got {sigma2}")
    if v_a <= 0.0:
        raise ValueError(f"modulation variance must be > 0, got {v_a}")
    if m < 2:
        raise ValueError(f"need at least 2 samples, got {m}")
    rng = _generator(seed)
    x = math.sqrt(v_a) * _standard_normal(rng, m)
    z = math.sqrt(sigma2) * _standard_normal(rng, m)
    return SampleBatch(x=x, y=t * x + z, seed=seed)


def ml_estimate(batch: SampleBatch) -> MlEstimate:
    """Maximum-likelihood estimators of the linear channel.

    t_hat = sum(x*y) / sum(x^2); sigma2_hat = mean squared residual.
    """
    sxx = float(np.dot(batch.x, batch.x))
    if sxx == 0.0:
        raise ValueError("all-zero modulation: t is not identifiable")
    t_hat = float(np.dot(batch.x, batch.y)) / sxx
    resid = batch.y - t_hat * batch.x
    sigma2_hat = float(np.dot(resid, resid)) / batch.m
    return MlEstimate(t_hat=t_hat, sigma2_hat=sigma2_hat)


def confidence_bounds(
    est: MlEstimate, m: int, v_a: float, eps_pe: float
) -> tuple[float, float]:
    """Worst-case bounds (t_min, sigma2_max) around the ML estimates.

    v_a is the modulation variance, i.e. V - 1 in the EPR picture, so these
    reproduce finite_size.worst_case_channel exactly when the estimates are
    replaced by their expected values.
    """
    if v_a <= 0.0:
        raise ValueError(f"modulation variance must be > 0, got {v_a}")
    z = z_from_epsilon(eps_pe)
    t_min = est.t_hat - z * math.sqrt(est.sigma2_hat / (m * v_a))
    sigma2_max = est.sigma2_hat + z * est.sigma2_hat * math.sqrt(2.0) / math.sqrt(m)
    return t_min, sigma2_max


def coverage_experiment(
    t: float,
    sigma2: float,
    v_a: float,
    m: int,
    eps_pe: float,
    trials: int,
    seed: int,
) -> tuple[float, float]:
    """Empirical coverage of the confidence bounds over repeated batches.

    Returns the fractions of trials with t >= t_min and sigma2 <= sigma2_max.
    Trial i uses the generator stream (seed, i), so results do not depend on
    execution order.
    """
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    hit_t = 0
    hit_s = 0
    sqrt_va = math.sqrt(v_a)
    sqrt_s2 = math.sqrt(sigma2)
    for trial in range(trials):
        rng = _generator(seed, stream=trial)
        x = sqrt_va * _standard_normal(rng, m)
        y = t * x + sqrt_s2 * _standard_normal(rng, m)
        est = ml_estimate(SampleBatch(x=x, y=y, seed=seed))
        t_min, sigma2_max = confidence_bounds(est, m, v_a, eps_pe)
        if t >= t_min:
            hit_t += 1
        if sigma2 <= sigma2_max:
            hit_s += 1
    return hit_t / trials, hit_s / trials


def batch_to_csv(batch: SampleBatch, path) -> None:
    """Write a batch as `index,x,y` with round-trip precision."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,x,y\n")
        for i in range(batch.m):
            fh.write(f"{i},{batch.x[i]:.17g},{batch.y[i]:.17g}\n")


def batch_from_csv(path, seed: int = 0) -> SampleBatch:
    """Read a batch written by batch_to_csv."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return SampleBatch(x=data[:, 1].copy(), y=data[:, 2].copy(), seed=seed)
