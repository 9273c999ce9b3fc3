"""Finite-size security analysis: privacy-amplification penalty and
worst-case parameter estimation.

The finite-size rate is R = (n/N) [beta*I_AB - chi_BE^wc - Delta(n)],
where I_AB is evaluated at the nominal channel, chi_BE at the worst-case
channel compatible with m = N - n estimation samples at confidence
1 - eps_pe, and Delta(n) penalizes privacy amplification on n key symbols.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erfc, erfcinv

from . import gaussian as g
from . import protocols as proto
from .protocols import ChannelParams, DetectorParams, KeyRateReport

__all__ = [
    "FiniteSizeParams",
    "WorstCaseChannel",
    "EstimationFailureError",
    "z_from_epsilon",
    "delta_n",
    "worst_case_channel",
    "worst_case_cov",
    "finite_keyrate",
    "required_block_length",
]


class EstimationFailureError(RuntimeError):
    """Parameter estimation cannot bound the channel away from zero."""


@dataclass(frozen=True)
class FiniteSizeParams:
    """Block accounting and security failure probabilities.

    n_total is the total number of exchanged symbols N; n_key of them make
    the raw key and the remaining m = N - n_key are spent on parameter
    estimation. When n_key is omitted the block is split in half.
    """

    n_total: float
    n_key: float | None = None
    eps_smooth: float = 1e-10
    eps_pe: float = 1e-10
    eps_pa: float = 1e-10
    dim_hx: int = 2

    def __post_init__(self):
        if self.n_total < 2:
            raise ValueError(f"n_total must be >= 2, got {self.n_total}")
        for name in ("eps_smooth", "eps_pe", "eps_pa"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {val}")
        if self.dim_hx < 1:
            raise ValueError(f"dim_hx must be >= 1, got {self.dim_hx}")
        if self.n_key is not None and not 1.0 <= self.n_key <= self.n_total - 1.0:
            raise ValueError(
                f"n_key must leave at least one estimation sample, got {self.n_key}"
            )

    @property
    def key_symbols(self) -> float:
        return self.n_total / 2.0 if self.n_key is None else float(self.n_key)

    @property
    def est_symbols(self) -> float:
        return self.n_total - self.key_symbols


@dataclass(frozen=True)
class WorstCaseChannel:
    """Confidence-bound channel: lowest amplitude, highest noise."""

    t_min: float
    sigma2_max: float
    t_wc: float
    eps_wc: float


def z_from_epsilon(eps_pe: float) -> float:
    """Two-sided confidence coefficient: erfc(z / sqrt(2)) = eps_pe.

    Each parameter bound then fails with probability eps_pe / 2 (one tail
    of the standard normal distribution).
    """
    if not 0.0 < eps_pe < 1.0:
        raise ValueError(f"eps_pe must be in (0, 1), got {eps_pe}")
    return math.sqrt(2.0) * float(erfcinv(eps_pe))


def z_residual(z: float, eps_pe: float) -> float:
    """Residual of the defining equation, for verification."""
    return float(erfc(z / math.sqrt(2.0))) - eps_pe


def delta_n(fs: FiniteSizeParams) -> float:
    """Privacy-amplification penalty Delta(n) in bits per symbol."""
    n = fs.key_symbols
    term_smooth = (2.0 * fs.dim_hx + 3.0) * math.sqrt(math.log2(2.0 / fs.eps_smooth) / n)
    term_pa = (2.0 / n) * math.log2(1.0 / fs.eps_pa)
    return term_smooth + term_pa


def worst_case_channel(
    t: float, eps: float, v: float, m: float, eps_pe: float
) -> WorstCaseChannel:
    """Worst-case (T, eps) compatible with m estimation samples.

    Uses the expected values of the maximum-likelihood estimators,
    t_hat = sqrt(T) and sigma2_hat = 1 + T*eps, pushed to the adverse ends
    of their confidence intervals.
    """
    if not 0.0 < t <= 1.0:
        raise ValueError(f"transmittance must be in (0, 1], got {t}")
    if eps < 0.0:
        raise ValueError(f"excess noise must be >= 0, got {eps}")
    if v <= 1.0:
        raise ValueError(f"EPR variance must be > 1 for estimation, got {v}")
    if m < 1.0:
        raise ValueError(f"estimation samples must be >= 1, got {m}")
    z = z_from_epsilon(eps_pe)
    sigma2 = 1.0 + t * eps
    t_min = math.sqrt(t) - z * math.sqrt(sigma2 / (m * (v - 1.0)))
    sigma2_max = sigma2 + z * sigma2 * math.sqrt(2.0) / math.sqrt(m)
    if t_min <= 0.0:
        raise EstimationFailureError(
            f"estimation failure: worst-case amplitude bound {t_min:.3g} is not positive"
        )
    t_wc = t_min * t_min
    eps_wc = (sigma2_max - 1.0) / t_wc
    return WorstCaseChannel(t_min=t_min, sigma2_max=sigma2_max, t_wc=t_wc, eps_wc=eps_wc)


def worst_case_cov(ch: ChannelParams, m: float, eps_pe: float) -> np.ndarray:
    """Worst-case two-mode covariance gamma_epsPE.

    The off-diagonal is t_min * sqrt(V^2 - 1), consistent with the direct
    worst-case parameterization; the output-mode variance grows by Delta_B.
    The result must stay physical, otherwise estimation fails.
    """
    t = ch.transmittance
    v = ch.v
    wc = worst_case_channel(t, ch.eps, v, m, eps_pe)
    z = z_from_epsilon(eps_pe)
    sigma2 = 1.0 + t * ch.eps
    delta_b = (z / math.sqrt(m)) * (
        sigma2 * math.sqrt(2.0) - 2.0 * math.sqrt(t * (v - 1.0))
    ) + z * z * sigma2 / m
    cov = g.epr_channel_cov(v, t, ch.eps)
    c_wc = wc.t_min * math.sqrt(v * v - 1.0)
    cov[0:2, 2:4] = c_wc * g.SIGMA_Z
    cov[2:4, 0:2] = c_wc * g.SIGMA_Z
    cov[2:4, 2:4] += delta_b * np.eye(2)
    if not g.is_physical(cov):
        raise EstimationFailureError("estimation failure: worst-case state is unphysical")
    return cov


def finite_keyrate(
    ch: ChannelParams,
    det: DetectorParams,
    fs: FiniteSizeParams,
    model: str = "biased",
) -> KeyRateReport:
    """Finite-size secret key rate, negative values returned as-is.

    Mutual information uses the nominal channel; Eve's bound uses the
    worst-case channel mapped back to scalar (T_wc, eps_wc).
    """
    t = ch.transmittance
    wc = worst_case_channel(t, ch.eps, ch.v, fs.est_symbols, fs.eps_pe)
    ch_wc = replace(ch, l=None, t=wc.t_wc, eps=wc.eps_wc)
    penalty = delta_n(fs)
    if model == "biased":
        i_ab = proto.biased_iab(ch, det)
        chi_be, joint, cond = proto.biased_chi_be(ch_wc, det)
    elif model == "ideal":
        eta_d, v_el = det.ideal_reduction()
        i_ab = proto.ideal_iab(ch, eta_d, v_el)
        chi_be, joint, cond = proto.ideal_chi_be(ch_wc, eta_d, v_el)
    else:
        raise ValueError(f"unknown model {model!r}, expected 'ideal' or 'biased'")
    ratio = fs.key_symbols / fs.n_total
    rate = ratio * (ch.beta * i_ab - chi_be - penalty)
    return KeyRateReport(
        rate=rate,
        i_ab=i_ab,
        chi_be=chi_be,
        eigenvalues_joint=tuple(joint),
        eigenvalues_conditional=tuple(cond),
        delta_n=penalty,
        t_worst=wc.t_wc,
        eps_worst=wc.eps_wc,
    )


def required_block_length(t: float, delta_eps: float, eps_pe: float) -> int:
    """Estimation samples needed to pin excess noise to within delta_eps."""
    if t <= 0.0 or delta_eps <= 0.0:
        raise ValueError("transmittance and noise resolution must be positive")
    z = z_from_epsilon(eps_pe)
    return math.ceil(2.0 * z * z / (t * t * delta_eps * delta_eps))
