"""Entanglement-based models of the No-Switching protocol.

Two receiver models are provided. The ideal model uses a single effective
homodyne-detector pair (one detection efficiency, one electronic noise) and
treats heterodyne detection as one Gaussian measurement. The biased model
splits the received mode on a beam splitter of transmittance eta_bs and
calibrates the x and p detection branches separately; detection efficiency
is trusted (loss ancillas retained), electronic noise is modeled as a
vacuum-coupled beam splitter whose ancilla is discarded.

Mutual information uses reverse reconciliation; Eve is bounded by the
Holevo quantity under collective attacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import gaussian as g
from .gaussian import Quadrature, chi_line

__all__ = [
    "ChannelParams",
    "DetectorParams",
    "KeyRateReport",
    "chi_line",
    "chi_het_ideal",
    "chi_hom_branch",
    "ideal_iab",
    "ideal_chi_be",
    "ideal_keyrate",
    "build_biased_cov",
    "biased_iab",
    "biased_chi_be",
    "biased_keyrate",
]


@dataclass(frozen=True)
class ChannelParams:
    """Source and channel parameters in shot-noise units.

    v is the EPR variance (v = V_A + 1). Give either the fiber length l in
    km (transmittance follows from the loss coefficient alpha, dB/km) or
    the transmittance t directly.
    """

    v: float
    l: float | None = None
    t: float | None = None
    eps: float = 0.05
    alpha: float = 0.2
    beta: float = 0.95

    def __post_init__(self):
        if self.v < 1.0:
            raise ValueError(f"EPR variance v must be >= 1, got {self.v}")
        if self.eps < 0.0:
            raise ValueError(f"excess noise eps must be >= 0, got {self.eps}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"reconciliation efficiency beta must be in (0, 1], got {self.beta}")
        if self.l is None and self.t is None:
            raise ValueError("one of distance l or transmittance t is required")
        if self.t is not None and not 0.0 < self.t <= 1.0:
            raise ValueError(f"transmittance t must be in (0, 1], got {self.t}")
        if self.l is not None and self.l < 0.0:
            raise ValueError(f"distance l must be >= 0, got {self.l}")

    @property
    def transmittance(self) -> float:
        if self.t is not None:
            return self.t
        return g.transmittance_from_distance(self.l, self.alpha)

    def with_transmittance(self, t: float) -> "ChannelParams":
        """Copy with the channel pinned to an explicit transmittance."""
        return replace(self, l=None, t=t)


@dataclass(frozen=True)
class DetectorParams:
    """Receiver parameters: per-branch efficiencies and electronic noises.

    eta_bs is the transmittance of the splitter in front of the two
    homodyne detectors; the x branch is the transmitted output.
    """

    eta_d_x: float = 0.6
    eta_d_p: float = 0.8
    v_el_x: float = 0.1403
    v_el_p: float = 0.0743
    eta_bs: float = 0.5

    def __post_init__(self):
        for name in ("eta_d_x", "eta_d_p"):
            val = getattr(self, name)
            if not 0.0 < val <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {val}")
        for name in ("v_el_x", "v_el_p"):
            val = getattr(self, name)
            if val < 0.0:
                raise ValueError(f"{name} must be >= 0, got {val}")
        if not 0.0 < self.eta_bs < 1.0:
            raise ValueError(f"eta_bs must be in (0, 1), got {self.eta_bs}")

    @property
    def eta_e_x(self) -> float:
        """Electronic-noise beam-splitter transmittance, x branch."""
        return 1.0 / (1.0 + self.v_el_x)

    @property
    def eta_e_p(self) -> float:
        return 1.0 / (1.0 + self.v_el_p)

    def ideal_reduction(self) -> tuple[float, float]:
        """Single (eta_d, v_el) pair for modeling this receiver as symmetric.

        Mean branch efficiency with the better branch's noise floor: the
        flattering symmetric model whose predicted rate sits above the
        biased rate at every distance, which is the overestimation the
        biased analysis closes. Reduces to the exact branch values when
        the receiver is already symmetric.
        """
        return (
            0.5 * (self.eta_d_x + self.eta_d_p),
            min(self.v_el_x, self.v_el_p),
        )


@dataclass(frozen=True)
class KeyRateReport:
    """Secret key rate with its ingredients, all in bits per symbol."""

    rate: float
    i_ab: float
    chi_be: float
    eigenvalues_joint: tuple = ()
    eigenvalues_conditional: tuple = ()
    delta_n: float = 0.0
    t_worst: float | None = None
    eps_worst: float | None = None
    extras: dict = field(default_factory=dict)


def chi_het_ideal(eta_d: float, v_el: float) -> float:
    """Heterodyne detection noise referred to Bob's input (ideal model)."""
    if not 0.0 < eta_d <= 1.0:
        raise ValueError(f"eta_d must be in (0, 1], got {eta_d}")
    if v_el < 0.0:
        raise ValueError(f"v_el must be >= 0, got {v_el}")
    return (1.0 + (1.0 - eta_d) + 2.0 * v_el) / eta_d


def chi_hom_branch(eta_d: float, v_el: float, branch_t: float) -> float:
    """Homodyne detection noise of one branch referred to Bob's input.

    branch_t is the splitter transmittance reaching this branch: eta_bs for
    the x branch, 1 - eta_bs for the p branch.
    """
    if not 0.0 < eta_d <= 1.0:
        raise ValueError(f"eta_d must be in (0, 1], got {eta_d}")
    if v_el < 0.0:
        raise ValueError(f"v_el must be >= 0, got {v_el}")
    if not 0.0 < branch_t < 1.0:
        raise ValueError(f"branch transmittance must be in (0, 1), got {branch_t}")
    return (1.0 - eta_d * branch_t + v_el) / (eta_d * branch_t)


def _holevo(joint_nus, cond_nus) -> float:
    total = 0.0
    for nu in joint_nus:
        total += g.g_entropy(max((nu - 1.0) / 2.0, 0.0))
    for nu in cond_nus:
        total -= g.g_entropy(max((nu - 1.0) / 2.0, 0.0))
    return total


def _iab_from_chi_tot(v: float, chi_tot: float) -> float:
    return float(np.log2((v + chi_tot) / (1.0 + chi_tot)))


def ideal_iab(ch: ChannelParams, eta_d: float, v_el: float) -> float:
    """Alice-Bob mutual information of the ideal protocol, in bits."""
    t = ch.transmittance
    chi_tot = chi_line(t, ch.eps) + chi_het_ideal(eta_d, v_el) / t
    return _iab_from_chi_tot(ch.v, chi_tot)


def _ideal_receiver_cov(ch: ChannelParams, eta_d: float, v_el: float) -> np.ndarray:
    """Three-mode state (A, B3, G2) after the trusted detection chain.

    Electronic noise acts first (its ancilla is discarded), then detection
    efficiency (its ancilla G2 is kept as a trusted mode).
    """
    eta_e = 1.0 / (1.0 + v_el)
    cov = g.epr_channel_cov(ch.v, ch.transmittance, ch.eps)  # [A, B1]
    cov = g.attach_vacuum(cov, 2)
    cov = g.apply_symplectic(cov, g.beamsplitter_op(eta_e, 1, 2, 3))
    cov = g.trace_out(cov, [2])  # [A, B2]
    cov = g.attach_vacuum(cov, 2)
    cov = g.apply_symplectic(cov, g.beamsplitter_op(eta_d, 1, 2, 3))  # [A, B3, G2]
    return cov


def ideal_chi_be(ch: ChannelParams, eta_d: float, v_el: float):
    """Holevo bound of the ideal protocol.

    Returns (chi_be, joint eigenvalues, conditional eigenvalues); the
    conditional state follows from a heterodyne measurement of B3.
    """
    cov = _ideal_receiver_cov(ch, eta_d, v_el)
    joint = g.symplectic_eigenvalues(cov)
    cond = g.symplectic_eigenvalues(g.heterodyne_condition(cov, 1))
    return _holevo(joint, cond), joint, cond


def ideal_keyrate(ch: ChannelParams, eta_d: float, v_el: float) -> KeyRateReport:
    """Asymptotic secret key rate of the ideal protocol."""
    i_ab = ideal_iab(ch, eta_d, v_el)
    chi_be, joint, cond = ideal_chi_be(ch, eta_d, v_el)
    return KeyRateReport(
        rate=ch.beta * i_ab - chi_be,
        i_ab=i_ab,
        chi_be=chi_be,
        eigenvalues_joint=tuple(joint),
        eigenvalues_conditional=tuple(cond),
    )


def build_biased_cov(ch: ChannelParams, det: DetectorParams) -> np.ndarray:
    """Six-mode state of the biased receiver, ordered (A_x, A_p, G2, F2, B_x3, B_p3).

    Cascade: EPR through the channel; Alice's 50:50 heterodyne split; Bob's
    branch splitter (x branch transmitted with amplitude sqrt(eta_bs));
    per branch an electronic-noise splitter (ancilla discarded) followed by
    a detection-efficiency splitter (ancilla kept: G2 for x, F2 for p).
    """
    bs = g.beamsplitter_op
    cov = g.epr_channel_cov(ch.v, ch.transmittance, ch.eps)  # [A, B1]
    cov = g.attach_vacuum(cov, 1)
    cov = g.apply_symplectic(cov, bs(0.5, 0, 1, 3))  # [A_x, A_p, B1]
    cov = g.attach_vacuum(cov, 3)
    cov = g.apply_symplectic(cov, bs(det.eta_bs, 2, 3, 4))  # [A_x, A_p, B_x1, B_p1]
    # x branch
    cov = g.attach_vacuum(cov, 4)
    cov = g.apply_symplectic(cov, bs(det.eta_e_x, 2, 4, 5))
    cov = g.trace_out(cov, [4])  # [A_x, A_p, B_x2, B_p1]
    cov = g.attach_vacuum(cov, 4)
    cov = g.apply_symplectic(cov, bs(det.eta_d_x, 2, 4, 5))  # [A_x, A_p, B_x3, B_p1, G2]
    # p branch
    cov = g.attach_vacuum(cov, 5)
    cov = g.apply_symplectic(cov, bs(det.eta_e_p, 3, 5, 6))
    cov = g.trace_out(cov, [5])  # [A_x, A_p, B_x3, B_p2, G2]
    cov = g.attach_vacuum(cov, 5)
    cov = g.apply_symplectic(cov, bs(det.eta_d_p, 3, 5, 6))  # [A_x, A_p, B_x3, B_p3, G2, F2]
    return g.reorder_modes(cov, [0, 1, 4, 5, 2, 3])


def biased_iab(ch: ChannelParams, det: DetectorParams) -> float:
    """Alice-Bob mutual information of the biased protocol, in bits.

    Each branch contributes half a Shannon term with its own detection
    noise; the total noise referred to the input is
    chi_line + chi_hom_branch / T per quadrature.
    """
    t = ch.transmittance
    cl = chi_line(t, ch.eps)
    chi_x = chi_hom_branch(det.eta_d_x, det.v_el_x, det.eta_bs)
    chi_p = chi_hom_branch(det.eta_d_p, det.v_el_p, 1.0 - det.eta_bs)
    i_x = 0.5 * _iab_from_chi_tot(ch.v, cl + chi_x / t)
    i_p = 0.5 * _iab_from_chi_tot(ch.v, cl + chi_p / t)
    return i_x + i_p


def biased_chi_be(ch: ChannelParams, det: DetectorParams):
    """Holevo bound of the biased protocol.

    Returns (chi_be, joint eigenvalues, conditional eigenvalues). Bob's
    measurement is a homodyne of p on B_p3 and of x on B_x3; the
    conditional state keeps Alice's modes and the trusted ancillas G2, F2.
    """
    cov = build_biased_cov(ch, det)
    joint = g.symplectic_eigenvalues(cov)
    cond = g.homodyne_condition(cov, 5, Quadrature.P)  # measure p on B_p3
    cond = g.homodyne_condition(cond, 4, Quadrature.X)  # measure x on B_x3
    cond_nus = g.symplectic_eigenvalues(cond)
    return _holevo(joint, cond_nus), joint, cond_nus


def biased_keyrate(ch: ChannelParams, det: DetectorParams) -> KeyRateReport:
    """Asymptotic secret key rate of the biased protocol."""
    i_ab = biased_iab(ch, det)
    chi_be, joint, cond = biased_chi_be(ch, det)
    return KeyRateReport(
        rate=ch.beta * i_ab - chi_be,
        i_ab=i_ab,
        chi_be=chi_be,
        eigenvalues_joint=tuple(joint),
        eigenvalues_conditional=tuple(cond),
    )
