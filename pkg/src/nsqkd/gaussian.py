"""Covariance-matrix algebra for multimode Gaussian states.

States are zero-mean and represented by their covariance matrix in
shot-noise units (vacuum variance = 1), with quadratures ordered
(x1, p1, x2, p2, ...), so every mode occupies a contiguous 2x2 block.
All functions are pure and operate on plain ``numpy`` arrays.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

SYMMETRY_TOL = 1e-12
PHYSICALITY_TOL = 1e-6
EIGENVALUE_CLIP = 1e-9
PINV_CUTOFF = 1e-12

SIGMA_Z = np.diag([1.0, -1.0])


class PhysicalityError(ValueError):
    """Covariance matrix violates the uncertainty relation."""


class Quadrature(Enum):
    """Quadrature selector for partial homodyne measurements."""

    X = 0
    P = 1

    @property
    def projector(self) -> np.ndarray:
        """2x2 idempotent projector onto the selected quadrature."""
        pi = np.zeros((2, 2))
        pi[self.value, self.value] = 1.0
        return pi


def n_modes(cov: np.ndarray) -> int:
    """Number of modes of a covariance matrix."""
    dim = cov.shape[0]
    if cov.shape != (dim, dim) or dim % 2 != 0:
        raise ValueError(f"covariance matrix must be 2n x 2n, got shape {cov.shape}")
    return dim // 2


def symplectic_form(modes: int) -> np.ndarray:
    """Standard symplectic form: block-diagonal 2x2 blocks [[0,1],[-1,0]]."""
    omega_1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(modes), omega_1)


def _symmetrized(cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if not np.allclose(cov, cov.T, rtol=SYMMETRY_TOL, atol=SYMMETRY_TOL * 10):
        raise ValueError("covariance matrix is not symmetric")
    return 0.5 * (cov + cov.T)


def chi_line(t: float, eps: float) -> float:
    """Channel-added noise referred to the channel input.

    Args:
        t: channel transmittance in (0, 1].
        eps: excess noise in SNU, >= 0.
    """
    if not 0.0 < t <= 1.0:
        raise ValueError(f"transmittance must be in (0, 1], got {t}")
    if eps < 0.0:
        raise ValueError(f"excess noise must be >= 0, got {eps}")
    return 1.0 / t - 1.0 + eps


def epr_channel_cov(v: float, t: float, eps: float) -> np.ndarray:
    """Two-mode covariance of an EPR state sent through a lossy noisy channel.

    Mode 0 is the retained mode (variance v), mode 1 is the channel output.

    Args:
        v: EPR quadrature variance in SNU, >= 1.
        t: channel transmittance in (0, 1].
        eps: excess noise in SNU (output referred to channel input).
    """
    if v < 1.0:
        raise ValueError(f"EPR variance must be >= 1, got {v}")
    c = np.sqrt(t * (v * v - 1.0))
    b = t * (v + chi_line(t, eps))
    cov = np.zeros((4, 4))
    cov[0:2, 0:2] = v * np.eye(2)
    cov[2:4, 2:4] = b * np.eye(2)
    cov[0:2, 2:4] = c * SIGMA_Z
    cov[2:4, 0:2] = c * SIGMA_Z
    return cov


def transmittance_from_distance(length_km: float, alpha_db_per_km: float) -> float:
    """Fiber transmittance 10^(-alpha*L/10)."""
    if length_km < 0.0:
        raise ValueError(f"distance must be >= 0, got {length_km}")
    if alpha_db_per_km <= 0.0:
        raise ValueError(f"loss coefficient must be > 0, got {alpha_db_per_km}")
    return 10.0 ** (-alpha_db_per_km * length_km / 10.0)


def beamsplitter_op(eta: float, mode_a: int, mode_b: int, modes: int) -> np.ndarray:
    """Symplectic matrix of a beam splitter acting on two modes.

    The (mode_a, mode_b) block rows and columns carry
    [[sqrt(eta) I2, sqrt(1-eta) I2], [-sqrt(1-eta) I2, sqrt(eta) I2]];
    all other modes are untouched.

    Args:
        eta: beam-splitter transmittance in [0, 1].
        mode_a: mode receiving amplitude sqrt(eta) of itself.
        mode_b: second input mode (the coupled port).
        modes: total number of modes of the operator.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmittance must be in [0, 1], got {eta}")
    for m in (mode_a, mode_b):
        if not 0 <= m < modes:
            raise IndexError(f"mode index {m} out of range for {modes} modes")
    if mode_a == mode_b:
        raise ValueError("beam splitter requires two distinct modes")
    c = np.sqrt(eta)
    s = np.sqrt(1.0 - eta)
    op = np.eye(2 * modes)
    a, b = 2 * mode_a, 2 * mode_b
    op[a : a + 2, a : a + 2] = c * np.eye(2)
    op[a : a + 2, b : b + 2] = s * np.eye(2)
    op[b : b + 2, a : a + 2] = -s * np.eye(2)
    op[b : b + 2, b : b + 2] = c * np.eye(2)
    return op


def is_symplectic(op: np.ndarray, tol: float = 1e-10) -> bool:
    """Check S Omega S^T = Omega."""
    modes = n_modes(op)
    omega = symplectic_form(modes)
    return bool(np.allclose(op @ omega @ op.T, omega, atol=tol))


def attach_vacuum(cov: np.ndarray, position: int) -> np.ndarray:
    """Insert a vacuum mode (identity 2x2 block) at the given mode position."""
    modes = n_modes(cov)
    if not 0 <= position <= modes:
        raise IndexError(f"insert position {position} out of range for {modes} modes")
    out = np.eye(2 * (modes + 1))
    k = 2 * position
    keep = list(range(0, k)) + list(range(k + 2, 2 * (modes + 1)))
    out[np.ix_(keep, keep)] = cov
    return out


def apply_symplectic(cov: np.ndarray, op: np.ndarray) -> np.ndarray:
    """Transform a state: S gamma S^T."""
    if op.shape != cov.shape:
        raise ValueError(f"dimension mismatch: op {op.shape} vs cov {cov.shape}")
    return op @ cov @ op.T


def reorder_modes(cov: np.ndarray, permutation) -> np.ndarray:
    """Permute the 2x2 mode blocks: output mode i is input mode permutation[i]."""
    modes = n_modes(cov)
    perm = list(permutation)
    if sorted(perm) != list(range(modes)):
        raise ValueError(f"permutation {perm} is not a bijection on {modes} modes")
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in perm])
    return cov[np.ix_(idx, idx)]


def trace_out(cov: np.ndarray, modes_to_remove) -> np.ndarray:
    """Discard modes: delete their 2x2 block rows and columns."""
    modes = n_modes(cov)
    remove = set(modes_to_remove)
    for m in remove:
        if not 0 <= m < modes:
            raise IndexError(f"mode index {m} out of range for {modes} modes")
    keep = [m for m in range(modes) if m not in remove]
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in keep]) if keep else np.array([], dtype=int)
    return cov[np.ix_(idx, idx)]


def _partition(cov: np.ndarray, measured_mode: int):
    """Split into (remaining block, cross block, measured 2x2 block).

    The cross block sigma holds rows of the measured mode against columns of
    the remaining modes, matching gamma = [[gamma_A, sigma^T], [sigma, gamma_B]].
    """
    modes = n_modes(cov)
    if not 0 <= measured_mode < modes:
        raise IndexError(f"mode index {measured_mode} out of range for {modes} modes")
    if modes < 2:
        raise ValueError("conditioning requires at least one unmeasured mode")
    k = 2 * measured_mode
    rest = [i for i in range(2 * modes) if i not in (k, k + 1)]
    gamma_a = cov[np.ix_(rest, rest)]
    sigma = cov[np.ix_([k, k + 1], rest)]
    gamma_b = cov[k : k + 2, k : k + 2]
    return gamma_a, sigma, gamma_b


def homodyne_condition(cov: np.ndarray, measured_mode: int, quad: Quadrature) -> np.ndarray:
    """State of the remaining modes after a homodyne measurement of one mode.

    Returns gamma_A - sigma^T (Pi gamma_B Pi)^MP sigma with Pi the quadrature
    projector; the Moore-Penrose pseudoinverse absorbs the singular projected
    block, so no special-casing is needed.
    """
    gamma_a, sigma, gamma_b = _partition(cov, measured_mode)
    pi = quad.projector
    h = np.linalg.pinv(pi @ gamma_b @ pi, rcond=PINV_CUTOFF)
    return gamma_a - sigma.T @ h @ sigma


def heterodyne_condition(cov: np.ndarray, measured_mode: int) -> np.ndarray:
    """State of the remaining modes after a heterodyne measurement of one mode.

    Returns gamma_A - sigma^T (gamma_B + I2)^-1 sigma.
    """
    gamma_a, sigma, gamma_b = _partition(cov, measured_mode)
    h = np.linalg.inv(gamma_b + np.eye(2))
    return gamma_a - sigma.T @ h @ sigma


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a physical covariance matrix, descending.

    Computed from the eigenvalues of i*Omega*gamma, which come in +/- pairs;
    each magnitude is returned once. Values within EIGENVALUE_CLIP below 1
    are numerical dust and get clipped to exactly 1.
    """
    cov = _symmetrized(cov)
    modes = n_modes(cov)
    omega = symplectic_form(modes)
    raw = np.abs(np.linalg.eigvals(1j * omega @ cov))
    raw.sort()
    nu = raw[::-2][:modes].copy()  # pairs are adjacent after sorting
    if nu[-1] < 1.0 - PHYSICALITY_TOL:
        raise PhysicalityError(
            f"symplectic eigenvalue {nu[-1]:.12g} below 1: state is unphysical"
        )
    nu[(nu >= 1.0 - EIGENVALUE_CLIP) & (nu < 1.0)] = 1.0
    return nu


def is_physical(cov: np.ndarray, tol: float = EIGENVALUE_CLIP) -> bool:
    """True when symmetric and all symplectic eigenvalues >= 1 - tol."""
    try:
        cov = _symmetrized(cov)
    except ValueError:
        return False
    modes = n_modes(cov)
    omega = symplectic_form(modes)
    raw = np.abs(np.linalg.eigvals(1j * omega @ cov))
    return bool(raw.min() >= 1.0 - tol)


def g_entropy(x: float) -> float:
    """Bosonic entropy G(x) = (x+1) log2(x+1) - x log2(x), with G(0) = 0."""
    if x < 0.0:
        raise ValueError(f"g_entropy requires x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    return float((x + 1.0) * np.log2(x + 1.0) - x * np.log2(x))
