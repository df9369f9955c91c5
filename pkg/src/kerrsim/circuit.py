"""Normal modes and Kerr couplings of a Josephson-junction array.

A chain of N identical junctions (inductance ``l_j``, capacitance
``c_j``, parasitic capacitance ``c_0`` to ground per node) is shunted at
the input node by the line coupling ``c_s`` plus ``c_g`` and at the far
node by ``c_e``.  The linearized circuit gives a generalized symmetric
eigenproblem for the normal modes; the quartic correction of the
junction potential then yields self- and cross-Kerr couplings per mode
pair and the dressed mode frequencies.

This module works in SI units (henry, farad, rad/s); converters to
ordinary GHz/MHz frequencies are provided for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.constants import e as ELEMENTARY_CHARGE, hbar

#: Reduced flux quantum hbar / 2e (weber).
PHI0_REDUCED = hbar / (2 * ELEMENTARY_CHARGE)

#: Relative threshold below which a generalized eigenvalue counts as the
#: zero (free-phase) mode of the open chain.
ZERO_MODE_TOL = 1e-12

#: Default number of modes retained in the Kerr matrix.
DEFAULT_KERR_MODES = 8


class QuantizationError(RuntimeError):
    """Normal-mode analysis failed a structural expectation."""


@dataclass(frozen=True)
class CircuitParams:
    """Array netlist values, SI units.

    n_junctions chain elements between n_junctions + 1 nodes; the first
    node carries the line coupling ``c_s`` and shunt ``c_g``, the last
    node the shunt ``c_e``.
    """

    n_junctions: int
    l_j: float
    c_j: float
    c_0: float
    c_s: float
    c_g: float
    c_e: float

    def __post_init__(self):
        if self.n_junctions < 1:
            raise ValueError("need at least one junction")
        for name in ("l_j", "c_j", "c_0", "c_s", "c_g", "c_e"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class CircuitMatrices:
    """Capacitance matrix and inverse-inductance (Laplacian) matrix."""

    cap: np.ndarray
    ind_inv: np.ndarray


@dataclass(frozen=True)
class ModeSpectrum:
    """Oscillating normal modes, sorted ascending in frequency.

    ``eigvecs[:, k]`` is the node-phase profile of mode k;
    ``dphi[k, n]`` the phase drop across junction n.  Effective
    capacitance/inductance give back omega_k = 1/sqrt(L_k C_k)
    regardless of eigenvector normalization.
    """

    omegas: np.ndarray
    eigvecs: np.ndarray
    c_eff: np.ndarray
    l_eff: np.ndarray
    dphi: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.omegas.size

    def freqs_ghz(self) -> np.ndarray:
        return self.omegas / (2 * np.pi * 1e9)


@dataclass(frozen=True)
class KerrMatrix:
    """Kerr couplings (rad/s) of the retained modes and dressed frequencies.

    ``k_matrix[k, l]`` is the coefficient of -(n_k n_l) in the
    double-sum quartic Hamiltonian (off-diagonal pairs appear twice in
    that sum); ``dressed[k] = omega_k - sum_l k_matrix[k, l]``.
    """

    k_matrix: np.ndarray
    dressed: np.ndarray

    def k_mhz(self) -> np.ndarray:
        return self.k_matrix / (2 * np.pi * 1e6)

    def dressed_ghz(self) -> np.ndarray:
        return self.dressed / (2 * np.pi * 1e9)


def build_matrices(p: CircuitParams) -> CircuitMatrices:
    """Assemble the node capacitance and inverse-inductance matrices.

    Junction capacitances couple neighboring nodes, the parasitic
    ground capacitance sits on the first N nodes, and the end shunts
    load the two boundary nodes.  The inductive matrix is the chain
    graph Laplacian scaled by 1/l_j; its row sums vanish identically
    (only phase differences store energy).
    """
    n = p.n_junctions
    size = n + 1
    cap = np.zeros((size, size))
    ind = np.zeros((size, size))
    for j in range(n):
        cap[j, j] += p.c_j
        cap[j + 1, j + 1] += p.c_j
        cap[j, j + 1] -= p.c_j
        cap[j + 1, j] -= p.c_j
        ind[j, j] += 1 / p.l_j
        ind[j + 1, j + 1] += 1 / p.l_j
        ind[j, j + 1] -= 1 / p.l_j
        ind[j + 1, j] -= 1 / p.l_j
    cap[np.arange(n), np.arange(n)] += p.c_0
    cap[0, 0] += p.c_s + p.c_g
    cap[-1, -1] += p.c_e
    return CircuitMatrices(cap, ind)


def normal_modes(m: CircuitMatrices) -> ModeSpectrum:
    """Solve ind_inv v = omega^2 cap v and drop the free-phase zero mode.

    Raises
    ------
    QuantizationError
        If the capacitance matrix is not positive definite or the zero
        mode is not exactly one-dimensional.
    """
    try:
        w, v = la.eigh(m.ind_inv, m.cap)
    except la.LinAlgError as err:
        raise QuantizationError(f"generalized eigensolve failed: {err}")
    # the free-phase mode stores no inductive energy: identify it by a
    # vanishing phase-difference profile, which is robust even when its
    # numerical eigenvalue is polluted by extreme capacitance scales
    rel_dphi = (np.linalg.norm(v[:-1, :] - v[1:, :], axis=0)
                / np.linalg.norm(v, axis=0))
    zero = rel_dphi < 1e-7
    if int(np.sum(zero)) != 1:
        raise QuantizationError(
            f"expected exactly one zero mode, found {int(np.sum(zero))}")
    keep = ~zero
    w = w[keep]
    v = v[:, keep]
    omegas = np.sqrt(w)
    c_eff = np.einsum("nk,nm,mk->k", v, m.cap, v)
    l_inv = np.einsum("nk,nm,mk->k", v, m.ind_inv, v)
    l_eff = 1.0 / l_inv
    check = 1.0 / np.sqrt(l_eff * c_eff)
    if not np.allclose(check, omegas, rtol=1e-9):
        raise QuantizationError("1/sqrt(LC) inconsistent with eigenvalues")
    dphi = (v[:-1, :] - v[1:, :]).T
    return ModeSpectrum(omegas, v, c_eff, l_eff, dphi)


def array_modes(p: CircuitParams) -> ModeSpectrum:
    """Normal modes straight from circuit parameters."""
    return normal_modes(build_matrices(p))


def kerr_matrix(spec: ModeSpectrum, l_j: float,
                n_modes: int = DEFAULT_KERR_MODES) -> KerrMatrix:
    """Kerr couplings of the lowest ``n_modes`` modes.

    The quartic junction correction contributes, per mode pair (k, l),

        K_kl = (2 - delta_kl) / (4 l_j phi0^2)
               * (hbar omega_k L_k / 2) * (hbar omega_l L_l / 2)
               * sum_n dphi_k(n)^2 dphi_l(n)^2,

    converted to rad/s.  The zero-point flux factors make every entry
    invariant under rescaling of the eigenvectors.  Dressed frequencies
    subtract the row sums from the bare mode frequencies.
    """
    if n_modes > spec.n_modes:
        raise ValueError(f"only {spec.n_modes} modes available")
    om = spec.omegas[:n_modes]
    zpf2 = hbar * om * spec.l_eff[:n_modes] / 2  # flux^2 per mode
    dphi2 = spec.dphi[:n_modes] ** 2
    overlap = dphi2 @ dphi2.T
    factor = (2.0 - np.eye(n_modes)) / (4 * l_j * PHI0_REDUCED**2)
    k_energy = factor * np.outer(zpf2, zpf2) * overlap
    k_rad = k_energy / hbar
    dressed = om - k_rad.sum(axis=1)
    return KerrMatrix(k_rad, dressed)


def two_mode_cross_kerr(km: KerrMatrix, k: int = 0, l: int = 1) -> float:
    """Full pair coefficient of n_k n_l in the quartic Hamiltonian.

    The double sum counts each unordered pair twice, so the coefficient
    entering a two-mode model Hamiltonian is twice the matrix entry.
    """
    return float(2.0 * km.k_matrix[k, l])


def geometric_cross_kerr(k_self_a: float, k_self_b: float) -> float:
    """Cross-Kerr estimate 4 sqrt(Ka Kb) from the two self-Kerr values."""
    return float(4.0 * np.sqrt(k_self_a * k_self_b))
