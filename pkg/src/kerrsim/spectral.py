"""Liouvillian eigenanalysis and the analytical quantum switching rate.

The dense generator has d^2 eigenvalues; in the presence of damping all
real parts are non-positive and exactly one eigenvalue vanishes (the
steady state).  The nonzero eigenvalue closest to the imaginary axis is
the slow mode whose inverse real part sets the longest relaxation time.
An explicit switching-rate formula evaluates the overlap of the initial
state's motion with the steady state, without any eigendecomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as la

from . import liouville
from .hilbert import ResourceLimitError
from .liouville import Superoperator, unvec, vec

#: Largest d**2 accepted by the dense eigensolver.
EIG_CAP = 4096

#: |eigenvalue| below which a mode counts as the steady mode.
ZERO_TOL = 1e-9

#: Allowed positive excursion of eigenvalue real parts (dissipativity).
DISSIPATIVITY_TOL = 1e-10


class SpectralError(RuntimeError):
    """Eigenanalysis failed or violated a structural expectation."""


class DegenerateSpectrumError(SpectralError):
    """More than one eigenvalue is numerically zero."""

    def __init__(self, n_zero):
        super().__init__(f"{n_zero} near-zero eigenvalues; steady state not unique")
        self.n_zero = n_zero


class TracelessSlowModeError(SpectralError):
    """The orthogonalized slow mode has zero trace and cannot be normalized."""

    def __init__(self, chi):
        super().__init__(f"slow mode at {chi} is traceless after orthogonalization")
        self.chi = chi


class SingularRateError(ValueError):
    """Switching-rate formula undefined: initial state coincides with the
    steady state in the projection sense."""


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product Tr(a^dag b)."""
    return complex(np.vdot(a, b))


@dataclass
class LiouvillianSpectrum:
    """All eigenpairs of a Liouvillian, sorted by descending real part.

    ``right_vectors`` holds column-stacked right eigenvectors, one per
    column, in the same order as ``eigenvalues``.  The steady mode is
    normalized to unit trace, all others to unit Frobenius norm.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    dim: int
    steady_index: int

    def mode(self, i: int) -> np.ndarray:
        """Matricized right eigenvector number ``i``."""
        return unvec(self.right_vectors[:, i], self.dim)

    @cached_property
    def right_modes(self) -> list:
        return [self.mode(i) for i in range(self.eigenvalues.size)]

    @property
    def steady_state(self) -> np.ndarray:
        return self.mode(self.steady_index)

    @property
    def gap(self) -> float:
        """|Re chi| of the slowest nonzero mode."""
        mask = np.ones(self.eigenvalues.size, bool)
        mask[self.steady_index] = False
        return float(-np.max(self.eigenvalues[mask].real))


@dataclass(frozen=True)
class SlowMode:
    """Slowest decaying Liouvillian mode and its unit-trace companion.

    ``rho_tilde`` is the component of the eigenmatrix orthogonal to the
    steady state (Hilbert-Schmidt sense), rescaled to unit trace.
    """

    chi: complex
    rho_chi: np.ndarray
    rho_tilde: np.ndarray


def full_spectrum(L: Superoperator, validate: bool = True) -> LiouvillianSpectrum:
    """Dense eigendecomposition of the generator.

    Eigenvalues are sorted by descending real part (ties by ascending
    |Im|, then descending Im), so the steady mode comes first for a
    generic damped system.

    Raises
    ------
    DegenerateSpectrumError
        If the number of near-zero eigenvalues differs from one.
    SpectralError
        If any eigenvalue has a real part above the dissipativity
        tolerance (validate=True only).
    """
    d = L.dim
    if d * d > EIG_CAP:
        raise ResourceLimitError(f"d^2 = {d * d} exceeds eigensolver cap {EIG_CAP}")
    w, V = la.eig(L.matrix)
    order = np.lexsort((-w.imag, np.abs(w.imag), -w.real))
    w = w[order]
    V = V[:, order]
    n_zero = int(np.sum(np.abs(w) < ZERO_TOL))
    if n_zero != 1:
        raise DegenerateSpectrumError(n_zero)
    steady_index = int(np.argmin(np.abs(w)))
    if validate and np.max(w.real) > DISSIPATIVITY_TOL:
        raise SpectralError(f"eigenvalue with positive real part {np.max(w.real):.2e}")
    # unit trace for the steady mode, unit Frobenius norm for the rest
    for i in range(w.size):
        col = V[:, i]
        if i == steady_index:
            tr = np.sum(col[np.arange(d) * (d + 1)])
            V[:, i] = col / tr
        else:
            V[:, i] = col / np.linalg.norm(col)
    return LiouvillianSpectrum(w, V, d, steady_index)


def slow_mode(spectrum: LiouvillianSpectrum) -> SlowMode:
    """Slowest nonzero mode with its orthogonalized unit-trace companion.

    The mode is the nonzero eigenvalue with real part closest to zero;
    degenerate real parts are broken toward the largest |Im|.

    Raises
    ------
    TracelessSlowModeError
        If the orthogonalized mode is traceless (its overlap with the
        steady state vanishes), as happens for decoupled coherences.
    """
    w = spectrum.eigenvalues
    idx = [i for i in range(w.size) if i != spectrum.steady_index]
    idx.sort(key=lambda i: (-w[i].real, -abs(w[i].imag)))
    i_slow = idx[0]
    chi = complex(w[i_slow])
    rho_chi = spectrum.mode(i_slow)
    rho_s = spectrum.steady_state
    overlap = hs_inner(rho_s, rho_chi) / hs_inner(rho_s, rho_s)
    rho_tilde_raw = rho_chi - overlap * rho_s
    tr = complex(np.trace(rho_tilde_raw))
    if abs(tr) < 1e-12:
        raise TracelessSlowModeError(chi)
    return SlowMode(chi, rho_chi, rho_tilde_raw / tr)


def quantum_escape_rate(L: Superoperator, rho_s: np.ndarray,
                        rho0: np.ndarray) -> float:
    """Switching rate from the steady-state projection of the initial motion.

    rate = <rho_s, L[rho0]> / (1 - <rho_s, rho0> / <rho_s, rho_s>)

    evaluated at the initial state (typically vacuum).  Both inner
    products are real for Hermitian arguments; the real part is returned
    after checking that the imaginary residue is negligible.

    Raises
    ------
    SingularRateError
        If the denominator vanishes (rho0 projects onto the steady state
        with unit coefficient, e.g. rho0 = rho_s).
    """
    rho_s = np.asarray(rho_s, dtype=complex)
    rho0 = np.asarray(rho0, dtype=complex)
    num = hs_inner(rho_s, liouville.apply(L, rho0))
    denom = 1.0 - hs_inner(rho_s, rho0) / hs_inner(rho_s, rho_s)
    if abs(denom) < 1e-10:
        raise SingularRateError(
            "initial state coincides with the steady state; rate undefined")
    rate = num / denom
    if abs(rate.imag) > max(1e-8 * abs(rate), 1e-12):
        raise SpectralError(f"switching rate has imaginary residue {rate.imag:.2e}")
    return float(rate.real)
