"""Truncated Fock-space operator algebra.

Dense operators on a Fock space truncated to ``dim`` levels (occupations
0 .. dim-1), single-mode Kerr Hamiltonians, two-mode Hamiltonians with a
cross-Kerr interaction, and coherent states.  Everything is built from
plain complex numpy arrays; all dynamical quantities are dimensionless,
with rates measured in units of a reference decay rate and times in its
inverse.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

#: Hermiticity tolerance for Hamiltonian builders (max-norm of H - H^dag).
HERMITICITY_TOL = 1e-12

#: Largest tensor-product dimension accepted by two-mode builders.
PRODUCT_DIM_CAP = 400

#: Tail population (last 10% of Fock levels) above which a state is
#: flagged as inadequately truncated.
TAIL_TOL = 1e-6


class TruncationWarning(UserWarning):
    """Emitted when too much population sits in the top Fock levels."""


class ResourceLimitError(RuntimeError):
    """A requested computation exceeds a configured size cap."""


class DrivePhase(enum.Enum):
    """Phase convention for how the coherent drive enters the model.

    The three conventions describe the same physics up to a global phase
    of the oscillation amplitude; photon numbers are identical.

    MINUS_I_EPSILON
        Amplitude equation of motion contains ``-i*drive``; Hamiltonian
        drive term ``drive * a^dag + conj(drive) * a``.
    EPSILON_A_DAGGER
        Same Hamiltonian drive term, named for the Hamiltonian form.
    PLUS_EPSILON
        Amplitude equation of motion contains ``+drive``; Hamiltonian
        drive term ``i*drive * a^dag - i*conj(drive) * a``.
    """

    MINUS_I_EPSILON = "minus_i_epsilon"
    EPSILON_A_DAGGER = "epsilon_a_dagger"
    PLUS_EPSILON = "plus_epsilon"


@dataclass(frozen=True)
class ModeParams:
    """Dimensionless parameters of one driven, damped Kerr mode.

    Attributes
    ----------
    delta : float
        Detuning of the mode from the drive, bare frequency minus drive
        frequency, in units of the reference decay rate.
    kerr : float
        Kerr coefficient (photon-number-dependent frequency shift), >= 0.
    kappa : float
        Single-photon decay rate, > 0.
    drive : complex
        Drive amplitude.
    phase_convention : DrivePhase
        How the drive enters the equations of motion.
    """

    delta: float
    kerr: float
    kappa: float
    drive: complex
    phase_convention: DrivePhase = DrivePhase.MINUS_I_EPSILON

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.kerr < 0:
            raise ValueError(f"kerr must be non-negative, got {self.kerr}")

    @property
    def hamiltonian_drive(self) -> complex:
        """Drive amplitude as it multiplies a^dag in the Hamiltonian."""
        if self.phase_convention is DrivePhase.PLUS_EPSILON:
            return 1j * complex(self.drive)
        return complex(self.drive)

    @property
    def amplitude_drive(self) -> complex:
        """Drive term in the c-number amplitude equation of motion."""
        return -1j * self.hamiltonian_drive

    def with_drive(self, drive, phase_convention=None) -> "ModeParams":
        return ModeParams(self.delta, self.kerr, self.kappa, drive,
                          phase_convention or self.phase_convention)

    def with_delta(self, delta) -> "ModeParams":
        return ModeParams(delta, self.kerr, self.kappa, self.drive,
                          self.phase_convention)

    def with_convention(self, phase_convention) -> "ModeParams":
        return ModeParams(self.delta, self.kerr, self.kappa, self.drive,
                          phase_convention)


@dataclass(frozen=True)
class TwoModeParams:
    """Two Kerr modes coupled by a cross-Kerr interaction.

    ``cross_kerr`` multiplies ``-(n1 x n0)`` in the joint Hamiltonian.
    """

    mode0: ModeParams
    mode1: ModeParams
    cross_kerr: float

    def __post_init__(self):
        if self.cross_kerr < 0:
            raise ValueError("cross_kerr must be non-negative")


@dataclass(frozen=True)
class Ket:
    """State vector on the truncated Fock space.

    ``tail_weight`` is the population in the top 10% of Fock levels; a
    value above ``TAIL_TOL`` marks the truncation as inadequate.
    """

    amplitudes: np.ndarray
    tail_weight: float = 0.0

    @property
    def truncation_ok(self) -> bool:
        return self.tail_weight <= TAIL_TOL

    def __array__(self, dtype=None):
        return np.asarray(self.amplitudes, dtype=dtype)


def _check_dim(dim: int) -> int:
    dim = int(dim)
    if dim < 2:
        raise ValueError(f"Fock dimension must be >= 2, got {dim}")
    return dim


def annihilation(dim: int) -> np.ndarray:
    """Annihilation operator ``a`` with entries (n, n+1) = sqrt(n+1)."""
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1.0, dim)), k=1).astype(complex)


def creation(dim: int) -> np.ndarray:
    """Creation operator ``a^dag`` on the truncated space."""
    return annihilation(dim).conj().T


def number_op(dim: int) -> np.ndarray:
    """Photon-number operator ``a^dag a`` (diagonal 0 .. dim-1)."""
    dim = _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def fock(n: int, dim: int) -> np.ndarray:
    """Number state |n> as a length-``dim`` vector."""
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise ValueError(f"Fock index {n} outside 0..{dim - 1}")
    ket = np.zeros(dim, dtype=complex)
    ket[n] = 1.0
    return ket


def kerr_hamiltonian(p: ModeParams, dim: int) -> np.ndarray:
    """Single-mode Kerr Hamiltonian in the frame rotating with the drive.

    H = delta * n - kerr * n^2 + (eps * a^dag + conj(eps) * a), with the
    drive phase fixed by ``p.phase_convention``.  At zero drive the
    diagonal entries are exactly delta*n - kerr*n^2.
    """
    dim = _check_dim(dim)
    n = np.arange(dim, dtype=float)
    h = np.diag(p.delta * n - p.kerr * n**2).astype(complex)
    eps = p.hamiltonian_drive
    if eps != 0:
        a = annihilation(dim)
        h += eps * a.conj().T + np.conj(eps) * a
    return h


def two_mode_hamiltonian(p: TwoModeParams, dims: tuple[int, int]) -> np.ndarray:
    """Joint Hamiltonian of two Kerr modes with a cross-Kerr coupling.

    The tensor ordering is ``kron(mode1, mode0)``: mode 1 is the slow
    index.  The coupling term is ``-cross_kerr * kron(n1, n0)``.

    Parameters
    ----------
    p : TwoModeParams
    dims : (dim0, dim1)
        Truncation of mode 0 and mode 1 respectively.
    """
    d0, d1 = (_check_dim(d) for d in dims)
    if d0 * d1 > PRODUCT_DIM_CAP:
        raise ResourceLimitError(
            f"product dimension {d0 * d1} exceeds cap {PRODUCT_DIM_CAP}")
    h0 = kerr_hamiltonian(p.mode0, d0)
    h1 = kerr_hamiltonian(p.mode1, d1)
    i0 = np.eye(d0, dtype=complex)
    i1 = np.eye(d1, dtype=complex)
    h = np.kron(h1, i0) + np.kron(i1, h0)
    if p.cross_kerr != 0:
        h -= p.cross_kerr * np.kron(number_op(d1), number_op(d0))
    return h


def coherent_state(alpha: complex, dim: int) -> Ket:
    """Coherent state of amplitude ``alpha``, renormalized after truncation.

    Amplitudes are proportional to alpha^n / sqrt(n!).  The returned
    ``Ket`` carries the tail weight of the top 10% of levels; a
    ``TruncationWarning`` is emitted when it exceeds ``TAIL_TOL``.
    """
    dim = _check_dim(dim)
    if abs(alpha) ** 2 > dim / 2:
        warnings.warn(
            f"|alpha|^2 = {abs(alpha)**2:.1f} exceeds dim/2 = {dim / 2}; "
            "truncation is likely inadequate", TruncationWarning, stacklevel=2)
    if alpha == 0:
        return Ket(fock(0, dim), 0.0)
    n = np.arange(dim)
    # log-space to avoid overflow in alpha^n / sqrt(n!) for large dim
    log_mag = n * np.log(abs(alpha)) - 0.5 * np.cumsum(np.log(np.maximum(n, 1)))
    phase = np.exp(1j * np.angle(alpha) * n)
    amps = np.exp(log_mag) * phase
    amps /= np.linalg.norm(amps)
    tail = tail_population(amps)
    if tail > TAIL_TOL:
        warnings.warn(
            f"coherent state tail population {tail:.2e} above {TAIL_TOL:.0e}",
            TruncationWarning, stacklevel=2)
    return Ket(amps, tail)


def tail_population(state: np.ndarray) -> float:
    """Population in the top 10% of Fock levels of a ket or density matrix."""
    state = np.asarray(state)
    d = state.shape[0]
    cut = max(d - max(d // 10, 1), 1)
    if state.ndim == 1:
        return float(np.sum(np.abs(state[cut:]) ** 2))
    return float(np.real(np.trace(state[cut:, cut:])))


def projector(ket) -> np.ndarray:
    """Density matrix |psi><psi| from a ket."""
    v = np.asarray(ket, dtype=complex)
    return np.outer(v, v.conj())


def expect(op: np.ndarray, state: np.ndarray) -> complex:
    """Expectation value of ``op`` in a ket or density matrix."""
    state = np.asarray(state)
    if state.ndim == 1:
        return complex(state.conj() @ op @ state)
    return complex(np.trace(op @ state))


def is_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) < tol)
