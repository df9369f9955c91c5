"""Lindblad master-equation engine.

Builds the dense Liouvillian superoperator under a fixed column-stacking
convention, solves for the steady state, propagates density matrices in
time, and extracts relaxation time constants from photon-number decays.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from . import hilbert
from .hilbert import ResourceLimitError

#: Largest d**2 for which a dense superoperator matrix is assembled.
SUPEROP_CAP = 8100

#: Largest d**2 passed to the dense eigensolver in the evolution fast path.
SPECTRAL_CAP = 4096

#: Max-norm tolerance on the steady-state residual L[rho_s].
STEADY_RESIDUAL_TOL = 1e-10


class DegenerateSteadyStateError(RuntimeError):
    """The Liouvillian null space is not one-dimensional."""

    def __init__(self, null_dim):
        super().__init__(f"steady state is degenerate: null space dimension {null_dim}")
        self.null_dim = null_dim


class SteadyStateError(RuntimeError):
    """Steady-state solve failed to meet its contract."""


class IntegrationError(RuntimeError):
    """Time propagation failed to meet the local error target."""


class UndefinedQError(ValueError):
    """Mandel Q is undefined for a state with zero photons."""


class RelaxationFitError(RuntimeError):
    """Exponential fit of a relaxation curve failed.

    Carries a ``diagnostics`` dict with the data summary that caused the
    failure.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class Superoperator:
    """Dense superoperator acting on column-stacked density matrices.

    ``matrix`` is d^2 x d^2 and acts on vec(rho) with vec stacking the
    columns of rho.  When the generating Hamiltonian and collapse
    operators are retained, time propagation can avoid the full matrix.
    """

    matrix: np.ndarray
    dim: int
    stacking: str = "column"
    hamiltonian: np.ndarray | None = None
    collapse: tuple | None = None


@dataclass
class EvolutionResult:
    """Time-evolved states and their photon numbers.

    ``states`` is None when state storage was switched off; ``times`` and
    ``photon_numbers`` always have equal lengths.
    """

    times: np.ndarray
    states: list | None
    photon_numbers: np.ndarray


@dataclass(frozen=True)
class RelaxationFit:
    """Result of fitting n(t) = n_ss + A * exp(-t/tau) past a transient."""

    tau: float
    n_ss: float
    amplitude: float
    transient_cut: float
    residual: float


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v).reshape((dim, dim), order="F")


def build_liouvillian(H: np.ndarray, collapse) -> Superoperator:
    """Assemble the Lindblad generator as a dense superoperator.

    L[rho] = -i[H, rho] + sum_j k_j (c_j rho c_j^dag
             - (c_j^dag c_j rho + rho c_j^dag c_j) / 2)

    Parameters
    ----------
    H : ndarray
        Hermitian Hamiltonian, d x d.
    collapse : sequence of (ndarray, float)
        Collapse operators with their non-negative rates.
    """
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    if H.shape != (d, d):
        raise ValueError("Hamiltonian must be square")
    if not hilbert.is_hermitian(H):
        raise ValueError("Hamiltonian is not Hermitian within tolerance")
    if d * d > SUPEROP_CAP:
        raise ResourceLimitError(
            f"superoperator dimension {d * d} exceeds cap {SUPEROP_CAP}")
    eye = np.eye(d, dtype=complex)
    L = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    ops = []
    for c, rate in collapse:
        c = np.asarray(c, dtype=complex)
        if c.shape != (d, d):
            raise ValueError("collapse operator dimension mismatch")
        if rate < 0:
            raise ValueError(f"collapse rate must be >= 0, got {rate}")
        cdc = c.conj().T @ c
        L += rate * (np.kron(c.conj(), c)
                     - 0.5 * np.kron(eye, cdc)
                     - 0.5 * np.kron(cdc.T, eye))
        ops.append((c, float(rate), cdc))
    return Superoperator(L, d, "column", H, tuple(ops))


def decaying_mode_liouvillian(p: hilbert.ModeParams, dim: int) -> Superoperator:
    """Liouvillian of a driven Kerr mode with single-photon decay."""
    H = hilbert.kerr_hamiltonian(p, dim)
    return build_liouvillian(H, [(hilbert.annihilation(dim), p.kappa)])


def apply(L: Superoperator, rho: np.ndarray) -> np.ndarray:
    """Apply the generator to a density matrix, returning d(rho)/dt."""
    if L.hamiltonian is not None:
        return _rhs_matrix(rho, L.hamiltonian, L.collapse)
    return unvec(L.matrix @ vec(rho), L.dim)


def _rhs_matrix(rho, H, collapse):
    out = -1j * (H @ rho - rho @ H)
    for c, rate, cdc in collapse:
        out += rate * (c @ rho @ c.conj().T - 0.5 * (cdc @ rho + rho @ cdc))
    return out


def _trace_row(d):
    row = np.zeros(d * d, dtype=complex)
    row[np.arange(d) * (d + 1)] = 1.0
    return row


def steady_state(L: Superoperator, validate: bool = True) -> np.ndarray:
    """Unique trace-one null vector of the generator.

    Solves the linear system with one row replaced by the trace
    constraint, applies one round of iterative refinement, and verifies
    the Lindblad residual, Hermiticity, and positivity of the result.

    Raises
    ------
    DegenerateSteadyStateError
        If the null space is (numerically) more than one-dimensional.
    SteadyStateError
        If the solution fails its contract checks.
    """
    d = L.dim
    M = L.matrix.copy()
    M[0, :] = _trace_row(d)
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0
    try:
        with np.errstate(all="ignore"):
            lu, piv = la.lu_factor(M)
            x = la.lu_solve((lu, piv), b)
            if np.all(np.isfinite(x)):
                x += la.lu_solve((lu, piv), b - M @ x)
    except (la.LinAlgError, ValueError):
        _diagnose_degeneracy(L)
        raise SteadyStateError("steady-state linear system is singular")
    if not np.all(np.isfinite(x)):
        _diagnose_degeneracy(L)
        raise SteadyStateError("steady-state linear system is singular")
    rho = unvec(x, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    if validate:
        residual = np.max(np.abs(apply(L, rho)))
        if not np.isfinite(residual) or residual > STEADY_RESIDUAL_TOL:
            _diagnose_degeneracy(L)
            raise SteadyStateError(
                f"steady-state residual {residual:.2e} above "
                f"{STEADY_RESIDUAL_TOL:.0e}")
        min_eig = la.eigvalsh(rho)[0]
        if min_eig < -1e-8:
            raise SteadyStateError(
                f"steady state not positive: min eigenvalue {min_eig:.2e}")
    return rho


def _diagnose_degeneracy(L):
    """Count near-zero singular values; raise if the null space is degenerate."""
    s = la.svdvals(L.matrix)
    tol = max(1e-10 * s[0], 1e-14)
    null_dim = int(np.sum(s < tol))
    if null_dim > 1:
        raise DegenerateSteadyStateError(null_dim)


def evolve(rho0: np.ndarray, L: Superoperator, times, method: str = "auto",
           store_states: bool = True, rtol: float = 1e-8) -> EvolutionResult:
    """Propagate a density matrix under d(rho)/dt = L[rho].

    Parameters
    ----------
    rho0 : ndarray
        Initial density matrix.
    L : Superoperator
    times : array_like
        Strictly increasing output times starting at >= 0.
    method : {"auto", "spectral", "dop853"}
        "spectral" reconstructs rho(t) from the dense eigendecomposition
        of the generator (exact in t); "dop853" uses an adaptive
        explicit Runge-Kutta integrator with relative local error
        ``rtol``.  "auto" prefers the spectral route when the matrix is
        small enough and falls back otherwise.
    store_states : bool
        Keep the full state at each output time (memory permitting).

    Each stored state is Hermitized and trace-renormalized, so trace
    drift never exceeds the integrator tolerance.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0:
        raise ValueError("times must be non-empty")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing and start at >= 0")
    rho0 = np.asarray(rho0, dtype=complex)
    d = L.dim
    if rho0.shape != (d, d):
        raise ValueError("initial state dimension mismatch")

    if method == "auto":
        method = "spectral" if d * d <= SPECTRAL_CAP else "dop853"
    if method == "spectral":
        result = _evolve_spectral(rho0, L, times, store_states)
        if result is not None:
            return result
        method = "dop853"  # ill-conditioned eigenbasis
    if method != "dop853":
        raise ValueError(f"unknown method {method!r}")
    return _evolve_ode(rho0, L, times, store_states, rtol)


def _evolve_spectral(rho0, L, times, store_states):
    d = L.dim
    w, V = la.eig(L.matrix)
    y0 = vec(rho0)
    try:
        # non-normal eigenbases are routinely ill-conditioned here; the
        # reconstruction residual below decides whether to trust them
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", la.LinAlgWarning)
            c = la.solve(V, y0)
    except la.LinAlgError:
        return None
    if np.linalg.norm(V @ c - y0) > 1e-8 * max(np.linalg.norm(y0), 1e-30):
        return None
    nvals = np.arange(d)
    diag_idx = nvals * (d + 1)
    mode_n = nvals @ V[diag_idx, :]        # Tr(rho_lambda * n) per mode
    mode_tr = np.sum(V[diag_idx, :], axis=0)
    states = [] if store_states else None
    photon = np.empty(times.size)
    for i, t in enumerate(times):
        amp = c * np.exp(w * t)
        tr = np.real(amp @ mode_tr)
        photon[i] = np.real(amp @ mode_n) / tr
        if store_states:
            rho = unvec(V @ amp, d)
            rho = 0.5 * (rho + rho.conj().T)
            rho /= np.trace(rho).real
            states.append(rho)
    return EvolutionResult(times, states, photon)


def _evolve_ode(rho0, L, times, store_states, rtol):
    d = L.dim
    nop = np.arange(d)
    if L.hamiltonian is not None:
        H, collapse = L.hamiltonian, L.collapse

        def rhs(t, y):
            return vec(_rhs_matrix(unvec(y, d), H, collapse))
    else:
        M = L.matrix

        def rhs(t, y):
            return M @ y

    y0 = vec(rho0)
    if times[-1] == 0:
        sol_y = y0[:, None]
    else:
        sol = solve_ivp(rhs, (0.0, times[-1]), y0, method="DOP853",
                        t_eval=times, rtol=rtol, atol=1e-12)
        if not sol.success:
            raise IntegrationError(f"time propagation failed: {sol.message}")
        sol_y = sol.y
    states = [] if store_states else None
    photon = np.empty(times.size)
    for i in range(times.size):
        rho = unvec(sol_y[:, i], d)
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-6:
            raise IntegrationError(f"trace drifted to {tr} at t={times[i]}")
        rho /= tr
        photon[i] = float(nop @ np.real(np.diag(rho)))
        if store_states:
            states.append(rho)
    return EvolutionResult(times, states, photon)


def photon_number(rho: np.ndarray) -> float:
    """Tr(rho * a^dag a) as a real number."""
    rho = np.asarray(rho)
    d = rho.shape[0]
    val = complex(np.sum(np.arange(d) * np.diag(rho)))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val)):
        raise ValueError(f"photon number has imaginary part {val.imag:.2e}")
    return float(val.real)


def mandel_q(rho: np.ndarray) -> float:
    """Mandel Q = (Var(n) - <n>) / <n>; negative means sub-Poissonian."""
    rho = np.asarray(rho)
    d = rho.shape[0]
    pops = np.real(np.diag(rho))
    n = np.arange(d)
    mean = float(pops @ n)
    if mean <= 1e-12:
        raise UndefinedQError("Mandel Q undefined: <n> = 0")
    var = float(pops @ n**2) - mean**2
    return (var - mean) / mean


def fit_relaxation(result: EvolutionResult, transient_cut: float = 5.0,
                   min_span_factor: float = 5.0) -> RelaxationFit:
    """Fit n(t) = n_ss + A exp(-t/tau) to a photon-number decay.

    Times before ``transient_cut`` are discarded (initial oscillatory
    stretch before the exponential tail).  The fitted window must span
    at least ``min_span_factor`` time constants, else the fit is
    rejected.

    Raises
    ------
    RelaxationFitError
        On divergence, a negative/ill-determined time constant, or an
        insufficient fitting window.  Diagnostics travel on the error.
    """
    t = np.asarray(result.times, dtype=float)
    n = np.asarray(result.photon_numbers, dtype=float)
    sel = t >= transient_cut
    if np.count_nonzero(sel) < 4:
        raise RelaxationFitError("fewer than 4 samples past transient_cut",
                                 {"n_samples": int(np.count_nonzero(sel))})
    t_fit, n_fit = t[sel], n[sel]
    span = t_fit[-1] - t_fit[0]
    n_ss0 = n_fit[-1]
    a0 = n_fit[0] - n_ss0

    def model(params, tt):
        n_ss, a, log_tau = params
        return n_ss + a * np.exp(-(tt - t_fit[0]) / np.exp(log_tau))

    best = None
    for tau0 in (span / 20, span / 5, span):
        p0 = np.array([n_ss0, a0 if a0 != 0 else 1e-3, np.log(tau0)])
        try:
            res = least_squares(lambda p: model(p, t_fit) - n_fit, p0,
                                method="lm", max_nfev=2000)
        except Exception:
            continue
        if best is None or res.cost < best.cost:
            best = res
    if best is None or not np.all(np.isfinite(best.x)):
        raise RelaxationFitError("exponential fit diverged",
                                 {"span": span, "n_range": (n_fit.min(), n_fit.max())})
    n_ss, a, log_tau = best.x
    tau = float(np.exp(log_tau))
    rms = float(np.sqrt(2 * best.cost / t_fit.size))
    if tau <= 0 or not np.isfinite(tau):
        raise RelaxationFitError("non-positive time constant",
                                 {"tau": tau, "span": span})
    if span < min_span_factor * tau:
        raise RelaxationFitError(
            f"window spans {span / tau:.1f} time constants "
            f"(< {min_span_factor})",
            {"tau": tau, "span": span, "n_ss": n_ss})
    # amplitude was referenced to t_fit[0]; convert to t=0 reference
    amp = float(a * np.exp(t_fit[0] / tau))
    return RelaxationFit(tau, float(n_ss), amp, transient_cut, rms)
