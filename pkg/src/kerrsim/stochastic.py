"""Stochastic simulators for driven Kerr modes.

Two independent engines:

* semi-classical Langevin trajectories of the complex amplitude, driven
  by vacuum noise of strength sqrt(kappa), integrated with
  Euler-Maruyama;
* the two-mode stochastic master equation for heterodyne detection of
  the low-frequency (probe) mode, with the pumped Kerr mode coupled
  through a cross-Kerr term.  The conditional density matrix is stepped
  with an Euler-Maruyama scheme whose stiff diagonal part (detunings,
  Kerr shifts, damping anticommutators) is applied as an exact
  integrating factor; the trace is renormalized every step.

Randomness is counter-based: every trajectory derives an independent
stream from a (seed, stream_index) key, so results never depend on
scheduling or chunking.  Identical (seed, dt, parameters) reproduce a
trajectory bitwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .hilbert import PRODUCT_DIM_CAP, ModeParams, ResourceLimitError, TwoModeParams
from .liouville import EvolutionResult, RelaxationFit, fit_relaxation
from .metapotential import DivergenceError, flow_rhs

#: Default Euler-Maruyama step for the amplitude Langevin equation.
DT_SEMICLASSICAL = 1e-3

#: Default step for the heterodyne stochastic master equation.
DT_SME = 5e-4

#: Steps per recorded transmitted-power bin.
RECORD_BIN = 100

#: |alpha|^2 divergence guard for trajectories.
DIVERGENCE_GUARD = 1e4

#: Default probe drive in units of the probe linewidth; weak enough that
#: the probe photon number stays below one, strong enough that the
#: coherent probe power stands out of the record's white-noise floor.
PROBE_DRIVE_FRACTION = 0.25


@dataclass(frozen=True)
class NoisePath:
    """Deterministic complex Wiener increments dW_a + i dW_b.

    Each quadrature increment has variance dt; the path is a pure
    function of (seed, dt, length).
    """

    seed: int
    dt: float
    increments: np.ndarray


@dataclass(frozen=True)
class SemiclassicalTrajectory:
    times: np.ndarray
    alphas: np.ndarray
    seed: int


@dataclass
class HeterodyneRun:
    """One conditional-evolution record of the two-mode probe setup.

    ``power_signal`` holds the transmitted power averaged over
    consecutive bins of ``record_bin`` steps; ``times`` marks bin ends.
    ``record`` is the dZ increment path actually consumed by the state
    update.
    """

    times: np.ndarray
    power_signal: np.ndarray
    record: np.ndarray | None
    conditional_states: list | None
    final_state: np.ndarray
    seed: int
    dt: float


@dataclass(frozen=True)
class LineshapePoint:
    """Probe response at one pump detuning."""

    pump_detuning: float
    probe_detuning_at_max: float
    frequency_shift: float
    averaged_power: float
    probe_detunings: np.ndarray = field(repr=False, default=None)
    probe_powers: np.ndarray = field(repr=False, default=None)


def trajectory_key(seed: int, index: int) -> np.ndarray:
    """128-bit counter-based key selecting an independent stream."""
    return np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
                     np.uint64(index & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64)


def _generator(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=trajectory_key(seed, index)))


def noise_path(seed: int, dt: float, length: int) -> NoisePath:
    """Complex Gaussian increment path with Var(dW_a) = Var(dW_b) = dt."""
    raw = _generator(seed).standard_normal((length, 2))
    inc = math.sqrt(dt) * (raw[:, 0] + 1j * raw[:, 1])
    return NoisePath(seed, dt, inc)


# ---------------------------------------------------------------------------
# semi-classical trajectories
# ---------------------------------------------------------------------------

def semiclassical_step(alpha: complex, p: ModeParams, dW: complex,
                       dt: float) -> complex:
    """One Euler-Maruyama update of the amplitude Langevin equation.

    ``dW`` is the raw complex increment dW_a + i dW_b (variance dt per
    quadrature); the vacuum-fluctuation normalization divides it by
    sqrt(2) before scaling with sqrt(kappa).
    """
    if abs(alpha) ** 2 > DIVERGENCE_GUARD:
        raise DivergenceError(f"|alpha|^2 = {abs(alpha)**2:.3e} over guard")
    return (alpha + dt * flow_rhs(alpha, p)
            + math.sqrt(p.kappa) * dW / math.sqrt(2))


def semiclassical_ensemble(p: ModeParams, n_traj: int, t_max: float,
                           seed0: int, dt: float = DT_SEMICLASSICAL,
                           alpha0: complex = 0.0, sample_every: int = None,
                           noise_scale: float = 1.0, index0: int = 0):
    """Vectorized Euler-Maruyama ensemble of amplitude trajectories.

    Trajectory ``i`` consumes the stream keyed by (seed0, index0 + i).
    Returns (times, alphas) with ``alphas`` of shape (n_traj,
    n_samples); the first sample is the initial condition.
    ``noise_scale`` rescales the vacuum noise (0 gives the deterministic
    ring-down).
    """
    n_steps = int(round(t_max / dt))
    if n_steps < 1:
        raise ValueError("t_max shorter than one step")
    if sample_every is None:
        sample_every = max(1, n_steps // 1000)
    n_samples = n_steps // sample_every + 1
    alphas = np.empty((n_traj, n_samples), dtype=complex)
    alpha = np.full(n_traj, complex(alpha0), dtype=complex)
    alphas[:, 0] = alpha
    gens = [_generator(seed0, index0 + i) for i in range(n_traj)]
    coef_lin = -1j * p.delta - p.kappa / 2
    two_i_kerr = 2j * p.kerr
    drive = p.amplitude_drive
    noise_amp = math.sqrt(p.kappa) / math.sqrt(2) * noise_scale
    chunk = 2000
    done = 0
    sample_idx = 1
    while done < n_steps:
        n_c = min(chunk, n_steps - done)
        noise = np.empty((n_c, n_traj), dtype=complex)
        for i, g in enumerate(gens):
            raw = g.standard_normal((n_c, 2))
            noise[:, i] = raw[:, 0] + 1j * raw[:, 1]
        noise *= math.sqrt(dt)
        for k in range(n_c):
            alpha = (alpha
                     + dt * (coef_lin * alpha
                             + two_i_kerr * np.abs(alpha) ** 2 * alpha
                             + drive)
                     + noise_amp * noise[k])
            done += 1
            if done % sample_every == 0 and sample_idx < n_samples:
                alphas[:, sample_idx] = alpha
                sample_idx += 1
        if np.max(np.abs(alpha)) ** 2 > DIVERGENCE_GUARD:
            raise DivergenceError("ensemble trajectory diverged")
    times = np.arange(sample_idx) * (sample_every * dt)
    return times, alphas[:, :sample_idx]


def semiclassical_trajectory(p: ModeParams, t_max: float, seed: int,
                             dt: float = DT_SEMICLASSICAL,
                             alpha0: complex = 0.0,
                             sample_every: int = None,
                             index: int = 0) -> SemiclassicalTrajectory:
    """Single noise realization; shares the ensemble code path."""
    times, alphas = semiclassical_ensemble(
        p, 1, t_max, seed, dt=dt, alpha0=alpha0, sample_every=sample_every,
        index0=index)
    return SemiclassicalTrajectory(times, alphas[0], seed)


def escape_first_passage_times(p: ModeParams, n_traj: int, t_max: float,
                               seed0: int, dt: float = DT_SEMICLASSICAL,
                               sample_every: int = 10):
    """First-passage times from the low-amplitude well over the saddle.

    Each trajectory starts at the low stable amplitude; the event time
    is the first crossing of the unstable photon number that goes on to
    reach the high branch mean (committed escape).  Censored
    trajectories (no committed escape by ``t_max``) are dropped.
    Requires the bistable regime.
    """
    from .metapotential import classical_fixed_points
    fps = classical_fixed_points(p)
    n_u = fps.unstable.photon_number
    n_hi = fps.stable_high.photon_number
    alpha0 = fps.stable_low.alpha
    times, alphas = semiclassical_ensemble(p, n_traj, t_max, seed0, dt=dt,
                                           alpha0=alpha0,
                                           sample_every=sample_every)
    photon = np.abs(alphas) ** 2
    out = []
    for i in range(n_traj):
        pending = None
        for t, v in zip(times, photon[i]):
            if pending is None:
                if v > n_u:
                    pending = t
            elif v < n_u:
                pending = None
            if pending is not None and v >= n_hi:
                out.append(pending)
                break
    return np.asarray(out)


def ensemble_relaxation(p: ModeParams, n_traj: int, t_max: float, seed0: int,
                        dt: float = DT_SEMICLASSICAL,
                        transient_cut: float = 5.0,
                        alpha0: complex = 0.0,
                        noise_scale: float = 1.0) -> RelaxationFit:
    """Exponential relaxation time of the ensemble-averaged photon number.

    Averages |alpha(t)|^2 over ``n_traj`` independent trajectories and
    fits the tail exponential past ``transient_cut``.
    """
    if n_traj < 50:
        raise ValueError(f"need at least 50 trajectories, got {n_traj}")
    times, alphas = semiclassical_ensemble(p, n_traj, t_max, seed0, dt=dt,
                                           alpha0=alpha0,
                                           noise_scale=noise_scale)
    nbar = np.mean(np.abs(alphas) ** 2, axis=0)
    return fit_relaxation(EvolutionResult(times, None, nbar), transient_cut)


def switching_dwell_times(times: np.ndarray, photon: np.ndarray,
                          n_unstable: float, n_low: float, n_high: float):
    """Dwell times in each branch between committed switches.

    The state flips at crossings of ``n_unstable``; a flip is committed
    only once the trajectory actually reaches the opposite branch mean,
    suppressing diffusive re-crossing chatter at the saddle.  Event
    times are the initial threshold crossings.  Returns
    (low_dwells, high_dwells); unfinished dwells are dropped.
    """
    up_commit = n_high
    down_commit = n_low
    state = 0 if photon[0] < n_unstable else 1
    last_switch = None
    low_dwells, high_dwells = [], []
    pending = None
    for t, n in zip(times, photon):
        if state == 0:
            if pending is None:
                if n > n_unstable:
                    pending = t
            elif n < n_unstable:
                pending = None
            if pending is not None and n >= up_commit:
                if last_switch is not None:
                    low_dwells.append(pending - last_switch)
                last_switch = pending
                state, pending = 1, None
        else:
            if pending is None:
                if n < n_unstable:
                    pending = t
            elif n > n_unstable:
                pending = None
            if pending is not None and n <= down_commit:
                if last_switch is not None:
                    high_dwells.append(pending - last_switch)
                last_switch = pending
                state, pending = 0, None
    return np.asarray(low_dwells), np.asarray(high_dwells)


# ---------------------------------------------------------------------------
# heterodyne stochastic master equation
# ---------------------------------------------------------------------------

@njit(cache=True, fastmath=True)
def _sme_gather(rr, ri, s0, out):
    """Per-lane trace and Tr(a0 rho) of the padded batch state.

    out: (3, B) receiving [trace, Re Tr(a0 rho), Im Tr(a0 rho)].
    """
    P1, P0, B = rr.shape[0], rr.shape[1], rr.shape[4]
    for b in range(B):
        out[0, b] = 0.0
        out[1, b] = 0.0
        out[2, b] = 0.0
    for n1 in range(1, P1 - 1):
        for n0 in range(1, P0 - 1):
            w = s0[n0 + 1]
            for b in range(B):
                out[0, b] += rr[n1, n0, n1, n0, b]
                out[1, b] += w * rr[n1, n0 + 1, n1, n0, b]
                out[2, b] += w * ri[n1, n0 + 1, n1, n0, b]


@njit(cache=True, fastmath=True)
def _sme_step(rr, ri, outr, outi, edr, edi, s1, s0, w1, w0,
              cr, ci, base, scale, k1dt, k0dt):
    """One Euler step with exact diagonal factor, batched over lanes.

    rr/ri -> outr/outi, padded shape (P1, P0, P1, P0, B).
    cr/ci: (8, B) stencil coefficients; base: (B,) identity coefficient
    (1 - measurement trace term); scale: (B,) normalization applied at
    write time.
    """
    P1, P0, B = rr.shape[0], rr.shape[1], rr.shape[4]
    for n1 in range(1, P1 - 1):
        for n0 in range(1, P0 - 1):
            for m1 in range(1, P1 - 1):
                for m0 in range(1, P0 - 1):
                    w_0 = s1[n1]
                    w_1 = s1[n1 + 1]
                    w_2 = s1[m1 + 1]
                    w_3 = s1[m1]
                    w_4 = s0[n0]
                    w_5 = s0[n0 + 1]
                    w_6 = s0[m0 + 1]
                    w_7 = s0[m0]
                    w_8 = k1dt * w1[n1, m1]
                    w_9 = k0dt * w0[n0, m0]
                    er = edr[n1, n0, m1, m0]
                    ei = edi[n1, n0, m1, m0]
                    for b in range(B):
                        ar = base[b] * rr[n1, n0, m1, m0, b]
                        ai = base[b] * ri[n1, n0, m1, m0, b]
                        xr = rr[n1 - 1, n0, m1, m0, b]
                        xi = ri[n1 - 1, n0, m1, m0, b]
                        ar += w_0 * (cr[0, b] * xr - ci[0, b] * xi)
                        ai += w_0 * (cr[0, b] * xi + ci[0, b] * xr)
                        xr = rr[n1 + 1, n0, m1, m0, b]
                        xi = ri[n1 + 1, n0, m1, m0, b]
                        ar += w_1 * (cr[1, b] * xr - ci[1, b] * xi)
                        ai += w_1 * (cr[1, b] * xi + ci[1, b] * xr)
                        xr = rr[n1, n0, m1 + 1, m0, b]
                        xi = ri[n1, n0, m1 + 1, m0, b]
                        ar += w_2 * (cr[2, b] * xr - ci[2, b] * xi)
                        ai += w_2 * (cr[2, b] * xi + ci[2, b] * xr)
                        xr = rr[n1, n0, m1 - 1, m0, b]
                        xi = ri[n1, n0, m1 - 1, m0, b]
                        ar += w_3 * (cr[3, b] * xr - ci[3, b] * xi)
                        ai += w_3 * (cr[3, b] * xi + ci[3, b] * xr)
                        xr = rr[n1, n0 - 1, m1, m0, b]
                        xi = ri[n1, n0 - 1, m1, m0, b]
                        ar += w_4 * (cr[4, b] * xr - ci[4, b] * xi)
                        ai += w_4 * (cr[4, b] * xi + ci[4, b] * xr)
                        xr = rr[n1, n0 + 1, m1, m0, b]
                        xi = ri[n1, n0 + 1, m1, m0, b]
                        ar += w_5 * (cr[5, b] * xr - ci[5, b] * xi)
                        ai += w_5 * (cr[5, b] * xi + ci[5, b] * xr)
                        xr = rr[n1, n0, m1, m0 + 1, b]
                        xi = ri[n1, n0, m1, m0 + 1, b]
                        ar += w_6 * (cr[6, b] * xr - ci[6, b] * xi)
                        ai += w_6 * (cr[6, b] * xi + ci[6, b] * xr)
                        xr = rr[n1, n0, m1, m0 - 1, b]
                        xi = ri[n1, n0, m1, m0 - 1, b]
                        ar += w_7 * (cr[7, b] * xr - ci[7, b] * xi)
                        ai += w_7 * (cr[7, b] * xi + ci[7, b] * xr)
                        ar += w_8 * rr[n1 + 1, n0, m1 + 1, m0, b]
                        ai += w_8 * ri[n1 + 1, n0, m1 + 1, m0, b]
                        ar += w_9 * rr[n1, n0 + 1, m1, m0 + 1, b]
                        ai += w_9 * ri[n1, n0 + 1, m1, m0 + 1, b]
                        outr[n1, n0, m1, m0, b] = scale[b] * (ar * er - ai * ei)
                        outi[n1, n0, m1, m0, b] = scale[b] * (ar * ei + ai * er)


class _SmeSystem:
    """Precomputed arrays for one two-mode SME configuration."""

    def __init__(self, p: TwoModeParams, dims, dt,
                 dz_normalization: str = "unit"):
        d0, d1 = int(dims[0]), int(dims[1])
        if d0 * d1 > PRODUCT_DIM_CAP:
            raise ResourceLimitError(
                f"product dimension {d0 * d1} exceeds cap {PRODUCT_DIM_CAP}")
        self.p, self.dt = p, float(dt)
        self.d0, self.d1 = d0, d1
        P0, P1 = d0 + 2, d1 + 2
        self.P0, self.P1 = P0, P1
        n1 = np.arange(d1)
        n0 = np.arange(d0)
        e1 = p.mode1.delta * n1 - p.mode1.kerr * n1.astype(float) ** 2
        e0 = p.mode0.delta * n0 - p.mode0.kerr * n0.astype(float) ** 2
        energy = (e1[:, None] + e0[None, :]
                  - p.cross_kerr * n1[:, None] * n0[None, :])
        damp = 0.5 * (p.mode1.kappa * n1[:, None]
                      + p.mode0.kappa * n0[None, :])
        ed = np.zeros((P1, P0, P1, P0), dtype=complex)
        arg = (-1j * (energy[:, :, None, None] - energy[None, None, :, :])
               - damp[:, :, None, None] - damp[None, None, :, :])
        ed[1:d1 + 1, 1:d0 + 1, 1:d1 + 1, 1:d0 + 1] = np.exp(arg * dt)
        self.ed_r = np.ascontiguousarray(ed.real)
        self.ed_i = np.ascontiguousarray(ed.imag)
        # s[k] = sqrt(k - 1): ladder weight at padded index k
        self.s1 = np.sqrt(np.maximum(np.arange(P1 + 1) - 1, 0).astype(float))
        self.s0 = np.sqrt(np.maximum(np.arange(P0 + 1) - 1, 0).astype(float))
        # sandwich weights sqrt(q_n + 1) sqrt(q_m + 1) at padded (n, m)
        w1 = np.zeros((P1, P1))
        w1[1:d1 + 1, 1:d1 + 1] = np.sqrt(
            np.arange(1.0, d1 + 1))[:, None] * np.sqrt(np.arange(1.0, d1 + 1))
        w0 = np.zeros((P0, P0))
        w0[1:d0 + 1, 1:d0 + 1] = np.sqrt(
            np.arange(1.0, d0 + 1))[:, None] * np.sqrt(np.arange(1.0, d0 + 1))
        self.w1, self.w0 = w1, w0
        eps1 = p.mode1.hamiltonian_drive
        eps0 = p.mode0.hamiltonian_drive
        self.drive_coeffs = np.array(
            [-1j * dt * eps1, -1j * dt * np.conj(eps1),
             1j * dt * eps1, 1j * dt * np.conj(eps1),
             -1j * dt * eps0, -1j * dt * np.conj(eps0),
             1j * dt * eps0, 1j * dt * np.conj(eps0)], dtype=complex)
        self.sqk0 = math.sqrt(p.mode0.kappa)
        self.k1dt = p.mode1.kappa * dt
        self.k0dt = p.mode0.kappa * dt
        if dz_normalization == "unit":
            self.dz_scale = 1.0
        elif dz_normalization == "sqrt2":
            self.dz_scale = 1.0 / math.sqrt(2)
        else:
            raise ValueError(f"unknown dz normalization {dz_normalization!r}")

    def initial_state(self, batch: int, rho0=None):
        shape = (self.P1, self.P0, self.P1, self.P0, batch)
        rr = np.zeros(shape)
        ri = np.zeros(shape)
        if rho0 is None:
            rr[1, 1, 1, 1, :] = 1.0
        else:
            rho0 = np.asarray(rho0, dtype=complex).reshape(
                self.d1, self.d0, self.d1, self.d0)
            rr[1:self.d1 + 1, 1:self.d0 + 1, 1:self.d1 + 1, 1:self.d0 + 1, :] \
                = rho0.real[..., None]
            ri[1:self.d1 + 1, 1:self.d0 + 1, 1:self.d1 + 1, 1:self.d0 + 1, :] \
                = rho0.imag[..., None]
        return rr, ri

    def extract(self, rr, ri, lane: int) -> np.ndarray:
        d1, d0 = self.d1, self.d0
        rho = (rr[1:d1 + 1, 1:d0 + 1, 1:d1 + 1, 1:d0 + 1, lane]
               + 1j * ri[1:d1 + 1, 1:d0 + 1, 1:d1 + 1, 1:d0 + 1, lane])
        rho = np.ascontiguousarray(rho).reshape(d1 * d0, d1 * d0)
        rho = 0.5 * (rho + rho.conj().T)
        return rho / np.trace(rho).real


def _run_sme_batch(sys_: _SmeSystem, n_steps: int, gens, record_bin: int,
                   rho0=None, keep_record=False, store_states_every=0):
    """Advance a batch of realizations; returns per-lane binned power.

    ``store_states_every`` counts bins between stored conditional
    states (lane 0 only).
    """
    B = len(gens)
    rr, ri = sys_.initial_state(B, rho0)
    outr = np.zeros_like(rr)
    outi = np.zeros_like(ri)
    n_bins = n_steps // record_bin
    power = np.zeros((n_bins, B))
    record = np.empty((n_steps, B), dtype=complex) if keep_record else None
    states = [] if store_states_every else None
    gath = np.empty((3, B))
    dc = sys_.drive_coeffs
    cr = np.empty((8, B))
    ci = np.empty((8, B))
    cr[:] = dc.real[:, None]
    ci[:] = dc.imag[:, None]
    sqdt = math.sqrt(sys_.dt)
    sqk0 = sys_.sqk0
    cur = (rr, ri)
    dst = (outr, outi)
    step = 0
    for b_idx in range(n_bins):
        raw = np.stack([g.standard_normal((record_bin, 2)) for g in gens],
                       axis=2) * sqdt  # (steps, 2, B)
        xs = np.zeros(B)
        ys = np.zeros(B)
        was = raw[:, 0, :].sum(axis=0)
        wbs = raw[:, 1, :].sum(axis=0)
        for k in range(record_bin):
            dwa = raw[k, 0]
            dwb = raw[k, 1]
            _sme_gather(cur[0], cur[1], sys_.s0, gath)
            tr, t0r, t0i = gath[0], gath[1] / gath[0], gath[2] / gath[0]
            xs += sqk0 * 2.0 * t0r
            ys += -sqk0 * 2.0 * t0i
            dzr = sys_.dz_scale * dwa
            dzi = sys_.dz_scale * dwb
            base = 1.0 - sqk0 * 2.0 * (dzr * t0r - dzi * t0i)
            cr[5] = dc[5].real + sqk0 * dzr
            ci[5] = dc[5].imag + sqk0 * dzi
            cr[6] = dc[6].real + sqk0 * dzr
            ci[6] = dc[6].imag - sqk0 * dzi
            if keep_record:
                record[step] = dzr + 1j * dzi
            _sme_step(cur[0], cur[1], dst[0], dst[1], sys_.ed_r, sys_.ed_i,
                      sys_.s1, sys_.s0, sys_.w1, sys_.w0, cr, ci, base,
                      1.0 / tr, sys_.k1dt, sys_.k0dt)
            cur, dst = dst, cur
            step += 1
        span = record_bin * sys_.dt
        power[b_idx] = 0.5 * (xs / record_bin + was / span) ** 2 \
            + 0.5 * (ys / record_bin + wbs / span) ** 2
        if store_states_every and (b_idx + 1) % store_states_every == 0:
            states.append(sys_.extract(cur[0], cur[1], 0))
    return power, record, states, cur


def heterodyne_sme_run(p: TwoModeParams, dims, dt, t_total, seed,
                       rho0=None, store_states_every: int = 0,
                       record_bin: int = RECORD_BIN,
                       dz_normalization: str = "unit",
                       keep_record: bool = True,
                       stream_index: int = 0) -> HeterodyneRun:
    """Propagate the conditional two-mode state under heterodyne monitoring.

    Parameters
    ----------
    p : TwoModeParams
        Mode 0 is the monitored probe, mode 1 the pumped Kerr mode.
    dims : (d0, d1)
        Fock truncations of probe and pump modes.
    dt, t_total : float
        Step and total duration.
    seed, stream_index : int
        Counter-based stream key; identical values reproduce the run
        bitwise.
    rho0 : ndarray, optional
        Initial joint density matrix (mode1 x mode0 ordering); vacuum by
        default.
    store_states_every : int
        If positive, keep the conditional state every that many bins.
    record_bin : int
        Steps per transmitted-power bin; an undriven vacuum run averages
        to the noise floor 1 / (record_bin * dt) per bin.
    dz_normalization : {"unit", "sqrt2"}
        dZ = dW_a + i dW_b, or the same divided by sqrt(2).  The power
        record always uses the raw quadrature increments.
    """
    sys_ = _SmeSystem(p, dims, dt, dz_normalization)
    n_steps = int(round(t_total / dt))
    if n_steps < record_bin:
        raise ValueError("t_total shorter than one record bin")
    gens = [_generator(seed, stream_index)]
    power, record, states, cur = _run_sme_batch(
        sys_, n_steps, gens, record_bin, rho0=rho0, keep_record=keep_record,
        store_states_every=store_states_every)
    n_bins = n_steps // record_bin
    times = (np.arange(n_bins) + 1) * (record_bin * dt)
    return HeterodyneRun(times, power[:, 0],
                         record[:, 0] if keep_record else None,
                         states, sys_.extract(cur[0], cur[1], 0), seed, dt)


def pump_photon_expectation(state: np.ndarray, dims) -> float:
    """Tr(rho n1) for a joint state in mode1 x mode0 ordering."""
    d0, d1 = dims
    rho = np.asarray(state).reshape(d1, d0, d1, d0)
    pops = np.einsum("abab->a", rho).real
    return float(np.arange(d1) @ pops)


def probe_photon_expectation(state: np.ndarray, dims) -> float:
    """Tr(rho n0) for a joint state in mode1 x mode0 ordering."""
    d0, d1 = dims
    rho = np.asarray(state).reshape(d1, d0, d1, d0)
    pops = np.einsum("abab->b", rho).real
    return float(np.arange(d0) @ pops)


def _scan_point(args):
    (p_base, pump, probe, dims, dt, t_m, n_avg, seed, run_offset,
     record_bin, dz_normalization, batch) = args
    p = TwoModeParams(
        p_base.mode0.with_delta(probe),
        p_base.mode1.with_delta(pump),
        p_base.cross_kerr)
    sys_ = _SmeSystem(p, dims, dt, dz_normalization)
    n_steps = int(round(t_m / dt))
    total = 0.0
    done = 0
    while done < n_avg:
        n_b = min(batch, n_avg - done)
        gens = [_generator(seed, run_offset + done + i) for i in range(n_b)]
        power, *_ = _run_sme_batch(sys_, n_steps, gens, record_bin)
        total += float(np.sum(np.mean(power, axis=0)))
        done += n_b
    return total / n_avg


def lineshape_scan(p_base: TwoModeParams, pump_grid, probe_grid, t_m,
                   n_avg, seed, dims=(6, 30), dt=DT_SME,
                   record_bin: int = RECORD_BIN,
                   dz_normalization: str = "unit",
                   workers: int = 1, batch: int = 25):
    """Frequency shift of the probe resonance versus pump detuning.

    For each pump detuning, runs ``n_avg`` conditional evolutions per
    probe detuning, time-averages the transmitted power over ``t_m``,
    averages over realizations, and reports the probe detuning
    maximizing the signal; the frequency shift is its negative.

    ``probe_grid`` is either one array used at every pump point or a
    sequence of arrays, one per pump detuning (e.g. centered on a
    predicted shift).  Work is distributed over processes by
    (pump, probe) point; realization streams are keyed by a global run
    counter, so results are independent of scheduling.
    """
    pump_grid = np.atleast_1d(np.asarray(pump_grid, dtype=float))
    if pump_grid.size == 0:
        raise ValueError("pump grid must be non-empty")
    if np.ndim(probe_grid[0]) == 0:
        probe_grids = [np.asarray(probe_grid, dtype=float)] * pump_grid.size
    else:
        probe_grids = [np.asarray(g, dtype=float) for g in probe_grid]
    if any(g.size == 0 for g in probe_grids):
        raise ValueError("probe grids must be non-empty")
    if t_m <= 10 * dt:
        raise ValueError("measurement window must exceed 10 steps")
    tasks = []
    run_offset = 0
    for ip, pump in enumerate(pump_grid):
        for probe in probe_grids[ip]:
            tasks.append((p_base, float(pump), float(probe), dims, dt, t_m,
                          n_avg, seed, run_offset, record_bin,
                          dz_normalization, batch))
            run_offset += n_avg
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            powers = list(pool.map(_scan_point, tasks, chunksize=1))
    else:
        powers = [_scan_point(t) for t in tasks]
    points = []
    k = 0
    for ip, pump in enumerate(pump_grid):
        grid = probe_grids[ip]
        vals = np.array(powers[k:k + grid.size])
        k += grid.size
        imax = int(np.argmax(vals))
        points.append(LineshapePoint(float(pump), float(grid[imax]),
                                     -float(grid[imax]), float(vals[imax]),
                                     grid, vals))
    return points


def drive_from_db(power_db: float, eps_0db: float) -> float:
    """Drive amplitude for a pump power quoted in dB above the reference."""
    return eps_0db * 10.0 ** (power_db / 20.0)
