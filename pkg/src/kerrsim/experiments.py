"""Named experiment runners behind the command-line driver.

Each experiment maps a validated parameter mapping plus a sweep grid to
a list of CSV rows (dicts with a fixed column order).  Heavy sweeps
parallelize over grid points with processes; stochastic experiments
derive every random stream from counter-based keys, so results are
independent of the worker count.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import scipy.linalg as la

from . import circuit, liouville, metapotential, spectral, stochastic
from .hilbert import DrivePhase, ModeParams, TwoModeParams, fock, projector
from .liouville import EvolutionResult, decaying_mode_liouvillian

#: Upper bound for adaptive relaxation windows (units 1/kappa_ref).
T_MAX_CAP = 4e4


class PointFailure(RuntimeError):
    """A sweep point failed; carries the original error message."""


def _mode(params, delta=None):
    conv = DrivePhase(params.get("phase_convention", "minus_i_epsilon"))
    return ModeParams(
        delta=float(params["delta"] if delta is None else delta),
        kerr=float(params["kerr"]),
        kappa=float(params.get("kappa", 1.0)),
        drive=complex(params["drive"]),
        phase_convention=conv,
    )


def master_equation_photon_decay(p: ModeParams, dim: int, t_max=None,
                                 n_times: int = 600):
    """Photon-number decay from vacuum under the master equation.

    Uses one dense eigendecomposition of the generator both to pick an
    adequate window (several times the slow-mode time) and to evaluate
    n(t) exactly on it.  Falls back to adaptive integration when the
    eigenbasis is too ill-conditioned.
    """
    L = decaying_mode_liouvillian(p, dim)
    d = L.dim
    w, V = la.eig(L.matrix)
    rho0 = liouville.vec(projector(fock(0, dim)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", la.LinAlgWarning)
        try:
            c = la.solve(V, rho0)
        except la.LinAlgError:
            c = None
    nz = np.abs(w) > 1e-9
    gap = -np.max(w.real[nz])
    if t_max is None:
        t_max = float(np.clip(8.0 / max(gap, 1e-9), 40.0, T_MAX_CAP))
    times = np.linspace(0.0, t_max, n_times)
    if c is not None and np.linalg.norm(V @ c - rho0) < 1e-6:
        diag_idx = np.arange(d) * (d + 1)
        mode_n = np.arange(d) @ V[diag_idx, :]
        mode_tr = np.sum(V[diag_idx, :], axis=0)
        amp = c[None, :] * np.exp(np.outer(times, w))
        tr = np.real(amp @ mode_tr)
        photon = np.real(amp @ mode_n) / tr
        return EvolutionResult(times, None, photon), gap
    res = liouville.evolve(projector(fock(0, dim)), L, times,
                           method="dop853", store_states=False)
    return res, gap


def master_equation_tau(p: ModeParams, dim: int, transient_cut: float = 5.0):
    """Relaxation time of the vacuum-started master-equation decay."""
    res, gap = master_equation_photon_decay(p, dim)
    fit = liouville.fit_relaxation(res, transient_cut)
    return fit, gap


def semiclassical_tau(p: ModeParams, n_traj: int, seed0: int,
                      t_max: float = 150.0, dt: float = None,
                      transient_cut: float = 5.0):
    """Ensemble relaxation time with adaptive window extension."""
    dt = dt or stochastic.DT_SEMICLASSICAL
    while True:
        try:
            return stochastic.ensemble_relaxation(
                p, n_traj, t_max, seed0, dt=dt, transient_cut=transient_cut)
        except liouville.RelaxationFitError:
            if t_max >= T_MAX_CAP:
                raise
            t_max = min(t_max * 2.5, T_MAX_CAP)


# ---------------------------------------------------------------------------
# experiment implementations (one function per experiment name)
# ---------------------------------------------------------------------------

def _point_steadystate(args):
    params, delta = args
    p = _mode(params, delta)
    dim = int(params.get("dim", 60))
    rho = liouville.steady_state(decaying_mode_liouvillian(p, dim))
    n = liouville.photon_number(rho)
    try:
        q = liouville.mandel_q(rho)
    except liouville.UndefinedQError:
        q = float("nan")
    from .hilbert import tail_population
    return {"delta": delta, "n_ss": n, "mandel_q": q,
            "tail_population": tail_population(rho)}


def _point_relax(args):
    params, delta = args
    p = _mode(params, delta)
    dim = int(params.get("dim", 60))
    fit, gap = master_equation_tau(
        p, dim, transient_cut=float(params.get("transient_cut", 5.0)))
    return {"delta": delta, "tau": fit.tau, "n_ss_fit": fit.n_ss,
            "residual": fit.residual, "spectral_gap": gap}


def _point_trajectories(args):
    params, delta = args
    p = _mode(params, delta)
    fit = semiclassical_tau(
        p,
        n_traj=int(params.get("n_traj", 200)),
        seed0=int(params["seed"]),
        t_max=float(params.get("t_max", 150.0)),
        dt=float(params.get("dt", stochastic.DT_SEMICLASSICAL)),
        transient_cut=float(params.get("transient_cut", 5.0)))
    return {"delta": delta, "tau": fit.tau, "n_ss_fit": fit.n_ss,
            "residual": fit.residual,
            "n_traj": int(params.get("n_traj", 200))}


def _point_liouvillian_rate(args):
    params, delta = args
    p = _mode(params, delta)
    dim = int(params.get("dim", 30))
    L = decaying_mode_liouvillian(p, dim)
    rho_s = liouville.steady_state(L)
    lam = spectral.quantum_escape_rate(L, rho_s, projector(fock(0, dim)))
    spec = spectral.full_spectrum(L)
    sm = spectral.slow_mode(spec)
    return {"delta": delta, "kappa": p.kappa, "kerr": p.kerr,
            "drive": abs(p.drive), "lambda_e": lam,
            "re_chi": sm.chi.real, "im_chi": sm.chi.imag}


def _point_escape_rate(args):
    params, delta = args
    p = _mode(params, delta)
    fps = metapotential.classical_fixed_points(p)
    row = {"delta": delta, "kerr": p.kerr, "kappa": p.kappa,
           "drive": abs(p.drive)}
    if not fps.bistable:
        n = fps.roots[0].photon_number
        row.update(n_low=n, n_high=n, n_unstable=float("nan"),
                   delta_u=float("nan"), gamma0=float("nan"),
                   lambda_e=float("nan"), xi=float("nan"))
        return row
    prof = metapotential.metapotential_profile(p)
    lam = metapotential.semiclassical_escape_rate(prof, p.kappa)
    xi = metapotential.crossover_parameter(prof.gamma0, p.kappa).xi
    row.update(n_low=fps.stable_low.photon_number,
               n_high=fps.stable_high.photon_number,
               n_unstable=fps.unstable.photon_number,
               delta_u=prof.delta_u, gamma0=prof.gamma0, lambda_e=lam, xi=xi)
    return row


def _point_crossover(args):
    params, delta = args
    p = _mode(params, delta)
    fps = metapotential.classical_fixed_points(p)
    if fps.bistable:
        gamma0 = metapotential.metapotential_profile(p).gamma0
        extrapolated = 0
    else:
        gamma0 = metapotential.single_well_attempt_frequency(p)
        extrapolated = 1
    res = metapotential.crossover_parameter(gamma0, p.kappa)
    return {"delta": delta, "xi": res.xi, "gamma0": gamma0,
            "regime": res.regime, "extrapolated": extrapolated}


def _point_classical_compare(args):
    params, _ = args
    raise PointFailure("classical_compare has no per-point form")


POINT_FUNCS = {
    "steadystate": _point_steadystate,
    "relax": _point_relax,
    "trajectories": _point_trajectories,
    "liouvillian_rate": _point_liouvillian_rate,
    "escape_rate": _point_escape_rate,
    "crossover": _point_crossover,
}

COLUMNS = {
    "steadystate": ["delta", "n_ss", "mandel_q", "tail_population"],
    "relax": ["delta", "tau", "n_ss_fit", "residual", "spectral_gap"],
    "trajectories": ["delta", "tau", "n_ss_fit", "residual", "n_traj"],
    "liouvillian_rate": ["delta", "kappa", "kerr", "drive", "lambda_e",
                         "re_chi", "im_chi"],
    "escape_rate": ["delta", "kerr", "kappa", "drive", "n_low", "n_high",
                    "n_unstable", "delta_u", "gamma0", "lambda_e", "xi"],
    "crossover": ["delta", "xi", "gamma0", "regime", "extrapolated"],
    "lineshape": ["pump_detuning", "frequency_shift", "averaged_power",
                  "n_avg", "t_m", "shift_steady_state"],
    "classical_compare": ["time", "n_quantum", "n_classical"],
    "circuit": ["mode_a", "mode_b", "kerr_mhz"],
}

SWEEP_AXES = {
    "steadystate": {"delta"},
    "relax": {"delta"},
    "trajectories": {"delta"},
    "liouvillian_rate": {"delta"},
    "escape_rate": {"delta"},
    "crossover": {"delta"},
    "lineshape": {"delta1"},
    "classical_compare": set(),
    "circuit": set(),
}


def run_sweep(experiment: str, params: dict, grid, seed: int, workers: int):
    """Run per-point experiments over the grid with crash isolation.

    Returns (rows, statuses): ``rows[i]`` is None for failed points;
    statuses carry per-point dicts for the manifest.
    """
    func = POINT_FUNCS[experiment]
    params = dict(params)
    params["seed"] = seed
    tasks = [(params, float(g)) for g in grid]
    rows: list = []
    statuses = []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_safe_point, func, t) for t in tasks]
            for g, fut in zip(grid, futures):
                row, err = fut.result()
                rows.append(row)
                statuses.append(_status(g, err))
    else:
        for g, t in zip(grid, tasks):
            row, err = _safe_point(func, t)
            rows.append(row)
            statuses.append(_status(g, err))
    return rows, statuses


def _safe_point(func, task):
    try:
        return func(task), None
    except Exception as err:  # crash isolation per sweep point
        return None, f"{type(err).__name__}: {err}"


def _status(g, err):
    s = {"point": float(g), "status": "done" if err is None else "failed"}
    if err:
        s["error"] = err
    return s


# ---------------------------------------------------------------------------
# whole-grid experiments
# ---------------------------------------------------------------------------

def lineshape_steady_state_shift(params, delta1):
    """Single-mode steady-state comparator: -cross_kerr * <n1>_ss."""
    p1 = ModeParams(float(delta1), float(params["kerr1"]),
                    float(params.get("kappa1", 1.0)),
                    complex(params["drive1"]))
    dim = int(params.get("dims", (6, 30))[1]) + 5
    rho = liouville.steady_state(decaying_mode_liouvillian(p1, dim))
    return -float(params["cross_kerr"]) * liouville.photon_number(rho)


def run_lineshape(params: dict, grid, seed: int, workers: int):
    """Heterodyne frequency-shift scan with optional two-stage refinement.

    Probe windows are centered per pump point on the steady-state
    predictor.  With ``refine_top`` > 0, a coarse pass with
    ``coarse_n_avg`` realizations ranks the probe detunings and only the
    leading candidates are re-measured with the full ``n_avg``.
    """
    params = dict(params)
    kappa0 = float(params["kappa0"])
    dims = tuple(int(d) for d in params.get("dims", (6, 30)))
    dt = float(params.get("dt", stochastic.DT_SME))
    record_bin = int(params.get("record_bin", 400))
    t_m = float(params.get("t_m", 20.0 / kappa0))
    n_avg = int(params.get("n_avg", 100))
    probe_points = int(params.get("probe_points", 7))
    refine_top = int(params.get("refine_top", 3))
    coarse_n_avg = int(params.get("coarse_n_avg", 25))
    mode0 = ModeParams(0.0, float(params["kerr0"]), kappa0,
                       complex(params["drive0"]))
    mode1 = ModeParams(0.0, float(params["kerr1"]),
                       float(params.get("kappa1", 1.0)),
                       complex(params["drive1"]))
    base = TwoModeParams(mode0, mode1, float(params["cross_kerr"]))
    grid = [float(g) for g in grid]
    shifts_ss = [lineshape_steady_state_shift(params, g) for g in grid]
    lo = float(params.get("probe_below", 3.5))
    hi = float(params.get("probe_above", 2.0))
    probe_grids = [np.linspace(max(-s - lo, 0.25), -s + hi, probe_points)
                   for s in shifts_ss]
    points = stochastic.lineshape_scan(
        base, grid, probe_grids, t_m, coarse_n_avg if refine_top else n_avg,
        seed, dims=dims, dt=dt, record_bin=record_bin, workers=workers)
    if refine_top:
        refined_grids = []
        for pt in points:
            order = np.argsort(pt.probe_powers)[::-1][:refine_top]
            refined_grids.append(np.sort(pt.probe_detunings[order]))
        points = stochastic.lineshape_scan(
            base, grid, refined_grids, t_m, n_avg, seed + 1,
            dims=dims, dt=dt, record_bin=record_bin, workers=workers)
    rows = []
    statuses = []
    for pt, ss in zip(points, shifts_ss):
        rows.append({"pump_detuning": pt.pump_detuning,
                     "frequency_shift": pt.frequency_shift,
                     "averaged_power": pt.averaged_power,
                     "n_avg": n_avg, "t_m": t_m,
                     "shift_steady_state": ss})
        statuses.append({"point": pt.pump_detuning, "status": "done"})
    return rows, statuses, points


def run_classical_compare(params: dict, seed: int):
    """Master-equation vs classical photon number from one initial state."""
    alpha0 = complex(*params.get("alpha0", (0.0, 0.0))) \
        if isinstance(params.get("alpha0"), (list, tuple)) \
        else complex(params.get("alpha0", 0.0))
    p = _mode(params)
    dim = int(params.get("dim", 80))
    t_max = float(params.get("t_max", 20.0))
    n_times = int(params.get("n_times", 200))
    times = np.linspace(0.0, t_max, n_times)
    from .hilbert import coherent_state
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ket = coherent_state(alpha0, dim)
    L = decaying_mode_liouvillian(p, dim)
    res = liouville.evolve(projector(ket), L, times, method="dop853",
                           store_states=False)
    classical = metapotential.classical_evolution(alpha0, p, times[1:])
    n_classical = np.concatenate([[abs(alpha0) ** 2], np.abs(classical) ** 2])
    rows = [{"time": t, "n_quantum": nq, "n_classical": nc}
            for t, nq, nc in zip(times, res.photon_numbers, n_classical)]
    statuses = [{"point": 0.0, "status": "done"}]
    return rows, statuses


def run_circuit(params: dict):
    """Array quantization: Kerr matrix rows plus a mode-table dict."""
    p = circuit.CircuitParams(
        n_junctions=int(params["n_junctions"]),
        l_j=float(params["l_j_nh"]) * 1e-9,
        c_j=float(params["c_j_ff"]) * 1e-15,
        c_0=float(params["c_0_ff"]) * 1e-15,
        c_s=float(params["c_s_ff"]) * 1e-15,
        c_g=float(params["c_g_ff"]) * 1e-15,
        c_e=float(params["c_e_ff"]) * 1e-15)
    spec = circuit.array_modes(p)
    n_modes = int(params.get("n_kerr_modes", circuit.DEFAULT_KERR_MODES))
    km = circuit.kerr_matrix(spec, p.l_j, n_modes)
    kmhz = km.k_mhz()
    rows = []
    for a in range(n_modes):
        for b in range(n_modes):
            rows.append({"mode_a": a, "mode_b": b, "kerr_mhz": kmhz[a, b]})
    table = []
    for k in range(n_modes):
        # report effective L/C with the mode profile normalized to unit
        # peak node amplitude (the L*C product is normalization-free)
        s2 = float(np.max(np.abs(spec.eigvecs[:, k])) ** 2)
        table.append({
            "index": k,
            "freq_GHz": float(spec.freqs_ghz()[k]),
            "dressed_freq_GHz": float(km.dressed_ghz()[k]),
            "C_eff_fF": float(spec.c_eff[k] / s2 * 1e15),
            "L_eff_nH": float(spec.l_eff[k] * s2 * 1e9),
        })
    statuses = [{"point": 0.0, "status": "done"}]
    return rows, statuses, {"modes": table,
                            "self_kerr_shift_mhz":
                                [float(2 * kmhz[k, k]) for k in range(n_modes)]}
