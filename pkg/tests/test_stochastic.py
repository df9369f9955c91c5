import math

import numpy as np
import pytest
from scipy import stats

from kerrsim import liouville, metapotential as mp, stochastic as st
from kerrsim.hilbert import (
    DrivePhase, ModeParams, TwoModeParams, annihilation, two_mode_hamiltonian,
)


def test_noise_path_deterministic_and_statistics():
    a = st.noise_path(42, 1e-3, 50000)
    b = st.noise_path(42, 1e-3, 50000)
    np.testing.assert_array_equal(a.increments, b.increments)
    c = st.noise_path(43, 1e-3, 50000)
    assert not np.array_equal(a.increments, c.increments)
    # 5-sigma statistical bands for mean and per-quadrature variance
    n, dt = a.increments.size, a.dt
    for quad in (a.increments.real, a.increments.imag):
        assert abs(np.mean(quad)) < 5 * math.sqrt(dt / n)
        var = np.var(quad)
        assert abs(var - dt) < 5 * dt * math.sqrt(2.0 / n)


def test_semiclassical_step_linear_decay():
    p = ModeParams(delta=0.7, kerr=0.0, kappa=1.0, drive=0.0)
    dt = 1e-3
    alpha = 1.0 + 0.0j
    for _ in range(1000):
        alpha = st.semiclassical_step(alpha, p, 0.0, dt)
    expected = np.exp((-1j * 0.7 - 0.5) * 1.0)
    assert abs(alpha - expected) < 5e-4  # first-order local error


def test_semiclassical_step_stationary_at_fixed_point():
    p = ModeParams(2.5, 0.05, 1.0, 4.0, DrivePhase.PLUS_EPSILON)
    for root in mp.classical_fixed_points(p).roots:
        out = st.semiclassical_step(root.alpha, p, 0.0, 1e-3)
        assert abs(out - root.alpha) < 1e-12


def test_semiclassical_step_divergence_guard():
    p = ModeParams(0.0, 0.0, 1.0, 0.0)
    with pytest.raises(mp.DivergenceError):
        st.semiclassical_step(200.0 + 0j, p, 0.0, 1e-3)


def test_trajectory_reproducibility_and_stream_independence():
    p = ModeParams(5.5, 0.2, 1.0, 6.0)
    t1 = st.semiclassical_trajectory(p, 5.0, seed=9)
    t2 = st.semiclassical_trajectory(p, 5.0, seed=9)
    np.testing.assert_array_equal(t1.alphas, t2.alphas)
    t3 = st.semiclassical_trajectory(p, 5.0, seed=9, index=1)
    assert not np.array_equal(t1.alphas, t3.alphas)


def test_ensemble_matches_single_trajectories():
    p = ModeParams(5.5, 0.2, 1.0, 6.0)
    times, alphas = st.semiclassical_ensemble(p, 3, 3.0, seed0=17)
    for i in range(3):
        single = st.semiclassical_trajectory(p, 3.0, seed=17, index=i)
        np.testing.assert_array_equal(single.alphas, alphas[i])


def test_ensemble_noiseless_ringdown_matches_deterministic():
    p = ModeParams(1.0, 0.05, 1.0, 2.0)
    times, alphas = st.semiclassical_ensemble(p, 60, 30.0, seed0=1,
                                              noise_scale=0.0)
    # all trajectories identical without noise
    assert np.max(np.abs(alphas - alphas[0])) == 0.0
    ref = mp.classical_evolution(0.0, p, times[1:])
    np.testing.assert_allclose(alphas[0][1:], ref, atol=2e-2)
    n_fix = mp.classical_fixed_points(p).roots[0].photon_number
    assert abs(alphas[0][-1]) ** 2 == pytest.approx(n_fix, abs=1e-3)


def test_ensemble_relaxation_noiseless_has_no_switching_peak():
    p = ModeParams(1.0, 0.05, 1.0, 2.0)
    fit = st.ensemble_relaxation(p, 50, 40.0, seed0=2, noise_scale=0.0,
                                 transient_cut=1.0)
    assert fit.tau < 3.0  # plain ring-down scale, no slow switching


def test_ensemble_relaxation_requires_enough_trajectories():
    p = ModeParams(1.0, 0.05, 1.0, 2.0)
    with pytest.raises(ValueError):
        st.ensemble_relaxation(p, 10, 10.0, seed0=0)


def test_weak_convergence_in_dt():
    # halving dt moves the ensemble-averaged photon number by < 2%
    p = ModeParams(4.0, 0.2, 1.0, 6.0)
    t_max = 30.0
    means = []
    for dt in (1e-3, 5e-4):
        times, alphas = st.semiclassical_ensemble(p, 600, t_max, seed0=5, dt=dt)
        means.append(np.mean(np.abs(alphas[:, -1]) ** 2))
    assert abs(means[0] - means[1]) / means[1] < 0.02


def test_bootstrap_stability_of_tau():
    p = ModeParams(5.5, 0.2, 1.0, 6.0)
    times, alphas = st.semiclassical_ensemble(p, 200, 120.0, seed0=11)
    nbar = np.abs(alphas) ** 2
    fit_all = liouville.fit_relaxation(
        liouville.EvolutionResult(times, None, nbar.mean(axis=0)), 5.0)
    rng = np.random.default_rng(0)
    taus = []
    for _ in range(20):
        pick = rng.integers(0, 200, size=200)
        fit = liouville.fit_relaxation(
            liouville.EvolutionResult(times, None, nbar[pick].mean(axis=0)), 5.0)
        taus.append(fit.tau)
    lo, hi = np.percentile(taus, [2.5, 97.5])
    # doubling the ensemble stays inside the bootstrap interval
    times2, alphas2 = st.semiclassical_ensemble(p, 400, 120.0, seed0=11)
    fit2 = liouville.fit_relaxation(
        liouville.EvolutionResult(times2, None,
                                  np.mean(np.abs(alphas2) ** 2, axis=0)), 5.0)
    span = hi - lo
    assert lo - 0.5 * span <= fit2.tau <= hi + 0.5 * span
    assert fit_all.tau > 5.0  # switching slow-down present


# ---------------------------------------------------------------------------
# heterodyne stochastic master equation
# ---------------------------------------------------------------------------

def _reference_split_step_run(p, dims, dt, n_steps, seed, dz_scale=1.0):
    """Dense-matrix replica of the production split-step scheme."""
    d0, d1 = dims
    D = d0 * d1
    a0 = np.kron(np.eye(d1), annihilation(d0))
    a1 = np.kron(annihilation(d1), np.eye(d0))
    n0 = a0.conj().T @ a0
    n1 = a1.conj().T @ a1
    e1 = p.mode1.delta * np.diag(n1) - p.mode1.kerr * np.diag(n1) ** 2
    e0 = p.mode0.delta * np.diag(n0) - p.mode0.kerr * np.diag(n0) ** 2
    energy = (e1 + e0 - p.cross_kerr * np.diag(n1) * np.diag(n0)).real
    damp = 0.5 * (p.mode1.kappa * np.diag(n1) + p.mode0.kappa * np.diag(n0)).real
    ediag = np.exp((-1j * (energy[:, None] - energy[None, :])
                    - damp[:, None] - damp[None, :]) * dt)
    eps1 = p.mode1.hamiltonian_drive
    eps0 = p.mode0.hamiltonian_drive
    h_dr = (eps1 * a1.conj().T + np.conj(eps1) * a1
            + eps0 * a0.conj().T + np.conj(eps0) * a0)
    sqk0 = math.sqrt(p.mode0.kappa)
    rho = np.zeros((D, D), complex)
    rho[0, 0] = 1.0
    gen = st._generator(seed, 0)
    for _ in range(n_steps):
        raw = gen.standard_normal(2) * math.sqrt(dt)
        dz = dz_scale * (raw[0] + 1j * raw[1])
        t0 = np.trace(a0 @ rho)
        trlin = sqk0 * 2 * (dz.real * t0.real - dz.imag * t0.imag)
        upd = (rho * (1.0 - trlin)
               - 1j * dt * (h_dr @ rho - rho @ h_dr)
               + p.mode1.kappa * dt * (a1 @ rho @ a1.conj().T)
               + p.mode0.kappa * dt * (a0 @ rho @ a0.conj().T)
               + sqk0 * (dz * a0 @ rho + np.conj(dz) * rho @ a0.conj().T))
        rho = ediag * upd
        rho = rho / np.trace(rho).real
    return rho


def _two_mode_params():
    m0 = ModeParams(delta=0.4, kerr=0.1, kappa=0.5, drive=0.25)
    m1 = ModeParams(delta=1.2, kerr=0.8, kappa=1.0, drive=1.4)
    return TwoModeParams(m0, m1, cross_kerr=0.6)


def test_sme_kernel_matches_dense_reference():
    p = _two_mode_params()
    dims = (3, 5)
    n_steps = 400
    dt = 1e-3
    run = st.heterodyne_sme_run(p, dims, dt, n_steps * dt, seed=21)
    ref = _reference_split_step_run(p, dims, dt, n_steps, seed=21)
    np.testing.assert_allclose(run.final_state, ref, atol=1e-12)


def test_sme_reproducibility_bitwise():
    p = _two_mode_params()
    r1 = st.heterodyne_sme_run(p, (3, 5), 1e-3, 1.0, seed=4)
    r2 = st.heterodyne_sme_run(p, (3, 5), 1e-3, 1.0, seed=4)
    np.testing.assert_array_equal(r1.power_signal, r2.power_signal)
    np.testing.assert_array_equal(r1.record, r2.record)
    np.testing.assert_array_equal(r1.final_state, r2.final_state)


def test_sme_batch_lanes_match_single_runs():
    p = _two_mode_params()
    sysm = st._SmeSystem(p, (3, 5), 1e-3)
    gens = [st._generator(33, i) for i in range(3)]
    power, _, _, cur = st._run_sme_batch(sysm, 500, gens, 100)
    for lane in range(3):
        single = st.heterodyne_sme_run(p, (3, 5), 1e-3, 0.5, seed=33,
                                       stream_index=lane, keep_record=False)
        np.testing.assert_allclose(power[:, lane], single.power_signal,
                                   rtol=1e-12, atol=1e-12)


def test_sme_measurement_off_reduces_to_master_equation():
    # with a vanishing probe linewidth the measurement back-action and
    # the probe decay both disappear; compare against the deterministic
    # two-mode evolution
    m0 = ModeParams(delta=0.4, kerr=0.1, kappa=1e-12, drive=0.3)
    m1 = ModeParams(delta=1.0, kerr=0.8, kappa=1.0, drive=1.5)
    p = TwoModeParams(m0, m1, cross_kerr=0.6)
    dims = (3, 8)
    t_total = 2.0
    run = st.heterodyne_sme_run(p, dims, 1e-4, t_total, seed=11)
    d0, d1 = dims
    H = two_mode_hamiltonian(p, dims)
    a0 = np.kron(np.eye(d1), annihilation(d0))
    a1 = np.kron(annihilation(d1), np.eye(d0))
    L = liouville.build_liouvillian(H, [(a1, m1.kappa), (a0, m0.kappa)])
    rho0 = np.zeros((d0 * d1, d0 * d1), complex)
    rho0[0, 0] = 1.0
    res = liouville.evolve(rho0, L, [0.0, t_total], method="dop853")
    n_ref = st.pump_photon_expectation(res.states[-1], dims)
    n_sme = st.pump_photon_expectation(run.final_state, dims)
    assert n_sme == pytest.approx(n_ref, rel=1e-3)


def test_sme_vacuum_noise_floor():
    m0 = ModeParams(0.0, 0.0, 0.3448, 0.0)
    m1 = ModeParams(0.0, 0.0, 1.0, 0.0)
    p = TwoModeParams(m0, m1, 0.0)
    dt = 5e-4
    floor = 1.0 / (st.RECORD_BIN * dt)
    vals = []
    for s in range(60):
        r = st.heterodyne_sme_run(p, (3, 3), dt, 2.0, seed=100,
                                  stream_index=s, keep_record=False)
        vals.append(np.mean(r.power_signal))
    mean = np.mean(vals)
    n_bins = 60 * len(r.power_signal)
    # J is chi-squared distributed per bin: sd of the mean ~ floor/sqrt(N)
    assert abs(mean - floor) < 5 * floor / math.sqrt(n_bins)


def test_sme_record_average_matches_unconditioned_evolution():
    m0 = ModeParams(delta=0.2, kerr=0.05, kappa=0.5, drive=0.2)
    m1 = ModeParams(delta=0.8, kerr=0.6, kappa=1.0, drive=1.2)
    p = TwoModeParams(m0, m1, cross_kerr=0.4)
    dims = (3, 7)
    t_total = 3.0
    dt = 5e-4
    n_rec = 200
    sysm = st._SmeSystem(p, dims, dt)
    acc = 0.0
    batch = 25
    for start in range(0, n_rec, batch):
        gens = [st._generator(71, start + i) for i in range(batch)]
        _, _, _, cur = st._run_sme_batch(sysm, int(t_total / dt), gens, 100)
        for lane in range(batch):
            acc += st.pump_photon_expectation(sysm.extract(cur[0], cur[1], lane),
                                              dims)
    n_cond = acc / n_rec
    d0, d1 = dims
    H = two_mode_hamiltonian(p, dims)
    a0 = np.kron(np.eye(d1), annihilation(d0))
    a1 = np.kron(annihilation(d1), np.eye(d0))
    L = liouville.build_liouvillian(H, [(a1, m1.kappa), (a0, m0.kappa)])
    rho0 = np.zeros((d0 * d1, d0 * d1), complex)
    rho0[0, 0] = 1.0
    res = liouville.evolve(rho0, L, [0.0, t_total], method="dop853")
    n_ref = st.pump_photon_expectation(res.states[-1], dims)
    assert n_cond == pytest.approx(n_ref, rel=0.05)


def test_sme_conditional_states_stay_physical():
    # weak driving and a small step keep conditional states positive to
    # the stated tolerance; trace is renormalized exactly
    m0 = ModeParams(delta=0.3, kerr=0.02, kappa=0.4, drive=0.1)
    m1 = ModeParams(delta=0.5, kerr=0.3, kappa=1.0, drive=0.5)
    p = TwoModeParams(m0, m1, cross_kerr=0.2)
    run = st.heterodyne_sme_run(p, (3, 6), 2e-5, 0.6, seed=13,
                                store_states_every=1)
    assert run.conditional_states
    for rho in run.conditional_states:
        assert abs(np.trace(rho).real - 1) < 1e-12
        assert np.linalg.eigvalsh(rho)[0] >= -1e-5


def test_lineshape_scan_decoupled_probe_has_zero_shift():
    kap0 = 0.5
    m0 = ModeParams(0.0, 0.0, kap0, st.PROBE_DRIVE_FRACTION * kap0)
    m1 = ModeParams(0.0, 1.0, 1.0, 3.0)
    p = TwoModeParams(m0, m1, cross_kerr=0.0)
    probe = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    pts = st.lineshape_scan(p, [2.0, 6.0], probe, t_m=40.0, n_avg=25, seed=3,
                            dims=(4, 4), dt=2e-3, record_bin=400, batch=25)
    for pt in pts:
        assert pt.frequency_shift == pytest.approx(0.0, abs=0.51)


def test_drive_db_mapping():
    eps0 = 1.83 / 2.9
    assert st.drive_from_db(0.0, eps0) == pytest.approx(0.631034, abs=1e-6)
    assert st.drive_from_db(20.0, eps0) == pytest.approx(10 * eps0)


def test_switching_statistics_poissonian():
    # committed escape waiting times from the metastable low branch pass
    # an exponential KS test once the short deterministic transit is
    # removed (memoryless switching)
    p = ModeParams(6.2, 0.2, 1.0, 6.0)
    fpt = st.escape_first_passage_times(p, 300, 400.0, seed0=31)
    assert fpt.size >= 200
    loc = np.percentile(fpt, 1)
    shifted = fpt - loc
    result = stats.kstest(shifted, "expon", args=(0.0, shifted.mean()))
    assert result.pvalue > 0.01


def test_switching_dwell_times_alternate():
    times = np.arange(14, dtype=float)
    photon = np.array([1, 1, 9, 9, 9, 1, 1, 1, 9, 9, 1, 1, 9, 9], float)
    low, high = st.switching_dwell_times(times, photon, 5.0, 1.0, 9.0)
    np.testing.assert_allclose(high, [3.0, 2.0])
    np.testing.assert_allclose(low, [3.0, 2.0])
