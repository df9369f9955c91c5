import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from kerrsim import metapotential as mp
from kerrsim.hilbert import DrivePhase, ModeParams

BISTABLE = ModeParams(2.5, 0.05, 1.0, 4.0, DrivePhase.PLUS_EPSILON)


def test_linear_limit_single_root():
    p = ModeParams(1.5, 0.0, 1.0, 2.0)
    fps = mp.classical_fixed_points(p)
    assert len(fps.roots) == 1
    expected = 4.0 / (1.5**2 + 0.25)
    assert fps.roots[0].photon_number == pytest.approx(expected, rel=1e-12)


def test_bistable_roots_and_stability():
    fps = mp.classical_fixed_points(BISTABLE)
    assert fps.bistable
    kinds = [r.stability for r in fps.roots]
    assert kinds.count(mp.Stability.UNSTABLE) == 1
    assert mp.Stability.STABLE_LOW in kinds and mp.Stability.STABLE_HIGH in kinds
    assert (fps.stable_low.photon_number < fps.unstable.photon_number
            < fps.stable_high.photon_number)


@given(delta=st.floats(-3, 8), kerr=st.floats(0.01, 2), eps=st.floats(0.1, 8))
@settings(max_examples=60, deadline=None)
def test_fixed_point_residuals(delta, kerr, eps):
    p = ModeParams(delta, kerr, 1.0, eps)
    fps = mp.classical_fixed_points(p)
    assert len(fps.roots) in (1, 2, 3)
    scale = max(eps, 1.0)
    for r in fps.roots:
        assert abs(mp.flow_rhs(r.alpha, p)) < 1e-11 * scale


def test_root_amplitudes_follow_drive_convention():
    for conv in DrivePhase:
        p = ModeParams(2.5, 0.05, 1.0, 4.0, conv)
        fps = mp.classical_fixed_points(p)
        ns = sorted(r.photon_number for r in fps.roots)
        base = sorted(r.photon_number for r in
                      mp.classical_fixed_points(BISTABLE).roots)
        np.testing.assert_allclose(ns, base, rtol=1e-10)


def test_critical_photon_numbers_threshold():
    assert mp.critical_photon_numbers(0.5, 0.2, 1.0) is None
    assert mp.critical_photon_numbers(-2.0, 0.2, 1.0) is None
    thr = np.sqrt(3) / 2
    assert mp.critical_photon_numbers(thr * 0.9999, 0.2, 1.0) is None
    crit = mp.critical_photon_numbers(thr * 1.0001, 0.2, 1.0)
    assert crit is not None
    at_thr = mp.critical_photon_numbers(thr, 0.2, 1.0)
    assert at_thr is not None
    assert at_thr[0] == pytest.approx(at_thr[1], rel=1e-9)


def test_critical_photon_numbers_against_brute_force():
    delta, kerr, kappa = 2.5, 0.05, 1.0
    n_minus, n_plus = mp.critical_photon_numbers(delta, kerr, kappa)

    # independent oracle: differentiate the drive-power cubic term by
    # term and find the stationary points as quadratic roots
    deriv = np.array([3 * 4 * kerr**2, -2 * 4 * delta * kerr,
                      delta**2 + kappa**2 / 4])
    lo, hi = np.sort(np.roots(deriv).real)
    assert n_minus == pytest.approx(lo, rel=1e-10)
    assert n_plus == pytest.approx(hi, rel=1e-10)

    def power(n):
        return mp.drive_power_for(delta, kerr, kappa, n)

    # extremum character: local max at n_minus, local min at n_plus
    res_max = minimize_scalar(lambda n: -power(n),
                              bounds=(1e-6, (n_minus + n_plus) / 2),
                              method="bounded")
    res_min = minimize_scalar(power, bounds=((n_minus + n_plus) / 2, 5 * n_plus),
                              method="bounded")
    assert res_max.x == pytest.approx(n_minus, abs=1e-4)
    assert res_min.x == pytest.approx(n_plus, abs=1e-4)


def test_root_count_matches_drive_window():
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(200):
        delta = rng.uniform(0.3, 6.0)
        kerr = rng.uniform(0.02, 1.5)
        eps = rng.uniform(0.1, 8.0)
        p = ModeParams(delta, kerr, 1.0, eps)
        n_roots = len(mp.classical_fixed_points(p).roots)
        window = mp.bistable_drive_window(delta, kerr, 1.0)
        if window is None:
            assert n_roots == 1
        else:
            lo, hi = window
            eps_sq = eps**2
            if lo * 1.001 < eps_sq < hi * 0.999:
                assert n_roots == 3
            elif eps_sq < lo * 0.999 or eps_sq > hi * 1.001:
                assert n_roots == 1
            checked += 1
    assert checked > 50


def test_rotation_angle_basics():
    assert mp.rotation_angle(0.0, 2.0) == pytest.approx(0.0)
    assert mp.rotation_angle(0.0, 1j) == pytest.approx(-np.pi / 2)
    x0 = np.exp(1j * mp.rotation_angle(0.0, 1j)) * 1j
    assert x0.real == pytest.approx(1.0)
    assert abs(x0.imag) < 1e-15
    with pytest.raises(mp.DegenerateGeometryError):
        mp.rotation_angle(1.0 + 1j, 1.0 + 1j)


@given(delta=st.floats(1.0, 7.0), eps=st.floats(2.0, 7.0))
@settings(max_examples=40, deadline=None)
def test_rotated_separation_is_real(delta, eps):
    p = ModeParams(delta, 0.2, 1.0, eps)
    fps = mp.classical_fixed_points(p)
    if not fps.bistable:
        return
    a0 = fps.stable_low.alpha
    au = fps.unstable.alpha
    phi = mp.rotation_angle(a0, au)
    rotated = np.exp(1j * phi) * (au - a0)
    assert abs(rotated.imag) < 1e-12 * max(1.0, abs(rotated))
    assert rotated.real > 0


def test_force_vanishes_at_fixed_points():
    p = ModeParams(5.2, 0.2, 1.0, 6.0)
    prof = mp.metapotential_profile(p)
    a, b, c, d = mp.force_coefficients(
        p.with_convention(DrivePhase.MINUS_I_EPSILON), prof.alpha_low, prof.phi)
    f_at_x0 = a + b * prof.x0 + c * prof.x0**2 + d * prof.x0**3
    assert abs(a) < 1e-10
    assert abs(f_at_x0) < 1e-9


def test_quartic_matches_quadrature():
    p = ModeParams(5.2, 0.2, 1.0, 6.0)
    prof = mp.metapotential_profile(p)
    a, b, c, d = mp.force_coefficients(
        p.with_convention(DrivePhase.MINUS_I_EPSILON), prof.alpha_low, prof.phi)

    def minus_im_force(x):
        return -np.imag(a + b * x + c * x**2 + d * x**3)

    for x in np.linspace(-prof.x0 / 2, 2 * prof.x0, 9):
        val, _ = quad(minus_im_force, 0.0, x, epsabs=1e-13, epsrel=1e-13)
        assert prof.potential(x) == pytest.approx(val, abs=1e-10)


def test_metapotential_shape_single_barrier():
    p = ModeParams(5.2, 0.2, 1.0, 6.0)
    prof = mp.metapotential_profile(p)
    assert prof.delta_u > 0
    assert prof.x0 > 0
    # minimum at the origin, maximum at the saddle
    assert prof.potential(1e-3 * prof.x0) > 0
    assert prof.potential(prof.x0) > prof.potential(0.9 * prof.x0)
    assert prof.potential(1.3 * prof.x0) < prof.potential(prof.x0)


def test_attempt_frequency_from_curvature():
    p = ModeParams(5.2, 0.2, 1.0, 6.0)
    prof = mp.metapotential_profile(p)
    assert prof.gamma0**2 == pytest.approx(1.0 * prof.curvature_at_origin(),
                                           rel=1e-12)
    # numerical curvature of the closed form
    h = 1e-6
    num = (prof.potential(h) - 2 * prof.potential(0.0)
           + prof.potential(-h)) / h**2
    assert num == pytest.approx(prof.curvature_at_origin(), rel=1e-4)


def test_metapotential_requires_bistability():
    with pytest.raises(mp.NoBarrierError):
        mp.metapotential_profile(ModeParams(0.3, 0.2, 1.0, 6.0))


def test_escape_rate_zero_barrier_limit():
    prof = mp.MetapotentialProfile((0.0, 1.0, 0.0, 0.0), 1.0, 0.0, 2.5, 0.0,
                                   0j, 1j)
    assert mp.semiclassical_escape_rate(prof, 1.0) == pytest.approx(2.5)


def test_escape_rate_increases_with_drive():
    rates = []
    for eps in (5.0, 5.5, 6.0, 6.5, 7.0):
        p = ModeParams(6.0, 0.2, 1.0, eps)
        prof = mp.metapotential_profile(p)
        rates.append(mp.semiclassical_escape_rate(prof, 1.0))
    assert all(b > a for a, b in zip(rates, rates[1:]))


def test_crossover_closed_form_value():
    res = mp.crossover_parameter(1.0, 1.0)
    expected = (np.sqrt(1.25) - 0.5) / (2 * np.pi)
    assert res.xi == pytest.approx(expected, rel=1e-12)
    assert res.xi == pytest.approx(0.0983, abs=2e-4)
    assert res.regime == "semiclassical"


def test_crossover_large_attempt_frequency_asymptote():
    g = 1e6
    res = mp.crossover_parameter(g, 1.0)
    assert res.xi == pytest.approx(g / (2 * np.pi), rel=1e-5)
    assert res.regime == "quantum"


@given(scale=st.floats(0.01, 100.0), gamma0=st.floats(0.05, 50.0))
@settings(max_examples=50, deadline=None)
def test_crossover_scale_invariance(scale, gamma0):
    a = mp.crossover_parameter(gamma0, 1.0)
    b = mp.crossover_parameter(gamma0 * scale, scale)
    assert a.xi == pytest.approx(b.xi, rel=1e-12)


def test_gamma0_scales_with_common_rescaling():
    p1 = ModeParams(5.2, 0.2, 1.0, 6.0)
    s = 3.7
    p2 = ModeParams(5.2 * s, 0.2 * s, 1.0 * s, 6.0 * s)
    g1 = mp.metapotential_profile(p1).gamma0
    g2 = mp.metapotential_profile(p2).gamma0
    assert g2 == pytest.approx(s * g1, rel=1e-10)
    xi1 = mp.crossover_parameter(g1, 1.0).xi
    xi2 = mp.crossover_parameter(g2, s).xi
    assert xi1 == pytest.approx(xi2, rel=1e-10)


def test_classical_evolution_stays_at_fixed_point():
    fps = mp.classical_fixed_points(BISTABLE)
    a_high = fps.stable_high.alpha
    traj = mp.classical_evolution(a_high, BISTABLE, np.linspace(0.01, 20, 50))
    np.testing.assert_allclose(traj, a_high, atol=1e-7)


def test_classical_evolution_initial_condition_dependence():
    # both large-amplitude phases land on the high branch, vacuum stays low
    fps = mp.classical_fixed_points(BISTABLE)
    times = np.linspace(0.01, 60, 200)
    end_plus = abs(mp.classical_evolution(np.sqrt(30), BISTABLE, times)[-1]) ** 2
    end_minus = abs(mp.classical_evolution(-np.sqrt(30), BISTABLE, times)[-1]) ** 2
    end_vac = abs(mp.classical_evolution(0.001, BISTABLE, times)[-1]) ** 2
    assert end_plus == pytest.approx(fps.stable_high.photon_number, rel=1e-6)
    assert end_minus == pytest.approx(end_plus, rel=1e-6)
    assert end_vac == pytest.approx(fps.stable_low.photon_number, rel=1e-4)


def test_classical_evolution_divergence_guard():
    p = ModeParams(0.0, 0.0, 1e-9, 1e9, DrivePhase.PLUS_EPSILON)
    with pytest.raises(mp.DivergenceError):
        mp.classical_evolution(0.0, p, np.linspace(0.1, 50, 20))


def test_single_well_attempt_frequency_linear_limit():
    p = ModeParams(0.7, 1e-9, 1.0, 0.01)
    g = mp.single_well_attempt_frequency(p)
    assert g == pytest.approx(np.sqrt(1.0 * 0.7), rel=1e-3)
