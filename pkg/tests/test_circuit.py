import numpy as np
import pytest

from kerrsim import circuit as ct

DEVICE = ct.CircuitParams(n_junctions=80, l_j=1.9e-9, c_j=26.54e-15,
                          c_0=0.066e-15, c_s=3e-15, c_g=10.4e-15,
                          c_e=10.84e-15)


def tiny_caps(n=1, l_j=1.9e-9, c_j=26.54e-15):
    # negligible parasitics/shunts keep the capacitance matrix definite
    return ct.CircuitParams(n, l_j, c_j, 1e-25, 1e-25, 1e-25, 1e-25)


def test_single_junction_frequency():
    p = tiny_caps()
    spec = ct.array_modes(p)
    assert spec.n_modes == 1
    expected = 1 / np.sqrt(p.l_j * p.c_j)
    assert spec.omegas[0] == pytest.approx(expected, rel=1e-6)


def test_inductance_matrix_row_sums_vanish():
    m = ct.build_matrices(DEVICE)
    np.testing.assert_allclose(m.ind_inv.sum(axis=1), 0.0, atol=1e-4)
    np.testing.assert_allclose(m.ind_inv, m.ind_inv.T, atol=0)
    np.testing.assert_allclose(m.cap, m.cap.T, atol=0)


def test_capacitance_matrix_assembly():
    p = ct.CircuitParams(2, 1e-9, 5e-15, 1e-15, 2e-15, 3e-15, 4e-15)
    m = ct.build_matrices(p)
    # node 0: c_j + c_0 + c_s + c_g; node 1: 2 c_j + c_0; node 2: c_j + c_e
    np.testing.assert_allclose(np.diag(m.cap), [11e-15, 11e-15, 9e-15])
    assert m.cap[0, 1] == -5e-15
    assert m.cap[1, 2] == -5e-15
    assert m.cap[0, 2] == 0


def test_three_junction_chain_against_determinant_scan():
    p = ct.CircuitParams(3, 2e-9, 30e-15, 0.1e-15, 2e-15, 8e-15, 9e-15)
    m = ct.build_matrices(p)
    spec = ct.normal_modes(m)

    # independent oracle: bisect sign changes of det(ind_inv - w2 * cap)
    def charpoly(w2):
        return np.linalg.det(m.ind_inv - w2 * m.cap)

    w2_max = 1.2 * spec.omegas[-1] ** 2
    grid = np.linspace(1e-6 * w2_max, w2_max, 20000)
    vals = np.array([charpoly(x) for x in grid])
    roots = []
    for i in range(grid.size - 1):
        if vals[i] == 0.0:
            roots.append(grid[i])
        elif np.sign(vals[i]) != np.sign(vals[i + 1]):
            lo, hi = grid[i], grid[i + 1]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if np.sign(charpoly(mid)) == np.sign(charpoly(lo)):
                    lo = mid
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    roots = np.sqrt(np.asarray(sorted(roots)))
    assert roots.size == spec.n_modes
    np.testing.assert_allclose(roots, spec.omegas, rtol=1e-10)


def test_mode_contract_counts_and_orthogonality():
    m = ct.build_matrices(DEVICE)
    spec = ct.normal_modes(m)
    assert spec.n_modes == DEVICE.n_junctions  # one zero mode dropped
    # generalized eigenproblem residuals (unit-normalized eigenvectors)
    for k in (0, 1, spec.n_modes - 1):
        v = spec.eigvecs[:, k]
        v = v / np.linalg.norm(v)
        res = np.linalg.norm(m.ind_inv @ v - spec.omegas[k] ** 2 * (m.cap @ v))
        assert res < 1e-9 * np.linalg.norm(m.ind_inv)
    # C-orthogonality of distinct modes
    gram = spec.eigvecs.T @ m.cap @ spec.eigvecs
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) < 1e-10 * np.max(np.abs(gram))
    # frequency identity against effective L and C
    np.testing.assert_allclose(1 / np.sqrt(spec.l_eff * spec.c_eff),
                               spec.omegas, rtol=1e-9)
    assert np.all(np.diff(spec.omegas) > 0)


def test_kerr_matrix_symmetry_and_positivity():
    spec = ct.array_modes(DEVICE)
    km = ct.kerr_matrix(spec, DEVICE.l_j, 8)
    np.testing.assert_array_equal(km.k_matrix, km.k_matrix.T)
    assert np.all(km.k_matrix >= 0)
    assert np.all(km.dressed < spec.omegas[:8])


def test_kerr_matrix_normalization_invariance():
    m = ct.build_matrices(DEVICE)
    spec = ct.normal_modes(m)
    km_ref = ct.kerr_matrix(spec, DEVICE.l_j, 6)
    rng = np.random.default_rng(8)
    scales = rng.uniform(0.1, 10.0, spec.n_modes)
    v = spec.eigvecs * scales
    c_eff = np.einsum("nk,nm,mk->k", v, m.cap, v)
    l_eff = 1.0 / np.einsum("nk,nm,mk->k", v, m.ind_inv, v)
    rescaled = ct.ModeSpectrum(spec.omegas, v, c_eff, l_eff,
                               (v[:-1] - v[1:]).T)
    km2 = ct.kerr_matrix(rescaled, DEVICE.l_j, 6)
    np.testing.assert_allclose(km2.k_matrix, km_ref.k_matrix, rtol=1e-12)


def test_cross_kerr_bounded_by_geometric_mean():
    # Cauchy-Schwarz on the junction overlap sums bounds the direct pair
    # coefficient by 4 sqrt(K_a K_b) of the per-photon shifts
    spec = ct.array_modes(DEVICE)
    km = ct.kerr_matrix(spec, DEVICE.l_j, 8)
    shifts = 2 * np.diag(km.k_matrix)
    for k in range(4):
        for l in range(k + 1, 4):
            pair = ct.two_mode_cross_kerr(km, k, l)
            bound = ct.geometric_cross_kerr(shifts[k], shifts[l])
            assert 0 < pair <= bound * (1 + 1e-12)


def test_device_kerr_values_match_quoted_shifts():
    # quoted self-Kerr values correspond to the per-photon frequency
    # pull 2K of the quartic coefficient; +-15% window
    spec = ct.array_modes(DEVICE)
    km = ct.kerr_matrix(spec, DEVICE.l_j, 8)
    shift_mhz = 2 * np.diag(km.k_mhz())
    assert shift_mhz[0] == pytest.approx(0.5, rel=0.15)
    assert shift_mhz[1] == pytest.approx(5.7, rel=0.15)


def test_parameter_validation():
    with pytest.raises(ValueError):
        ct.CircuitParams(0, 1e-9, 1e-15, 1e-15, 1e-15, 1e-15, 1e-15)
    with pytest.raises(ValueError):
        ct.CircuitParams(3, -1e-9, 1e-15, 1e-15, 1e-15, 1e-15, 1e-15)


def test_kerr_mode_count_guard():
    spec = ct.array_modes(tiny_caps(3))
    with pytest.raises(ValueError):
        ct.kerr_matrix(spec, 1.9e-9, 10)
