import threading

import numpy as np
import pytest
from hypothesis import given, strategies as st

from darklattice.errors import DomainError, InvalidInputError
from darklattice.greens import (ConvolutionCoupling, coupling_matrix, dispersion, dispersion_many, green_tensor,
                                lattice_sum, pair_coupling, radiative_decay_exact, radiative_decay_exact_many)
from darklattice.lattice import CIRCULAR, apply_defects, build_square_lattice

from oracles import gamma_point_decay, green_tensor_mp, pair_coupling_mp

# frozen from pair_coupling_mp((0.3, 0, 0), CIRCULAR)
PAIR_03 = (-0.021597728783919745, 0.5501460468363433)

coord = st.floats(-3, 3, allow_nan=False).filter(lambda v: abs(v) > 1e-3)
vec3 = st.tuples(coord, coord, coord)


def test_green_tensor_at_one_wavelength():
    G = green_tensor(np.array([1.0, 0.0, 0.0]))
    kr = 2 * np.pi
    transverse = np.exp(1j * kr) * (1 + 1j / kr - 1 / kr**2) / (4 * np.pi)
    longitudinal = transverse + np.exp(1j * kr) * (-1 - 3j / kr + 3 / kr**2) / (4 * np.pi)
    assert G[1, 1] == pytest.approx(transverse, abs=1e-15)
    assert G[2, 2] == pytest.approx(transverse, abs=1e-15)
    assert G[0, 0] == pytest.approx(longitudinal, abs=1e-15)
    np.testing.assert_allclose(G, green_tensor_mp((1, 0, 0)), atol=1e-14)


@pytest.mark.parametrize("r", [(0.3, -0.2, 0.7), (0.05, 0.0, 0.0), (2.3, 1.1, 0.0)])
def test_green_tensor_matches_differentiation_oracle(r):
    np.testing.assert_allclose(green_tensor(np.array(r)), green_tensor_mp(r), atol=1e-12, rtol=1e-10)


@given(vec3)
def test_green_tensor_symmetries(r):
    r = np.array(r)
    G = green_tensor(r)
    np.testing.assert_allclose(G, G.T, atol=1e-14)
    np.testing.assert_allclose(G, green_tensor(-r), atol=1e-14)


def test_green_tensor_far_field():
    for dist in (1e3, 1e4):
        G = green_tensor(np.array([0.0, 0.0, dist]))
        amp = np.abs(G) * 4 * np.pi * dist
        assert amp[0, 0] == pytest.approx(1, abs=1e-3)
        assert amp[2, 2] <= 2.01 / (2 * np.pi * dist)  # longitudinal part ~ 2 / kr


def test_green_tensor_origin():
    with pytest.raises(DomainError):
        green_tensor(np.zeros(3))
    with pytest.raises(DomainError):
        pair_coupling((1, 1, 0), (1, 1, 0), CIRCULAR)


def test_pair_coupling_frozen_value():
    J, G = pair_coupling((0.3, 0, 0), (0, 0, 0), CIRCULAR)
    assert (J, G) == pytest.approx(PAIR_03, rel=1e-12)
    assert pair_coupling_mp((0.3, 0, 0), CIRCULAR) == pytest.approx(PAIR_03, rel=1e-12)


@given(vec3)
def test_pair_coupling_parity(r):
    a = pair_coupling(r, (0, 0, 0), CIRCULAR)
    b = pair_coupling((0, 0, 0), r, CIRCULAR)
    assert a == pytest.approx(b, abs=1e-14)


def test_pair_coupling_limits():
    J, G = pair_coupling((1e-4, 0, 0), (0, 0, 0), CIRCULAR)
    assert G == pytest.approx(1.0, abs=1e-6)
    for dist in (1e2, 1e3, 1e4):
        J, G = pair_coupling((dist, 0, 0), (0, 0, 0), CIRCULAR)
        assert np.hypot(J, G) < 2 / (2 * np.pi * dist)


def test_single_atom_matrix():
    M = coupling_matrix(build_square_lattice(1, 1, 0.3)).matrix
    assert M.shape == (1, 1) and M[0, 0] == -0.5j


def test_swapped_pair_is_permutation_conjugate():
    lat = build_square_lattice(2, 1, 0.3)
    M = coupling_matrix(lat).matrix
    P = np.array([[0, 1], [1, 0]])
    np.testing.assert_allclose(P @ M @ P.T, M, atol=1e-15)
    assert M[0, 1] == pytest.approx(complex(PAIR_03[0], -PAIR_03[1] / 2), abs=1e-14)


def test_matrix_entries_match_pair_coupling(lat9):
    M = coupling_matrix(lat9).matrix
    pos = lat9.positions
    for i, j in [(0, 1), (3, 40), (80, 17)]:
        J, G = pair_coupling(pos[i], pos[j], lat9.dipole)
        assert M[i, j] == pytest.approx(complex(J, -G / 2), abs=1e-14)


@given(st.integers(1, 12), st.integers(1, 12), st.floats(0.05, 1.2),
       st.sampled_from(["circular", "x", "z"]))
def test_hermiticity_split_and_psd(nx, ny, d, pol):
    dip = {"circular": CIRCULAR, "x": [1, 0, 0], "z": [0, 0, 1]}[pol]
    M = coupling_matrix(build_square_lattice(nx, ny, d, dip))
    np.testing.assert_allclose(M.J, M.J.T, atol=1e-10)
    np.testing.assert_allclose(M.Gamma, M.Gamma.T, atol=1e-10)
    assert np.linalg.eigvalsh(M.Gamma).min() >= -1e-8
    assert np.trace(M.Gamma) == pytest.approx(nx * ny, abs=1e-12)
    np.testing.assert_array_equal(np.diag(M.matrix), -0.5j)


def test_psd_on_441_atoms(lat21):
    M = coupling_matrix(lat21)
    assert np.linalg.eigvalsh(M.Gamma).min() >= -1e-8


def test_convolution_equals_dense(rng):
    lat = build_square_lattice(13, 11, 0.25)
    e = rng.normal(size=(lat.n_atoms, 2)) + 1j * rng.normal(size=(lat.n_atoms, 2))
    dense = coupling_matrix(lat)
    np.testing.assert_allclose(ConvolutionCoupling(lat) @ e, dense @ e, atol=1e-12)
    holed = apply_defects(lat, [(1, 0), (-3, 2)])
    np.testing.assert_allclose(ConvolutionCoupling(holed) @ e[:-2, 0], coupling_matrix(holed) @ e[:-2, 0],
                               atol=1e-12)


def test_subradiance_at_M_converges():
    d = 0.3
    g75 = abs(dispersion((np.pi / d, np.pi / d), d, CIRCULAR, 75 * d).Gamma)
    g150 = abs(dispersion((np.pi / d, np.pi / d), d, CIRCULAR, 150 * d).Gamma)
    assert g150 < 0.05
    assert g150 < g75


def test_gamma_point_superradiant():
    d = 0.2
    res = dispersion((0.0, 0.0), d, CIRCULAR)
    assert res.Gamma > 1
    assert res.Gamma == pytest.approx(gamma_point_decay(d), rel=1e-4)


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_dispersion_inversion_symmetry(a, b):
    d = 0.3
    k = np.array([a, b]) * np.pi / d
    s = dispersion_many(np.stack([k, -k]), d, CIRCULAR, 40 * d)
    assert s[0] == pytest.approx(s[1], abs=1e-10)


def test_dispersion_outside_zone():
    with pytest.raises(InvalidInputError):
        dispersion((20.0, 0.0), 0.3, CIRCULAR)
    with pytest.raises(InvalidInputError):
        dispersion((0.0, 0.0), 0.3, CIRCULAR, truncation_radius=3.0)


def test_decay_convergence_outside_light_cone():
    """Gamma_k at 2R is smaller than at R for >= 90% of dark momenta (default smooth window)."""
    d = 0.3
    rng = np.random.default_rng(7)
    ks = rng.uniform(-1, 1, size=(400, 2)) * np.pi / d
    ks = ks[np.linalg.norm(ks, axis=1) > 2 * np.pi * 1.15][:100]
    g1 = np.abs(dispersion_many(ks, d, CIRCULAR, 75 * d).imag)
    g2 = np.abs(dispersion_many(ks, d, CIRCULAR, 150 * d).imag)
    assert np.mean(g2 < g1) >= 0.9


def test_exact_decay_oracles():
    for d in (0.2, 0.3, 0.45):
        assert radiative_decay_exact((0, 0), d, CIRCULAR) == pytest.approx(gamma_point_decay(d), rel=1e-12)
    d = 0.3
    assert radiative_decay_exact((np.pi / d, np.pi / d), d, CIRCULAR) == 0.0
    ks = np.array([[1.0, 0.5], [3.0, -2.0], [0.0, 5.0]])
    exact = radiative_decay_exact_many(ks, d, CIRCULAR)
    np.testing.assert_allclose(exact, [radiative_decay_exact(k, d, CIRCULAR) for k in ks], rtol=1e-13)
    windowed = -2 * dispersion_many(ks, d, CIRCULAR).imag
    np.testing.assert_allclose(windowed, exact, rtol=2e-2)


def test_dispersion_cache_thread_safe():
    d = 0.27
    ks = [(0.1 * i, 0.2) for i in range(8)]
    out = [None] * 16

    def work(i):
        out[i] = dispersion(ks[i % 8], d, CIRCULAR, 30 * d)

    threads = [threading.Thread(target=work, args=(i,)) for i in range(16)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for i in range(8):
        assert out[i] is out[i + 8]


def test_lattice_sum_parities_add_up():
    d = 0.3
    ks = np.array([[0.3, 1.0], [5.0, 2.0]])
    whole = lattice_sum(ks, d, CIRCULAR, 40 * d)
    parts = lattice_sum(ks, d, CIRCULAR, 40 * d, parity=0) + lattice_sum(ks, d, CIRCULAR, 40 * d, parity=1)
    np.testing.assert_allclose(parts, whole, atol=1e-12)
