import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import eigh_tridiagonal, expm

from cqpslab.circuit import FluxoniumParams
from cqpslab.errors import ConvergenceError, ValidationError
from cqpslab.presets import ILLUSTRATION_PARAMS, load_qubit_preset, load_table
from cqpslab.spectrum import (
    BasisConfig,
    basis_functions,
    dispersion_hellmann_feynman,
    eigensystem,
    exp_i_theta,
    flux_dispersion,
    flux_sweep,
    hamiltonian_matrix,
    potential,
    transition_frequency,
    translation_matrix,
    wavefunctions_on_grid,
)


def fd_energies(p, k=4, L=6.0, M=6001):
    """Second-order finite differences on a phase grid (independent oracle)."""
    phi = np.linspace(-L * np.pi, L * np.pi, M)
    h = phi[1] - phi[0]
    diag = 8 * p.E_C / h**2 + potential(p, phi)
    off = np.full(M - 1, -4 * p.E_C / h**2)
    return eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))[0]


def fd_energies_with_ng(p, n_g, k=4, L=6.0, M=3001):
    # complex Hermitian build of 4 E_C (-i d/dphi - n_g)^2, no gauge trick
    phi = np.linspace(-L * np.pi, L * np.pi, M)
    h = phi[1] - phi[0]
    H = np.diag(8 * p.E_C / h**2 + 4 * p.E_C * n_g**2 + potential(p, phi)).astype(complex)
    hop = -4 * p.E_C / h**2
    drift = 4 * p.E_C * n_g * 1j / h  # -2 n_g (-i d/dphi) term, central difference
    i = np.arange(M - 1)
    H[i, i + 1] = hop + drift
    H[i + 1, i] = hop - drift
    return np.linalg.eigvalsh(H)[:k]


@pytest.mark.parametrize("phi_ext", [0.0, 0.25, 0.5])
def test_energies_match_finite_difference(phi_ext):
    p = ILLUSTRATION_PARAMS.at_flux(phi_ext)
    e = eigensystem(p, k=4).energies
    fd = fd_energies(p)
    assert np.allclose(np.diff(e), np.diff(fd), atol=2e-3)


def test_charge_offset_leaves_spectrum_unchanged():
    p = ILLUSTRATION_PARAMS.at_flux(0.37)
    ref = fd_energies_with_ng(p, 0.0)
    shifted = fd_energies_with_ng(p, 0.3)
    assert np.allclose(ref, shifted, atol=5e-3)
    e0 = eigensystem(p, k=4, check_convergence=False).energies
    e1 = eigensystem(FluxoniumParams(p.E_J, p.E_C, p.E_L, p.phi_ext, n_g=0.3), k=4, check_convergence=False).energies
    assert np.array_equal(e0, e1)


def test_exp_i_theta_against_expm():
    zpf, dim, big = 1.3, 30, 160
    a = np.diag(np.sqrt(np.arange(1, big)), 1)
    ref = expm(1j * zpf * (a + a.T))[:dim, :dim]
    c, s = exp_i_theta(zpf, dim)
    assert np.allclose(c + 1j * s, ref, atol=1e-12)


@pytest.mark.parametrize("shift", [2 * np.pi, -2 * np.pi, 0.7])
def test_translation_against_expm(shift):
    zpf, dim, big = 1.1, 25, 160
    a = np.diag(np.sqrt(np.arange(1, big)), 1)
    beta = shift / (2 * zpf)
    ref = expm(beta * (a.T - a))[:dim, :dim]
    assert np.allclose(translation_matrix(shift, zpf, dim), ref, atol=1e-12)


def test_translation_moves_wavefunction():
    p = ILLUSTRATION_PARAMS
    sol = eigensystem(p, k=2, check_convergence=False)
    phi = np.linspace(-3, 3, 7)
    shift = 0.4
    T = translation_matrix(shift, sol.phi_zpf, sol.basis.dimension)
    moved = (T @ sol.states[:, 0]) @ basis_functions(sol, phi)
    direct = sol.states[:, 0] @ basis_functions(sol, phi - shift)
    assert np.allclose(moved, direct, atol=1e-10)


def test_hamiltonian_symmetric():
    h = hamiltonian_matrix(ILLUSTRATION_PARAMS.at_flux(0.31), BasisConfig(60))
    assert np.array_equal(h, h.T)


@given(st.floats(0.0, 1.0))
def test_flux_symmetry_and_period(phi):
    p = ILLUSTRATION_PARAMS
    b = BasisConfig(80)
    f = flux_sweep(p, [phi, -phi, phi + 1.0], basis=b)["f01_GHz"]
    assert np.isclose(f[0], f[1], atol=1e-9)
    assert np.isclose(f[0], f[2], atol=1e-9)


def test_sweet_spot_dispersion_zero():
    sol = eigensystem(ILLUSTRATION_PARAMS.at_flux(0.5), k=3)
    assert abs(dispersion_hellmann_feynman(sol)) < 1e-9


@pytest.mark.parametrize("phi", [0.1, 0.3, 0.42, 0.47])
def test_hellmann_feynman_matches_finite_difference(phi):
    p = load_qubit_preset("Q6").hamiltonian.at_flux(phi)
    sol = eigensystem(p, k=3, check_convergence=False)
    assert np.isclose(dispersion_hellmann_feynman(sol), flux_dispersion(p), rtol=1e-7, atol=1e-8)


def test_q6_dispersion_golden():
    p = load_qubit_preset("Q6").hamiltonian.at_flux(0.42)
    sol = eigensystem(p, k=3, check_convergence=False)
    assert np.isclose(dispersion_hellmann_feynman(sol), -8.51177163575166, rtol=1e-9)


GOLDEN_F01 = {"Q1": 0.412826, "Q2": 0.416149, "Q3": 0.468514, "Q4": 0.425117, "Q5": 0.436789, "Q6": 0.453928}


@pytest.mark.parametrize("name", sorted(GOLDEN_F01))
def test_half_flux_transition_frequencies(name):
    sol = eigensystem(load_qubit_preset(name).hamiltonian, k=2)
    f = transition_frequency(sol, 0, 1)
    assert abs(f - GOLDEN_F01[name]) < 1e-6
    measured = load_table()["qubits"][name]["f01_GHz"]
    assert abs(f - measured) / measured < 0.02


def test_grid_wavefunctions_normalized():
    sol = eigensystem(ILLUSTRATION_PARAMS, k=3)
    g = wavefunctions_on_grid(sol)
    assert np.allclose(g.norms(), 1.0, atol=1e-6)
    overlap = np.trapezoid(g.values[0].conj() * g.values[1], g.phi)
    assert abs(overlap) < 1e-8


def test_grid_errors():
    sol = eigensystem(ILLUSTRATION_PARAMS, k=3)
    with pytest.raises(ConvergenceError):
        wavefunctions_on_grid(sol, L=0.5)
    with pytest.raises(ConvergenceError):
        wavefunctions_on_grid(sol, M=40)


def test_convergence_check():
    p = FluxoniumParams(3.2, 1.4, 0.02, 0.5)
    with pytest.raises(ConvergenceError) as err:
        eigensystem(p, BasisConfig(30), k=6)
    assert "doubled_energies" in err.value.details
    with pytest.raises(ValidationError):
        eigensystem(ILLUSTRATION_PARAMS, BasisConfig(30), k=11)
    with pytest.raises(ValidationError):
        BasisConfig(10)
    with pytest.raises(ValidationError):
        transition_frequency(eigensystem(ILLUSTRATION_PARAMS, k=2), 1, 1)


def test_dispersion_step_validation():
    with pytest.raises(ValidationError):
        flux_dispersion(ILLUSTRATION_PARAMS, dphi=0.1)
