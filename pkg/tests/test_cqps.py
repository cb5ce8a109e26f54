import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cqpslab.circuit import FluxoniumParams
from cqpslab.cqps import (
    ChargeConfiguration,
    aggregated_charges,
    basis_overlap,
    cqps_dephasing_rate,
    cqps_energy_batch,
    cqps_time,
    frequency_shift,
    sample_cqps_energies,
    sigma_f,
    structure_factor,
    structure_factor_sweep,
    total_cqps_energy,
)
from cqpslab.errors import ValidationError
from cqpslab.numerics import make_rng
from cqpslab.presets import ILLUSTRATION_PARAMS
from cqpslab.spectrum import BasisConfig, eigensystem, phi_zpf

offsets = st.lists(st.floats(0.0, 0.999999), min_size=2, max_size=30)


def naive_energy(eps, n):
    total = 0j
    for j in range(1, len(n)):
        total += eps * np.exp(-2j * np.pi * sum(n[:j]))
    return total


@given(offsets)
def test_energy_matches_naive_sum(n):
    e = total_cqps_energy(0.7, ChargeConfiguration(tuple(n))).value
    assert abs(e - naive_energy(0.7, n)) < 1e-10


@given(offsets, st.floats(0.0, 0.999))
def test_last_island_does_not_enter(n, last):
    a = total_cqps_energy(1.0, ChargeConfiguration(tuple(n))).value
    b = total_cqps_energy(1.0, ChargeConfiguration(tuple(n[:-1]) + (last,))).value
    assert a == b


@given(offsets)
def test_energy_bounded_by_sum_of_amplitudes(n):
    cfg = ChargeConfiguration(tuple(n))
    eps = np.linspace(0.1, 1.0, cfg.N)
    assert abs(total_cqps_energy(eps, cfg).value) <= eps.sum() + 1e-12


def test_uniform_zero_charges_add_coherently():
    cfg = ChargeConfiguration((0.0,) * 11)
    assert total_cqps_energy(2.0, cfg).value == 20.0


def test_batch_matches_single():
    rng = make_rng(1)
    batch = rng.random((50, 12))
    vals = cqps_energy_batch(0.3, batch)
    single = [total_cqps_energy(0.3, ChargeConfiguration(tuple(r))).value for r in batch]
    assert np.allclose(vals, single, atol=1e-14)


def test_aggregated_charges_wrap():
    eta = aggregated_charges([0.6, 0.6, 0.6, 0.1])
    assert np.allclose(eta, [0.6, 0.2, 0.8])


def test_clt_spread():
    eps, N = 1.0, 100
    e = sample_cqps_energies(eps, N, 40000, make_rng(2))
    assert abs(np.std(e.real) / math.sqrt(N / 2) - 1) < 0.02
    assert abs(np.std(e.imag) / math.sqrt(N / 2) - 1) < 0.02
    assert abs(np.mean(e)) < 0.1


def test_monte_carlo_ramsey_decay_rate():
    N, eps, F = 85, 1e5, 0.9
    rng = make_rng(3)
    df = np.array([frequency_shift(E, F) for E in sample_cqps_energies(eps, N, 20000, rng)])
    assert abs(np.std(df) / sigma_f(N, eps, F) - 1) < 0.03
    t = 1.0 / cqps_dephasing_rate(N, eps, F)
    assert abs(np.mean(np.cos(2 * np.pi * df * t)) - math.exp(-1)) < 0.02


def test_configuration_validation():
    with pytest.raises(ValidationError):
        ChargeConfiguration((0.5,))
    with pytest.raises(ValidationError):
        ChargeConfiguration((0.5, 1.0))
    cfg = ChargeConfiguration.wrapped([1.25, -0.25, 3.0])
    assert cfg.offsets == (0.25, 0.75, 0.0)
    with pytest.raises(ValidationError):
        total_cqps_energy([1.0, 1.0, 1.0], cfg)
    with pytest.raises(ValidationError):
        total_cqps_energy(-1.0, cfg)
    assert cfg.digest() == ChargeConfiguration((0.25, 0.75, 0.0)).digest()


@pytest.mark.parametrize("E_L", [0.2, 0.5, 1.0])
def test_harmonic_oscillator_overlaps(E_L):
    # without the junction the ground-state overlap is exp(-pi^2 / (2 zpf^2))
    p = FluxoniumParams(0.0, 1.0, E_L, 0.3)
    zpf = phi_zpf(1.0, E_L)
    x = (np.pi / zpf) ** 2
    F = structure_factor(p, method="basis", check_convergence=False)
    assert math.isclose(F.overlaps[0].real, math.exp(-x / 2), rel_tol=1e-12)
    assert math.isclose(F.value.real, -x * math.exp(-x / 2), rel_tol=1e-10)


def test_grid_and_basis_agree():
    p = ILLUSTRATION_PARAMS.at_flux(0.5)
    g = structure_factor(p, method="grid")
    b = structure_factor(p, method="basis")
    assert abs(g.value - b.value) < 1e-9
    assert math.isclose(b.value.real, -0.9251313110531396, rel_tol=1e-9)


def test_charge_offset_phase():
    p = FluxoniumParams(3.2, 1.4, 0.25, 0.5, n_g=0.2)
    F = structure_factor(p, method="grid")
    F0 = structure_factor(ILLUSTRATION_PARAMS.at_flux(0.5), method="basis")
    assert abs(F.value - F0.value * np.exp(-2j * np.pi * 0.2)) < 1e-9


@given(st.floats(0.0, 1.0))
def test_overlaps_are_real_and_bounded(phi):
    sol = eigensystem(ILLUSTRATION_PARAMS.at_flux(phi), BasisConfig(100), k=2, check_convergence=False)
    for lvl in (0, 1):
        o = basis_overlap(sol, lvl)
        assert o.imag == 0 and abs(o) <= 1 + 1e-12


def test_structure_factor_symmetric_in_flux():
    F = structure_factor_sweep(ILLUSTRATION_PARAMS, [0.3, 0.7], BasisConfig(100))
    assert abs(F[0] - F[1]) < 1e-10


def test_rates():
    assert cqps_time(4, 0.0, 1.0) == math.inf
    assert math.isclose(cqps_dephasing_rate(4, 1.0, 0.5), math.pi)
    assert math.isclose(cqps_dephasing_rate(9, 2.0, 1.0), math.sqrt(2) * math.pi * sigma_f(9, 2.0, 1.0))
    with pytest.raises(ValidationError):
        sigma_f(0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        structure_factor(ILLUSTRATION_PARAMS, method="spline")
