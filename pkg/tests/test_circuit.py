import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cqpslab.circuit import (
    CONSTANTS,
    ArraySpec,
    FluxoniumParams,
    JunctionGeometry,
    JunctionParams,
    array_for_inductive_energy,
    array_inductive_energy,
    capacitance_from_charging_energy,
    charging_energy_from_capacitance,
    critical_current_from_josephson_energy,
    josephson_energy_from_current,
    junction_from_geometry,
    plasma_frequency,
    reduced_impedance,
)
from cqpslab.errors import ValidationError
from cqpslab.presets import load_qubit_preset


def test_constants():
    # e^2/2h per fF and Phi0/2pi h per uA
    assert math.isclose(CONSTANTS.charging_constant_GHz_fF, 19.3702, rel_tol=1e-5)
    assert math.isclose(CONSTANTS.josephson_constant_GHz_per_uA, 496.6, rel_tol=1e-3)
    assert math.isclose(CONSTANTS.resistance_quantum, 6453.2, rel_tol=1e-4)


def test_q1_array_junction_from_geometry():
    j = junction_from_geometry(JunctionGeometry(1.85, 0.2, 49.0, 0.15))
    assert math.isclose(j.capacitance, 18.13, rel_tol=1e-12)
    assert math.isclose(j.E_C, 19.3702 / 18.13, rel_tol=1e-5)
    assert math.isclose(j.critical_current, 0.0555, rel_tol=1e-12)


@pytest.mark.parametrize("name,z", [("Q1", 0.101), ("Q2", 0.094), ("Q3", 0.089), ("Q4", 0.083), ("Q5", 0.079), ("Q6", 0.057)])
def test_table_impedances(name, z):
    q = load_qubit_preset(name)
    assert abs(reduced_impedance(q.array().junction_params) - z) < 6e-4


@given(st.floats(0.1, 1e4))
def test_capacitance_round_trip(c):
    assert math.isclose(capacitance_from_charging_energy(charging_energy_from_capacitance(c)), c, rel_tol=1e-13)


@given(st.floats(1e-4, 1e3))
def test_current_round_trip(i):
    assert math.isclose(critical_current_from_josephson_energy(josephson_energy_from_current(i)), i, rel_tol=1e-13)


@given(st.floats(0.1, 100), st.floats(0.01, 10))
def test_impedance_and_plasma_frequency(ej, ec):
    j = JunctionParams(ej, ec)
    assert math.isclose(4 / (math.pi * reduced_impedance(j)), math.sqrt(8 * ej / ec), rel_tol=1e-12)
    assert math.isclose(plasma_frequency(j) ** 2, 8 * ej * ec, rel_tol=1e-12)


def test_array_inductance():
    a = ArraySpec(N=100, junction=JunctionParams(25.0, 1.0))
    assert array_inductive_energy(a) == 0.25
    b = array_for_inductive_energy(JunctionGeometry(2.0, 0.2, 49, 0.15), 85, 0.25)
    assert math.isclose(b.junction_params.E_J, 21.25)


@pytest.mark.parametrize(
    "kwargs",
    [dict(length=0, width=0.2, c_s=49, J_c=0.15), dict(length=1, width=-1, c_s=49, J_c=0.15), dict(length=1, width=0.2, c_s=49, J_c=float("nan"))],
)
def test_geometry_validation(kwargs):
    with pytest.raises(ValidationError):
        JunctionGeometry(**kwargs)


def test_param_validation():
    with pytest.raises(ValidationError):
        FluxoniumParams(3.0, 0.0, 0.2)
    with pytest.raises(ValidationError):
        FluxoniumParams(3.0, 1.0, 0.2, n_g=1.0)
    with pytest.raises(ValidationError):
        ArraySpec(N=0, junction=JunctionParams(1, 1))
    with pytest.raises(ValidationError):
        ArraySpec(N=2, junction=JunctionParams(1, 1), epsilon_override=(1.0,))
    assert FluxoniumParams(3, 1, 0.2).at_flux(0.3).phi_ext == 0.3


def test_presets():
    q1 = load_qubit_preset("Q1")
    h = q1.hamiltonian
    assert (h.E_J, h.E_C, h.E_L, q1.N, q1.junction_length, q1.A_phi) == (3.22, 1.41, 0.25, 85, 1.85, 3.35)
    q6 = load_qubit_preset("Q6")
    h = q6.hamiltonian
    assert (h.E_J, h.E_C, h.E_L, q6.N, q6.junction_length, q6.A_phi) == (3.2, 1.39, 0.3, 139, 3.0, 4.5)
    with pytest.raises(ValidationError):
        load_qubit_preset("Q7")
    with pytest.raises(ValidationError):
        q1.array("nonsense")
    assert q1.array("geometry").junction_params.E_J > q1.array().junction_params.E_J


@pytest.mark.parametrize("name,z", [("Q1", 0.101), ("Q6", 0.057)])
def test_geometry_route_impedance_within_twenty_percent(name, z):
    q = load_qubit_preset(name)
    zg = reduced_impedance(q.array("geometry").junction_params)
    assert abs(zg / z - 1) < 0.2


def test_impedance_inverse_in_area():
    a = junction_from_geometry(JunctionGeometry(1.0, 0.2, 49.0, 0.15))
    b = junction_from_geometry(JunctionGeometry(2.0, 0.2, 49.0, 0.15))
    assert math.isclose(reduced_impedance(a) / reduced_impedance(b), 2.0, rel_tol=1e-14)
