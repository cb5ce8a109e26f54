import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cqpslab.dephasing import (
    LN2,
    FluxNoiseModel,
    coherence_vs_flux,
    flux_dephasing_rate,
    gaussian_decay,
    qubit_phase_slip_Hz,
    ramsey_flux_amplitude,
    total_ramsey_rate,
)
from cqpslab.errors import ValidationError
from cqpslab.presets import all_qubits, load_qubit_preset

GOLDEN_T_CQPS = {
    "Q1": 1.468434240563115e-07,
    "Q2": 3.379065407191041e-07,
    "Q3": 7.051829360657212e-07,
    "Q4": 1.6720449285236048e-06,
    "Q5": 4.123008125747932e-06,
    "Q6": 0.001580051584131493,
}


def test_echo_filter_factor_is_ln2():
    # 1/f noise through the Hahn-echo filter: int_0^inf sin^4(x) / x^3 dx
    f = lambda x: mpmath.sin(x) ** 4 / x**3  # noqa: E731
    val = mpmath.quad(f, [0, 1]) + mpmath.quadosc(f, [1, mpmath.inf], period=mpmath.pi)
    assert abs(float(val) - LN2) < 1e-6


def test_ramsey_amplitude():
    assert math.isclose(ramsey_flux_amplitude(3.35), 11.15623178951315, rel_tol=1e-14)
    m = FluxNoiseModel.ramsey(3.35)
    assert math.isclose(m.effective_amplitude, ramsey_flux_amplitude(3.35), rel_tol=1e-14)


def test_echo_rate_golden():
    rate = flux_dephasing_rate(FluxNoiseModel.echo(4.5), -8.51177163575166)
    assert math.isclose(rate, 200366.48338145425, rel_tol=1e-12)


@given(st.floats(0.1, 50), st.floats(-100, 100))
def test_flux_rate_linear(A, d):
    r1 = flux_dephasing_rate(FluxNoiseModel.echo(A), d)
    r2 = flux_dephasing_rate(FluxNoiseModel.echo(2 * A), d)
    assert r1 >= 0 and math.isclose(r2, 2 * r1, rel_tol=1e-12, abs_tol=1e-300)


@given(st.floats(0, 1e9), st.floats(0, 1e9))
def test_quadrature_sum(a, b):
    bud = total_ramsey_rate(a, b)
    assert bud.gamma_total >= max(a, b)
    assert bud.gamma_total <= a + b + 1e-6


def test_budget_infinite_times():
    bud = total_ramsey_rate(0.0, 0.0)
    assert bud.T_total == math.inf and bud.T_cqps == math.inf
    with pytest.raises(ValidationError):
        total_ramsey_rate(-1.0, 0.0)


def test_gaussian_decay_shape():
    t = np.array([0.0, 1.0])
    v = gaussian_decay(t, math.inf, 1.0, 0.0)
    assert np.allclose(v, [1.0, math.exp(-1)])
    with pytest.raises(ValidationError):
        gaussian_decay(t, 0.0, 1.0, 0.0)


@pytest.mark.parametrize("name", sorted(GOLDEN_T_CQPS))
def test_half_flux_cqps_times(name):
    t = coherence_vs_flux(load_qubit_preset(name), [0.5])
    assert math.isclose(t.T_cqps_s[0], GOLDEN_T_CQPS[name], rel_tol=1e-9)


def test_measured_ramsey_times_track_prediction():
    # Q1..Q5 are CQPS limited at half flux; prediction within a factor 1.5
    for q in all_qubits()[:5]:
        t = coherence_vs_flux(q, [0.5])
        ratio = t.T_cqps_s[0] / (q.reference["T_phiR_us"] * 1e-6)
        assert 1 / 1.5 < ratio < 1.5


def test_q1_cqps_dominates_at_sweet_spot():
    t = coherence_vs_flux(load_qubit_preset("Q1"), [0.5])
    assert t.gamma_cqps[0] / t.gamma_flux[0] > 5


def test_phase_slip_amplitude_from_preset():
    assert math.isclose(qubit_phase_slip_Hz(load_qubit_preset("Q1")), 0.0002539572391423403e9, rel_tol=1e-12)


def test_table_columns_and_budgets():
    t = coherence_vs_flux(load_qubit_preset("Q3"), [0.45, 0.5, 0.55])
    cols = t.columns()
    assert set(cols) == {"phi_ext", "f01_GHz", "T_cqps_s", "T_flux_s", "T_total_s"}
    assert np.allclose(cols["T_total_s"], [b.T_total for b in t.budgets()])
    assert math.isclose(t.T_flux_s[0], t.T_flux_s[2], rel_tol=1e-6)
    assert np.all(t.T_total_s <= np.minimum(t.T_cqps_s, t.T_flux_s))


def test_model_validation():
    with pytest.raises(ValidationError):
        FluxNoiseModel(0.0)
    with pytest.raises(ValidationError):
        flux_dephasing_rate(FluxNoiseModel(1.0), float("nan"))
