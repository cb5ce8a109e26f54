import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from cqpslab.errors import ValidationError
from cqpslab.numerics import SpectralDensity, make_rng
from cqpslab.paritysim import (
    ParityState,
    SimConfig,
    fit_lorentzian,
    init_state,
    iter_positions,
    loglog_slope,
    lorentzian,
    re_cqps_reference,
    run,
    simulate_trace,
    step,
)

SMALL = dict(N=12, n_qp=3, tau_qp=0.01, dt=5e-4, duration=5.0, realizations=2)


def test_fast_path_matches_reference_sum():
    cfg = SimConfig(**SMALL)
    fast = simulate_trace(cfg, make_rng(11), chunk=777)
    rng = make_rng(11)
    state = init_state(cfg, rng)
    ref = []
    for _, X in iter_positions(state, cfg, rng, cfg.n_samples, chunk=4096):
        for i in range(X.shape[1]):
            ref.append(re_cqps_reference(ParityState(state.offsets, X[:, i])))
    assert np.max(np.abs(fast - np.array(ref))) < 1e-11


def test_zero_drift_path_matches_fast_path():
    cfg = SimConfig(**SMALL)
    a = simulate_trace(cfg, make_rng(5))
    b = simulate_trace(cfg, make_rng(5), drift=lambda t: np.zeros((t.size, cfg.N + 1)))
    assert np.max(np.abs(a - b)) < 1e-11


@settings(max_examples=15)
@given(st.integers(1, 20), st.integers(0, 6), st.integers(0, 2**31))
def test_trace_bounded_and_qp_conserved(N, nqp, seed):
    nqp = min(nqp, N)
    cfg = SimConfig(N=N, n_qp=nqp, duration=5.0)
    rng = make_rng(seed)
    state = init_state(cfg, rng)
    x = simulate_trace(cfg, make_rng(seed))
    assert np.all(np.abs(x) <= N + 1e-9)
    for _, X in iter_positions(state, cfg, rng, 2000):
        assert X.shape[0] == nqp
        assert np.all((X >= 0) & (X < N))
        # each quasiparticle moves at most one island per step
        d = np.mod(np.diff(X, axis=1), N)
        assert np.all((d == 0) | (d == 1) | (d == N - 1))


def test_no_quasiparticles_gives_constant_trace():
    cfg = SimConfig(N=10, n_qp=0, duration=5.0, realizations=1)
    x = simulate_trace(cfg, make_rng(0))
    assert np.all(x == x[0])
    r = run(cfg)
    assert np.allclose(r.spectrum.psd[1:], 0.0, atol=1e-20)


def test_occupancy_uniform():
    cfg = SimConfig(N=9, n_qp=9, tau_qp=0.01, dt=5e-4, duration=200.0)
    rng = make_rng(21)
    state = init_state(cfg, rng)
    counts = np.zeros(cfg.N)
    # samples 2 s apart are far beyond the ring mixing time
    for s, X in iter_positions(state, cfg, rng, cfg.n_samples):
        idx = np.arange(X.shape[1])[(s + np.arange(X.shape[1])) % 4000 == 0]
        counts += np.bincount(X[:, idx].ravel(), minlength=cfg.N)
    assert chisquare(counts).pvalue > 1e-3


def test_hop_rate():
    cfg = SimConfig(N=50, n_qp=20, duration=100.0)
    rng = make_rng(3)
    state = init_state(cfg, rng)
    moved = total = 0
    for _, X in iter_positions(state, cfg, rng, cfg.n_samples):
        moved += np.count_nonzero(np.diff(X, axis=1))
        total += X.shape[0] * (X.shape[1] - 1)
    assert abs(moved / total / cfg.hop_probability - 1) < 0.02


def test_reference_step_hop_rate():
    cfg = SimConfig(N=50, n_qp=50, duration=5.0)
    rng = make_rng(4)
    s = init_state(cfg, rng)
    moved = 0
    for _ in range(400):
        n = step(s, cfg, rng)
        moved += np.count_nonzero(n.positions != s.positions)
        s = n
    assert abs(moved / (400 * 50) / cfg.hop_probability - 1) < 0.15
    assert math.isclose(s.time, 400 * cfg.dt)


def test_run_deterministic_and_thread_independent():
    cfg = SimConfig(**SMALL, seed=9)
    a = run(cfg)
    b = run(cfg, threads=2)
    assert np.array_equal(a.spectrum.psd, b.spectrum.psd)
    assert np.array_equal(a.trace, b.trace)
    c = run(SimConfig(**SMALL, seed=10))
    assert not np.array_equal(a.spectrum.psd, c.spectrum.psd)
    assert a.spectrum.averages == 2 and len(a.binned) == 2


def test_memory_guard():
    cfg = SimConfig(N=85, duration=1e4, memory_cap_bytes=1000)
    with pytest.raises(ValidationError):
        run(cfg)


@pytest.mark.parametrize(
    "kw",
    [dict(N=0), dict(n_qp=100, N=10), dict(dt=5e-3), dict(duration=1.0), dict(realizations=0), dict(eps_ps=0.0)],
)
def test_config_validation(kw):
    base = dict(N=85, duration=100.0)
    base.update(kw)
    with pytest.raises(ValidationError):
        SimConfig(**base)


def test_state_charges():
    s = ParityState(np.array([0.1, 0.7, 0.2]), np.array([1, 1, 0]))
    assert np.allclose(s.charges(), [0.6, 0.7, 0.2])
    assert s.copy().positions is not s.positions


def test_lorentzian_fit_recovers_parameters():
    f = np.linspace(0, 1000, 200001)
    sd = SpectralDensity(f, lorentzian(f, 3.0, 4.0), 5e-4, 400000, 400000)
    S0, fc = fit_lorentzian(sd)
    # bin averaging biases the log-binned curve at the 1e-3 level
    assert math.isclose(S0, 3.0, rel_tol=2e-3)
    assert math.isclose(fc, 4.0, rel_tol=2e-3)


def test_loglog_slope_of_power_law():
    f = np.linspace(0, 100, 1001)
    sd = SpectralDensity(f, np.concatenate([[0.0], f[1:] ** -1.7]), 0.005, 2000, 2000)
    assert math.isclose(loglog_slope(sd, 1.0, 50.0), -1.7, rel_tol=1e-9)
    with pytest.raises(ValidationError):
        loglog_slope(sd, 1.0, 1.05)
