import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cqpslab.errors import ConvergenceError, OptimizationError, ValidationError
from cqpslab.numerics import (
    SpectralDensity,
    average_spectra,
    householder_tridiagonal,
    log_bin,
    make_rng,
    multistart,
    nelder_mead,
    next_pow2,
    periodogram,
    spawn_rngs,
    symmetric_eigen,
    tridiagonal_ql,
)


def random_symmetric(n, seed):
    a = np.random.default_rng(seed).standard_normal((n, n))
    return (a + a.T) / 2


@pytest.mark.parametrize("n", [1, 2, 7, 50])
def test_ql_matches_lapack(n):
    m = random_symmetric(n, n)
    w1, v1 = symmetric_eigen(m, method="lapack")
    w2, v2 = symmetric_eigen(m, method="ql")
    assert np.allclose(w1, w2, atol=1e-12 * max(1, np.abs(w1).max()))
    assert np.allclose(v2.T @ v2, np.eye(n), atol=1e-12)
    assert np.allclose(m @ v2, v2 * w2, atol=1e-11)


def test_eigen_partial_and_order():
    m = random_symmetric(30, 1)
    w, v = symmetric_eigen(m, k=4)
    assert w.shape == (4,) and v.shape == (30, 4)
    assert np.all(np.diff(w) >= 0)
    assert np.allclose(w, np.linalg.eigvalsh(m)[:4])


def test_eigen_rejects_asymmetric():
    m = np.arange(9.0).reshape(3, 3)
    with pytest.raises(ValidationError):
        symmetric_eigen(m)


def test_householder_reconstructs():
    m = random_symmetric(12, 3)
    d, e, q = householder_tridiagonal(m)
    t = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.allclose(q @ t @ q.T, m, atol=1e-12)


def test_ql_iteration_cap():
    d = np.array([1.0, 2.0, 3.0, 4.0])
    e = np.array([1.0, 1.0, 1.0])
    with pytest.raises(ConvergenceError):
        tridiagonal_ql(d, e, max_iter=0)


@given(st.integers(min_value=2, max_value=20), st.integers(0, 10_000))
def test_eigen_trace_invariant(n, seed):
    m = random_symmetric(n, seed)
    w, _ = symmetric_eigen(m, method="ql")
    assert np.isclose(w.sum(), np.trace(m), atol=1e-10 * n)


def test_periodogram_parseval():
    x = make_rng(4).standard_normal(1000)
    sd = periodogram(x, 0.01)
    assert np.isclose(sd.total_power(), np.var(x), rtol=1e-12)


def test_periodogram_padded_parseval_and_grid():
    x = make_rng(5).standard_normal(1000)
    sd = periodogram(x, 0.5, pad=True)
    assert sd.n_fft == 1024 and sd.padded
    assert np.isclose(sd.df, 1 / (1024 * 0.5))
    assert np.isclose(sd.total_power(), np.var(x), rtol=1e-12)


def test_periodogram_sine_peak():
    dt = 1e-3
    t = np.arange(4096) * dt
    x = np.sin(2 * np.pi * 50.0 * t)
    sd = periodogram(x, dt)
    assert abs(sd.freqs[np.argmax(sd.psd)] - 50.0) <= sd.df


def test_periodogram_errors():
    with pytest.raises(ValidationError):
        periodogram([1.0, 2.0], 1.0)
    with pytest.raises(ValidationError):
        periodogram(np.zeros(10), 0.0)


def test_average_and_log_bin():
    rng = make_rng(6)
    sds = [periodogram(rng.standard_normal(512), 1.0) for _ in range(4)]
    avg = average_spectra(sds)
    assert avg.averages == 4
    assert np.allclose(avg.psd, np.mean([s.psd for s in sds], axis=0))
    c, m, n = log_bin(avg, avg.freqs[1], avg.freqs[-1], 5)
    assert np.all(np.diff(c) > 0) and n.sum() <= avg.freqs.size
    with pytest.raises(ValidationError):
        average_spectra([sds[0], periodogram(rng.standard_normal(256), 1.0)])


def test_next_pow2():
    assert [next_pow2(n) for n in (1, 2, 3, 1000, 1024)] == [1, 2, 4, 1024, 1024]


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


def test_nelder_mead_rosenbrock():
    r = nelder_mead(rosenbrock, np.array([-1.0, 1.0]), xatol=1e-10, fatol=1e-16, restarts=2)
    assert np.allclose(r.x, [1, 1], atol=1e-6)
    assert r.converged


def test_nelder_mead_history_monotone():
    r = nelder_mead(rosenbrock, np.array([-1.2, 1.0]))
    assert np.all(np.diff(r.history) <= 0)


def test_nelder_mead_nan_reports_point():
    def f(x):
        return np.nan if x[0] > 0.5 else (x[0] - 1) ** 2

    with pytest.raises(OptimizationError) as err:
        nelder_mead(f, np.array([0.0]), initial_step=np.array([0.3]))
    assert err.value.point is not None


def test_multistart_keeps_best():
    def f(x):
        return float(np.sin(3 * x[0]) + 0.1 * x[0] ** 2)

    r = multistart(f, [np.array([2.0]), np.array([-0.5])])
    assert r.fun < -0.9


def test_rng_streams():
    a = make_rng(7).random(5)
    b = make_rng(7).random(5)
    assert np.array_equal(a, b)
    s1 = [g.random() for g in spawn_rngs(7, 3)]
    s2 = [g.random() for g in spawn_rngs(7, 3)]
    assert s1 == s2 and len(set(s1)) == 3
    with pytest.raises(ValidationError):
        make_rng(-1)


def test_spectral_density_fields():
    sd = SpectralDensity(np.array([0.0, 1.0]), np.array([0.0, 2.0]), 0.5, 2, 2)
    assert sd.df == 1.0 and not sd.padded
