"""Data reduction: spectroscopy and Ramsey fits, frequency-noise spectra,
power-law fits and flux-noise amplitude extraction.

Synthetic generators for the closure tests live here too. Spectral synthesis
draws complex Gaussian Fourier amplitudes (Timmer and Koenig), so a
periodogram of the output is distributed exactly like one of real Gaussian
noise with the target spectrum.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import digamma

from cqpslab.circuit import FluxoniumParams
from cqpslab.errors import IdentifiabilityError, ValidationError
from cqpslab.io import dump_json
from cqpslab.numerics import SpectralDensity, multistart, periodogram, symmetric_eigen
from cqpslab.spectrum import BasisConfig, exp_i_theta, phi_zpf

LN2 = math.log(2.0)
TRANSITIONS = {"01": (0, 1), "02": (0, 2), "12": (1, 2), "03": (0, 3), "13": (1, 3)}


# --------------------------------------------------------------------------
# Data containers
# --------------------------------------------------------------------------


@dataclass
class SpectroscopyDataset:
    phi_ext: np.ndarray
    transition: tuple
    freq_GHz: np.ndarray
    err_GHz: np.ndarray

    def __post_init__(self):
        self.phi_ext = np.asarray(self.phi_ext, dtype=float)
        self.freq_GHz = np.asarray(self.freq_GHz, dtype=float)
        self.err_GHz = np.asarray(self.err_GHz, dtype=float)
        self.transition = tuple(str(t) for t in self.transition)
        n = self.phi_ext.size
        if not (self.freq_GHz.size == n and self.err_GHz.size == n and len(self.transition) == n):
            raise ValidationError("spectroscopy columns have different lengths")
        bad = [t for t in self.transition if t not in TRANSITIONS]
        if bad:
            raise ValidationError(f"unknown transition label(s) {sorted(set(bad))}; use one of {sorted(TRANSITIONS)}")
        if np.any(self.err_GHz <= 0):
            raise ValidationError("err_GHz must be positive")

    def __len__(self):
        return self.phi_ext.size

    def check_identifiable(self, min_rows: int = 6, min_span: float = 0.2):
        if len(self) < min_rows:
            raise IdentifiabilityError(f"need at least {min_rows} rows, got {len(self)}")
        span = float(np.ptp(self.phi_ext))
        if span < min_span:
            raise IdentifiabilityError(f"flux span {span:.3g} is below {min_span} flux quanta")


@dataclass
class RamseyTrace:
    delays_us: np.ndarray
    signal: np.ndarray
    T1_us: float = math.inf
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.delays_us = np.asarray(self.delays_us, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        if self.delays_us.shape != self.signal.shape or self.delays_us.ndim != 1:
            raise ValidationError("delays and signal must be 1-D arrays of equal length")
        if np.any(np.diff(self.delays_us) <= 0):
            raise ValidationError("delays must be strictly increasing")
        if not self.T1_us > 0:
            raise ValidationError("T1 must be positive")


@dataclass
class FrequencySeries:
    t_s: np.ndarray
    f01_MHz: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_s = np.asarray(self.t_s, dtype=float)
        self.f01_MHz = np.asarray(self.f01_MHz, dtype=float)
        if self.t_s.shape != self.f01_MHz.shape or self.t_s.ndim != 1:
            raise ValidationError("t_s and f01_MHz must be 1-D arrays of equal length")
        if np.any(np.diff(self.t_s) <= 0):
            raise ValidationError("lab times must be strictly increasing")

    def centered(self) -> np.ndarray:
        return self.f01_MHz - self.f01_MHz.mean()

    @property
    def gap_ratio(self) -> float:
        d = np.diff(self.t_s)
        return float(d.max() / np.median(d))


# --------------------------------------------------------------------------
# Spectroscopy fit
# --------------------------------------------------------------------------


@dataclass
class SpectrumFit:
    E_J: float
    E_C: float
    E_L: float
    residuals_GHz: np.ndarray
    rms_GHz: float
    converged: bool
    nfev: int

    @property
    def params(self) -> FluxoniumParams:
        return FluxoniumParams(self.E_J, self.E_C, self.E_L)

    def to_dict(self) -> dict:
        return {
            "E_J_GHz": self.E_J,
            "E_C_GHz": self.E_C,
            "E_L_GHz": self.E_L,
            "rms_GHz": self.rms_GHz,
            "converged": self.converged,
            "nfev": self.nfev,
            "residuals_GHz": self.residuals_GHz.tolist(),
        }


def predict_transitions(p: FluxoniumParams, data: SpectroscopyDataset, basis: BasisConfig) -> np.ndarray:
    out = np.empty(len(data))
    top = max(TRANSITIONS[t][1] for t in data.transition) + 1
    uniq, inv = np.unique(data.phi_ext, return_inverse=True)
    dim = int(basis.dimension)
    # flux enters only through the weights of cos(theta) and sin(theta)
    cos_t, sin_t = exp_i_theta(phi_zpf(p.E_C, p.E_L), dim)
    diag = np.sqrt(8.0 * p.E_C * p.E_L) * (np.arange(dim) + 0.5)
    for i, x in enumerate(uniq):
        a = 2.0 * np.pi * x
        h = -p.E_J * (np.cos(a) * cos_t + np.sin(a) * sin_t)
        h[np.diag_indices(dim)] += diag
        w, _ = symmetric_eigen(h, top)
        for r in np.flatnonzero(inv == i):
            lo, hi = TRANSITIONS[data.transition[r]]
            out[r] = w[hi] - w[lo]
    return out


def fit_spectrum(
    data: SpectroscopyDataset,
    start: FluxoniumParams,
    *,
    basis: BasisConfig = BasisConfig(80),
    extra_starts: int = 1,
    rms_threshold_GHz: float | None = None,
    seed: int = 0,
) -> SpectrumFit:
    """Least-squares fit of ``(E_J, E_C, E_L)`` to measured transitions.

    Nelder-Mead in log-parameters from ``start`` plus ``extra_starts``
    randomly perturbed (+-20 %) starts. The fit is flagged non-converged when
    the RMS residual exceeds ``rms_threshold_GHz`` (default: three times the
    RMS quoted uncertainty).
    """
    data.check_identifiable()
    w = 1.0 / data.err_GHz

    def cost(v):
        try:
            p = FluxoniumParams(*np.exp(v))
        except ValidationError:
            return math.inf
        r = (predict_transitions(p, data, basis) - data.freq_GHz) * w
        return float(r @ r)

    x0 = np.log([start.E_J, start.E_C, start.E_L])
    rng = np.random.default_rng(seed)
    starts = [x0] + [x0 + np.log(rng.uniform(0.8, 1.2, 3)) for _ in range(extra_starts)]
    best = multistart(cost, starts, xatol=1e-9, fatol=1e-10, restarts=1)
    p = FluxoniumParams(*np.exp(best.x))
    resid = predict_transitions(p, data, basis) - data.freq_GHz
    rms = float(np.sqrt(np.mean(resid**2)))
    thr = rms_threshold_GHz if rms_threshold_GHz is not None else 3.0 * float(np.sqrt(np.mean(data.err_GHz**2)))
    return SpectrumFit(p.E_J, p.E_C, p.E_L, resid, rms, rms <= thr, best.nfev)


# --------------------------------------------------------------------------
# Ramsey fit
# --------------------------------------------------------------------------


@dataclass
class RamseyFit:
    T_phi_us: float
    f_MHz: float
    phase: float
    amplitude: float
    offset: float
    T1_us: float
    rms: float
    stderr: dict
    flags: list

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fixed_inputs"] = {"T1_us": self.T1_us}
        return d


def _ramsey_basis(t, T1, s, f):
    env = np.exp(-t / (2.0 * T1) - (s * t) ** 2)
    w = 2.0 * np.pi * f * t
    return np.column_stack([env * np.cos(w), env * np.sin(w), np.ones_like(t)])


def _ramsey_linear(t, y, T1, s, f):
    A = _ramsey_basis(t, T1, s, f)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = A @ coef - y
    return coef, float(r @ r)


def _peak_frequency(t, y) -> float:
    dt = float(np.median(np.diff(t)))
    n = t.size
    m = 16 * (1 << (n - 1).bit_length())
    spec = np.abs(np.fft.rfft(y - y.mean(), m))
    freqs = np.fft.rfftfreq(m, dt)
    spec[0] = 0.0
    return float(freqs[np.argmax(spec)])


def fit_ramsey(trace: RamseyTrace) -> RamseyFit:
    """Fit ``offset + A exp(-t/2T1) exp(-(t/T_phi)^2) cos(2 pi f t + phase)``.

    ``T1`` is held fixed. The linear parameters are eliminated by least
    squares; ``1/T_phi`` and ``f`` are optimized by Nelder-Mead starting
    from the periodogram peak. Flags: ``"no-oscillation"`` when the fitted
    frequency is below one cycle per trace, ``"T_phi-unbounded"`` when
    ``T_phi`` exceeds ten times the trace span.
    """
    t, y = trace.delays_us, trace.signal
    if t.size < 20:
        raise ValidationError(f"need at least 20 delays, got {t.size}")
    span = float(t[-1] - t[0]) if t[0] > 0 else float(t[-1])
    T1 = trace.T1_us
    f0 = _peak_frequency(t, y)

    def cost(v):
        return _ramsey_linear(t, y, T1, v[0], v[1])[1]

    starts = [np.array([k / span, f0]) for k in (0.5, 1.0, 2.0, 4.0)]
    best = multistart(cost, starts, xatol=1e-12, fatol=1e-16, restarts=1)
    s, f = best.x
    s = abs(s)
    if f < 0:
        f = -f
    coef, sse = _ramsey_linear(t, y, T1, s, f)
    a, b, c = coef
    amp = math.hypot(a, b)
    phase = math.atan2(-b, a)
    T_phi = math.inf if s == 0 else 1.0 / s
    flags = []
    if f * span < 1.0:
        flags.append("no-oscillation")
    if T_phi > 10.0 * span:
        flags.append("T_phi-unbounded")

    def model(p):
        return p[4] + p[3] * np.exp(-t / (2.0 * T1) - (t / p[0]) ** 2) * np.cos(2 * np.pi * p[1] * t + p[2])

    params = np.array([T_phi, f, phase, amp, c])
    stderr = {}
    if math.isfinite(T_phi) and t.size > 5:
        cov = _covariance(model, params, y)
        names = ("T_phi_us", "f_MHz", "phase", "amplitude", "offset")
        stderr = {k: float(math.sqrt(max(cov[i, i], 0.0))) for i, k in enumerate(names)}
    rms = math.sqrt(sse / t.size)
    return RamseyFit(T_phi, f, phase, amp, float(c), T1, rms, stderr, flags)


def _covariance(model, params, y):
    """Residual-scaled ``(J^T J)^-1`` from a central-difference Jacobian."""
    p = np.asarray(params, dtype=float)
    J = np.empty((y.size, p.size))
    for i in range(p.size):
        h = 1e-6 * max(abs(p[i]), 1e-3)
        up, dn = p.copy(), p.copy()
        up[i] += h
        dn[i] -= h
        J[:, i] = (model(up) - model(dn)) / (2 * h)
    r = model(p) - y
    dof = max(y.size - p.size, 1)
    s2 = float(r @ r) / dof
    return s2 * np.linalg.pinv(J.T @ J)


# --------------------------------------------------------------------------
# Spectra and power laws
# --------------------------------------------------------------------------


def frequency_psd(series: FrequencySeries, max_gap_ratio: float = 1.5) -> SpectralDensity:
    """One-sided PSD of ``f01 - mean`` in MHz^2/Hz, with ``dt`` the median interval."""
    if series.t_s.size < 64:
        raise ValidationError(f"need at least 64 samples, got {series.t_s.size}")
    if series.gap_ratio >= max_gap_ratio:
        raise ValidationError(
            f"sampling gaps up to {series.gap_ratio:.2f} x the median interval; resample onto a uniform grid first"
        )
    dt = float(np.median(np.diff(series.t_s)))
    sd = periodogram(series.centered(), dt)
    sd.metadata.update(series.metadata)
    sd.metadata["units"] = "MHz^2/Hz"
    return sd


@dataclass
class PowerLawFit:
    M: float
    mu: float
    M_err: float
    mu_err: float
    n_bins: int
    n_excluded: int
    band: tuple
    bias_corrected: bool

    def to_dict(self) -> dict:
        return asdict(self)


PERIODOGRAM_ESTIMATORS = ("periodogram", "averaged periodogram")


def fit_power_law(sd: SpectralDensity, fmin: float, fmax: float, bias_correction: bool | None = None) -> PowerLawFit:
    """Fit ``S(f) = M / f^mu`` by linear regression of ``log S`` on ``log f``.

    Periodogram bins of Gaussian noise averaged ``K`` times follow a scaled
    Gamma(K) law, so ``E[ln S_hat] = ln S + digamma(K) - ln K``. The offset is
    removed when ``bias_correction`` is true (default: whenever the spectrum
    is a periodogram). Non-positive bins are excluded and counted.
    """
    if not 0 < fmin < fmax:
        raise ValidationError("need 0 < fmin < fmax")
    inband = (sd.freqs >= fmin) & (sd.freqs <= fmax)
    pos = inband & (sd.psd > 0)
    excluded = int(inband.sum() - pos.sum())
    if pos.sum() < 10:
        raise ValidationError(f"only {int(pos.sum())} usable bins in [{fmin}, {fmax}] Hz; need 10")
    x = np.log(sd.freqs[pos])
    y = np.log(sd.psd[pos])
    if bias_correction is None:
        bias_correction = sd.estimator in PERIODOGRAM_ESTIMATORS
    if bias_correction:
        K = max(int(sd.averages), 1)
        y = y + math.log(K) - float(digamma(K))
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ coef
    dof = max(x.size - 2, 1)
    cov = float(r @ r) / dof * np.linalg.inv(X.T @ X)
    lnM, slope = coef
    M = math.exp(lnM)
    return PowerLawFit(
        M=M,
        mu=-float(slope),
        M_err=M * math.sqrt(cov[0, 0]),
        mu_err=math.sqrt(cov[1, 1]),
        n_bins=int(pos.sum()),
        n_excluded=excluded,
        band=(fmin, fmax),
        bias_corrected=bool(bias_correction),
    )


def flux_amplitude_from_psd(M_MHz2_per_Hz: float, dispersion_GHz_per_phi0: float) -> float:
    """``A_Phi = sqrt(M) / |df01/dPhi|`` in uPhi0/sqrt(Hz).

    ``M`` is the 1 Hz value of a one-sided ``S_f = M / f`` in MHz^2/Hz.
    """
    if dispersion_GHz_per_phi0 == 0 or not math.isfinite(dispersion_GHz_per_phi0):
        raise ValidationError("zero dispersion: flux noise cannot be inferred at a sweet spot")
    if M_MHz2_per_Hz < 0:
        raise ValidationError("M must be non-negative")
    disp_MHz = abs(dispersion_GHz_per_phi0) * 1e3
    return math.sqrt(M_MHz2_per_Hz) / disp_MHz * 1e6


def flux_amplitude_from_echo(gamma_E, dispersion_GHz_per_phi0, min_dispersion: float = 0.05) -> float:
    """Least-squares ``A_Phi`` (uPhi0/sqrt(Hz)) from echo rates (1/s) and dispersions.

    Fits ``Gamma = A * 2 pi |df/dPhi| sqrt(ln 2)`` through the origin, using
    only rows with ``|df/dPhi| >= min_dispersion`` GHz/Phi0.
    """
    g = np.atleast_1d(np.asarray(gamma_E, dtype=float))
    d = np.atleast_1d(np.asarray(dispersion_GHz_per_phi0, dtype=float))
    if g.shape != d.shape:
        raise ValidationError("rates and dispersions must have equal length")
    use = np.abs(d) >= min_dispersion
    if use.sum() < 3:
        raise IdentifiabilityError(
            f"need at least 3 rows away from sweet spots (|dispersion| >= {min_dispersion}), got {int(use.sum())}"
        )
    x = 2.0 * math.pi * np.abs(d[use]) * 1e9 * 1e-6 * math.sqrt(LN2)
    return float(x @ g[use] / (x @ x))


# --------------------------------------------------------------------------
# Synthetic data
# --------------------------------------------------------------------------


def spectral_synthesis(psd_func, n: int, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean Gaussian series whose one-sided PSD is ``psd_func(f)``."""
    if n < 4 or dt <= 0:
        raise ValidationError("need n >= 4 and dt > 0")
    f = np.fft.rfftfreq(n, dt)
    S = np.zeros_like(f)
    S[1:] = psd_func(f[1:])
    scale = np.sqrt(n * S / (4.0 * dt))
    Z = scale * (rng.standard_normal(f.size) + 1j * rng.standard_normal(f.size))
    if n % 2 == 0:
        Z[-1] = np.sqrt(n * S[-1] / dt) * rng.standard_normal()
    Z[0] = 0.0
    return np.fft.irfft(Z, n)


def white_noise(n: int, dt: float, level: float, rng: np.random.Generator) -> np.ndarray:
    """One-sided PSD ``level`` (units^2/Hz)."""
    return spectral_synthesis(lambda f: np.full_like(f, level), n, dt, rng)


def power_law_noise(n: int, dt: float, M: float, mu: float, rng: np.random.Generator) -> np.ndarray:
    """One-sided PSD ``M / f^mu``."""
    return spectral_synthesis(lambda f: M / f**mu, n, dt, rng)


def telegraph_noise(n: int, dt: float, rate: float, amplitude: float, rng: np.random.Generator) -> np.ndarray:
    """Symmetric random telegraph signal ``+-amplitude`` switching at ``rate`` (1/s).

    Its PSD is Lorentzian with corner ``rate / pi``: flat well below, ``f^-2`` well above.
    """
    p = -math.expm1(-rate * dt)
    flips = rng.random(n) < p
    flips[0] = False
    state = np.cumsum(flips) % 2
    return amplitude * (1.0 - 2.0 * state) * (1 if rng.random() < 0.5 else -1)


def flux_noise_frequency_series(
    n: int, dt: float, A_phi_uPhi0: float, dispersion_GHz_per_phi0: float, rng: np.random.Generator, f0_MHz: float = 0.0
) -> FrequencySeries:
    """``f01(t) = f0 + df/dPhi * Phi(t)`` with one-sided ``S_Phi = A^2 / f``."""
    A = A_phi_uPhi0 * 1e-6
    phi = power_law_noise(n, dt, A * A, 1.0, rng)
    f = f0_MHz + dispersion_GHz_per_phi0 * 1e3 * phi
    return FrequencySeries(np.arange(n) * dt, f, {"A_phi_uPhi0": A_phi_uPhi0})


def synthetic_spectroscopy(
    p: FluxoniumParams, phis, transitions=("01", "02", "12"), noise_GHz: float = 0.0, err_GHz: float = 1e-3,
    rng: np.random.Generator | None = None, basis: BasisConfig = BasisConfig(),
) -> SpectroscopyDataset:
    phis = np.asarray(phis, dtype=float)
    phi_col = np.repeat(phis, len(transitions))
    labels = tuple(transitions) * phis.size
    ds = SpectroscopyDataset(phi_col, labels, np.zeros(phi_col.size), np.full(phi_col.size, err_GHz))
    ds.freq_GHz = predict_transitions(p, ds, basis)
    if noise_GHz > 0:
        rng = rng if rng is not None else np.random.default_rng()
        ds.freq_GHz = ds.freq_GHz + noise_GHz * rng.standard_normal(ds.freq_GHz.size)
    return ds


def synthetic_ramsey(
    delays_us, T_phi_us: float, f_MHz: float, T1_us: float = math.inf, phase: float = 0.0, amplitude: float = 1.0,
    offset: float = 0.0, noise: float = 0.0, rng: np.random.Generator | None = None,
) -> RamseyTrace:
    t = np.asarray(delays_us, dtype=float)
    env = np.exp(-t / (2.0 * T1_us)) * np.exp(-((t / T_phi_us) ** 2))
    y = offset + amplitude * env * np.cos(2 * np.pi * f_MHz * t + phase)
    if noise > 0:
        rng = rng if rng is not None else np.random.default_rng()
        y = y + noise * rng.standard_normal(t.size)
    return RamseyTrace(t, y, T1_us)


# --------------------------------------------------------------------------
# CSV and JSON I/O
# --------------------------------------------------------------------------


def _read_columns(path, required: tuple) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise ValidationError(f"{path}: missing column(s) {missing}; expected {list(required)}")
        cols = {c: [] for c in required}
        for lineno, row in enumerate(reader, start=2):
            for c in required:
                cols[c].append(row[c])
    return cols


def _floats(path, name, values):
    try:
        return np.array([float(v) for v in values])
    except ValueError as exc:
        raise ValidationError(f"{path}: column {name!r}: {exc}") from None


def read_spectroscopy_csv(path) -> SpectroscopyDataset:
    c = _read_columns(path, ("phi_ext", "transition", "freq_GHz", "err_GHz"))
    return SpectroscopyDataset(
        _floats(path, "phi_ext", c["phi_ext"]),
        tuple(s.strip() for s in c["transition"]),
        _floats(path, "freq_GHz", c["freq_GHz"]),
        _floats(path, "err_GHz", c["err_GHz"]),
    )


def read_ramsey_csv(path, T1_us: float = math.inf) -> RamseyTrace:
    c = _read_columns(path, ("delay_us", "signal"))
    return RamseyTrace(_floats(path, "delay_us", c["delay_us"]), _floats(path, "signal", c["signal"]), T1_us,
                       {"source": str(path)})


def read_frequency_series_csv(path) -> FrequencySeries:
    c = _read_columns(path, ("t_s", "f01_MHz"))
    return FrequencySeries(_floats(path, "t_s", c["t_s"]), _floats(path, "f01_MHz", c["f01_MHz"]), {"source": str(path)})


def read_spectrum_csv(path) -> SpectralDensity:
    """Read a ``f_Hz,<psd>`` two-column file (any second column name)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or len(header) < 2 or header[0] != "f_Hz":
            raise ValidationError(f"{path}: expected a header starting with f_Hz")
        rows = [r for r in reader if r]
    f = _floats(path, "f_Hz", [r[0] for r in rows])
    s = _floats(path, header[1], [r[1] for r in rows])
    dt = 0.5 / f[-1] if f[-1] > 0 else 1.0
    return SpectralDensity(f, s, dt, 2 * (f.size - 1), 2 * (f.size - 1), estimator="tabulated", metadata={"source": str(path)})


def write_json_report(path, report: dict):
    dump_json(report, path)
