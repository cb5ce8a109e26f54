"""Monte-Carlo model of quasiparticle charge-parity switching in the array.

Quasiparticles hop between neighbouring islands of a ring of ``N`` islands.
Each one moves left or right with equal probability, independently, with
probability ``1 - exp(-dt/tau_qp)`` per time step. A quasiparticle on island
``i`` adds half a Cooper-pair charge there, which flips the sign of every
phase factor ``exp(-2 pi i eta_j)`` with ``j > i``. ``Re E_CQPS(t)`` is
recorded in units of the (homogeneous) phase-slip amplitude.

Fast path
---------
With ``c_j = cos(2 pi eta_j(0))`` and prefix sums ``C_m = sum_{j<m} c_j``,
sorting the quasiparticle positions ``y_0 <= ... <= y_{n-1}`` gives

    Re E / eps = (-1)^n C_N + 2 sum_k (-1)^k C_{y_k},

so each sample costs O(n_qp) after a sort, independent of ``N``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from cqpslab.cqps import ChargeConfiguration, cqps_energy_batch, total_cqps_energy
from cqpslab.errors import ValidationError
from cqpslab.numerics import SpectralDensity, log_bin, periodogram, spawn_rngs

# Bookkeeping for the quasiparticle density that corresponds to 10 qp in
# the array (reported in run metadata, not used by the model).
QP_CONTEXT = {"array_volume_um3": 6.7, "n_cp_per_um3": 4e6, "x_qp": 4e-7}

DEFAULT_MEMORY_CAP = 3 * 1024**3
DEFAULT_CHUNK = 1 << 20


@dataclass(frozen=True)
class SimConfig:
    N: int = 85
    n_qp: int = 10
    tau_qp: float = 10e-3  # s
    dt: float = 500e-6  # s
    duration: float = 1e4  # s
    realizations: int = 10
    seed: int = 0
    eps_ps: float = 1.0  # GHz; traces are reported in units of eps_ps
    memory_cap_bytes: int = DEFAULT_MEMORY_CAP

    def __post_init__(self):
        if not (isinstance(self.N, int) and self.N >= 1):
            raise ValidationError("N must be a positive integer")
        if not (isinstance(self.n_qp, int) and 0 <= self.n_qp <= self.N):
            raise ValidationError(f"n_qp must be an integer in [0, N], got {self.n_qp}")
        if not (self.tau_qp > 0 and self.dt > 0 and self.duration > 0):
            raise ValidationError("tau_qp, dt and duration must be positive")
        if not self.dt < self.tau_qp / 5:
            raise ValidationError(f"dt = {self.dt} must be below tau_qp/5 = {self.tau_qp / 5} to resolve switching")
        if self.n_samples < 10_000:
            raise ValidationError(f"duration/dt gives {self.n_samples} samples; at least 1e4 are required")
        if not (isinstance(self.realizations, int) and self.realizations >= 1):
            raise ValidationError("realizations must be a positive integer")
        if not self.eps_ps > 0:
            raise ValidationError("eps_ps must be positive")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def hop_probability(self) -> float:
        return -math.expm1(-self.dt / self.tau_qp)

    def estimated_bytes(self, chunk: int = DEFAULT_CHUNK) -> int:
        # kept trace + spectrum accumulator + FFT workspace, and one chunk of positions
        per_sample = 8 * 4
        return self.n_samples * per_sample + max(self.n_qp, 1) * min(chunk, self.n_samples) * 13


@dataclass
class ParityState:
    offsets: np.ndarray  # n_g,j(0), length N + 1
    positions: np.ndarray  # island index of each quasiparticle
    time: float = 0.0

    @property
    def N(self) -> int:
        return self.offsets.size - 1

    @property
    def qp_counts(self) -> np.ndarray:
        return np.bincount(self.positions, minlength=self.N + 1)

    def charges(self) -> np.ndarray:
        """``n_g,j(0) + N_qp,j / 2`` reduced to [0, 1)."""
        return np.mod(self.offsets + 0.5 * self.qp_counts, 1.0)

    def copy(self) -> "ParityState":
        return ParityState(self.offsets.copy(), self.positions.copy(), self.time)


def init_state(cfg: SimConfig, rng: np.random.Generator) -> ParityState:
    offsets = rng.random(cfg.N + 1)
    positions = rng.integers(0, cfg.N, cfg.n_qp).astype(np.int64)
    return ParityState(offsets, positions, 0.0)


def step(state: ParityState, cfg: SimConfig, rng: np.random.Generator) -> ParityState:
    """Advance one time step (reference implementation, one draw per quasiparticle)."""
    n = state.positions.size
    moves = rng.random(n) < cfg.hop_probability
    direction = np.where(rng.random(n) < 0.5, -1, 1)
    pos = np.mod(state.positions + moves * direction, cfg.N)
    return ParityState(state.offsets, pos, state.time + cfg.dt)


def re_cqps_reference(state: ParityState, eps: float = 1.0) -> float:
    """``Re E_CQPS`` of a state via the general configuration sum."""
    return total_cqps_energy(eps, ChargeConfiguration(tuple(state.charges()))).value.real


def _hop_schedule(rng: np.random.Generator, p: float, n_samples: int):
    """Sample indices at which one quasiparticle hops, and the hop directions."""
    if p <= 0:
        return np.empty(0, np.int64), np.empty(0, np.int8)
    mean = n_samples * p
    k = int(mean + 6 * math.sqrt(mean) + 16)
    t = np.cumsum(rng.geometric(p, k))
    while t[-1] < n_samples:
        t = np.concatenate([t, t[-1] + np.cumsum(rng.geometric(p, k))])
    t = t[t < n_samples]
    d = np.where(rng.random(t.size) < 0.5, -1, 1).astype(np.int8)
    return t, d


def iter_positions(state: ParityState, cfg: SimConfig, rng: np.random.Generator, n_samples: int, chunk: int = DEFAULT_CHUNK):
    """Yield ``(start, X)`` with ``X[q, i]`` the island of quasiparticle ``q``
    at sample ``start + i``. Sample 0 is the initial state."""
    nqp = state.positions.size
    p = cfg.hop_probability
    sched = [_hop_schedule(rng, p, n_samples) for _ in range(nqp)]
    pos = state.positions.astype(np.int32)
    for s in range(0, n_samples, chunk):
        n = min(chunk, n_samples - s)
        steps = np.zeros((nqp, n), np.int8)
        for q, (t, d) in enumerate(sched):
            lo, hi = np.searchsorted(t, [s, s + n])
            steps[q, t[lo:hi] - s] = d[lo:hi]
        X = np.cumsum(steps, axis=1, dtype=np.int32)
        X += pos[:, None]
        np.remainder(X, cfg.N, out=X)
        pos = X[:, -1].copy()
        yield s, X


def simulate_trace(
    cfg: SimConfig,
    rng: np.random.Generator,
    state: ParityState | None = None,
    drift: Callable | None = None,
    chunk: int = DEFAULT_CHUNK,
) -> np.ndarray:
    """``Re E_CQPS(t) / eps_ps`` at ``t = i dt``, ``i = 0..n_samples-1``.

    ``drift(t)`` may return slow offset-charge changes of shape
    ``(len(t), N+1)``; it is off by default and uses the general (slower)
    configuration sum when given.
    """
    state = state if state is not None else init_state(cfg, rng)
    ns = cfg.n_samples
    N = cfg.N
    out = np.empty(ns)
    nqp = state.positions.size
    if drift is None:
        c = np.cos(2 * np.pi * np.cumsum(state.offsets[:N]))
        C = np.concatenate([[0.0], np.cumsum(c)])
        w = 2.0 * (-1.0) ** np.arange(nqp)
        base = C[N] * (-1.0) ** nqp
        if nqp == 0:
            out[:] = base
            return out
        for s, X in iter_positions(state, cfg, rng, ns, chunk):
            X.sort(axis=0)
            out[s : s + X.shape[1]] = w @ C[X] + base
        return out
    for s, X in iter_positions(state, cfg, rng, ns, min(chunk, 1 << 14)):
        n = X.shape[1]
        t = (s + np.arange(n)) * cfg.dt
        counts = np.zeros((n, N + 1))
        for q in range(nqp):
            np.add.at(counts, (np.arange(n), X[q]), 1.0)
        ng = np.mod(state.offsets[None, :] + np.asarray(drift(t)) + 0.5 * counts, 1.0)
        out[s : s + n] = cqps_energy_batch(1.0, ng).real
    return out


@dataclass
class TraceResult:
    config: SimConfig
    times: np.ndarray  # s, for the kept trace
    trace: np.ndarray  # Re E_CQPS / eps_ps of realization 0
    spectrum: SpectralDensity  # averaged, in eps_ps^2 / Hz
    binned: list = field(default_factory=list)  # per-realization (centres, mean, counts)
    metadata: dict = field(default_factory=dict)


def _realization(cfg: SimConfig, rng: np.random.Generator, pad: bool, chunk: int):
    x = simulate_trace(cfg, rng, chunk=chunk)
    if np.max(np.abs(x)) > cfg.N + 1e-9:
        raise AssertionError("|Re E_CQPS| exceeded N eps_ps")
    sd = periodogram(x, cfg.dt, pad=pad)
    return x, sd


def run(cfg: SimConfig, *, threads: int = 1, pad: bool = False, keep_trace: bool = True, chunk: int = DEFAULT_CHUNK,
        bins_per_decade: int = 10) -> TraceResult:
    """Simulate ``cfg.realizations`` independent traces and average their periodograms.

    Realizations use independent generators spawned from ``cfg.seed``; the
    average is reduced in realization order, so results do not depend on
    ``threads``. Only the first trace is kept; per-realization spectra are
    stored log-binned.
    """
    need = cfg.estimated_bytes(chunk)
    if need > cfg.memory_cap_bytes:
        raise ValidationError(
            f"simulation needs about {need / 1e9:.2f} GB, above the cap of {cfg.memory_cap_bytes / 1e9:.2f} GB"
        )
    rngs = spawn_rngs(cfg.seed, cfg.realizations)
    fmin = 1.0 / cfg.duration
    fmax = 0.5 / cfg.dt

    def job(i):
        return _realization(cfg, rngs[i], pad, chunk)

    kept = None
    first = None
    total = None
    binned = []

    def consume(i, x, sd):
        nonlocal kept, first, total
        if i == 0 and keep_trace:
            kept = x
        binned.append(log_bin(sd, fmin, fmax, bins_per_decade))
        if first is None:
            first, total = sd, sd.psd.copy()
        else:
            total += sd.psd

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            for i, (x, sd) in enumerate(ex.map(job, range(cfg.realizations))):
                consume(i, x, sd)
    else:
        for i in range(cfg.realizations):
            consume(i, *job(i))
    acc = replace(first, psd=total / cfg.realizations, averages=cfg.realizations, estimator="averaged periodogram")
    times = np.arange(cfg.n_samples) * cfg.dt if keep_trace else np.empty(0)
    meta = {"config": asdict(cfg), "qp_density": dict(QP_CONTEXT), "normalization": "S / eps_ps^2 per Hz, one-sided"}
    return TraceResult(cfg, times, kept if kept is not None else np.empty(0), acc, binned, meta)


def lorentzian(f, S0: float, fc: float):
    return S0 / (1.0 + (np.asarray(f) / fc) ** 2)


def fit_lorentzian(sd: SpectralDensity, fmin: float | None = None, fmax: float | None = None, bins_per_decade: int = 10):
    """Fit ``S0 / (1 + (f/fc)^2)`` to a spectrum, returning ``(S0, fc)``.

    The spectrum is first averaged in logarithmic frequency bins so every
    decade carries equal weight, then the squared log residual is minimized.
    Defaults span the whole resolved band, ``1/T`` to the Nyquist frequency.
    """
    from cqpslab.numerics import nelder_mead

    fmin = fmin if fmin is not None else sd.freqs[1]
    fmax = fmax if fmax is not None else sd.freqs[-1]
    c, m, _ = log_bin(sd, fmin, fmax, bins_per_decade)
    ok = m > 0
    c, y = c[ok], np.log(m[ok])
    if c.size < 3:
        raise ValidationError("not enough positive spectral points to fit")
    s0 = float(np.exp(np.median(y[: max(3, c.size // 10)])))
    below = np.flatnonzero(np.exp(y) < s0 / 2)
    fc0 = float(c[below[0]]) if below.size else float(c[-1])

    def cost(v):
        return float(np.mean((y - np.log(lorentzian(c, math.exp(v[0]), math.exp(v[1])))) ** 2))

    r = nelder_mead(cost, np.array([math.log(s0), math.log(fc0)]), restarts=2)
    return math.exp(r.x[0]), math.exp(r.x[1])


def loglog_slope(sd: SpectralDensity, fmin: float, fmax: float) -> float:
    """Least-squares slope of ``log S`` against ``log f`` over raw bins in [fmin, fmax]."""
    m = (sd.freqs >= fmin) & (sd.freqs <= fmax) & (sd.psd > 0)
    if m.sum() < 3:
        raise ValidationError("not enough spectral points for a slope")
    return float(np.polyfit(np.log10(sd.freqs[m]), np.log10(sd.psd[m]), 1)[0])
