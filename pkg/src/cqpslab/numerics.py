"""Numeric kernels shared by the physics modules.

Dense symmetric eigensolver, one-sided periodogram, Nelder-Mead simplex
minimizer and seeded random streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from cqpslab.errors import ConvergenceError, OptimizationError, ValidationError

SYMMETRY_RTOL = 1e-12


# --------------------------------------------------------------------------
# Symmetric eigenproblem
# --------------------------------------------------------------------------


def check_symmetric(m, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Return ``m`` as a float array, raising if it is not square symmetric."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValidationError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    scale = max(np.abs(a).max(), 1.0)
    asym = np.abs(a - a.T).max()
    if asym > rtol * scale:
        raise ValidationError(f"matrix is not symmetric (max |M - M^T| = {asym:.3e})")
    return a


def symmetric_eigen(m, k: int | None = None, method: str = "lapack"):
    """Lowest ``k`` eigenpairs of a real symmetric matrix.

    Parameters
    ----------
    m : array_like, shape (n, n)
    k : int, optional
        Number of eigenpairs to return (default: all).
    method : {"lapack", "ql"}
        ``"lapack"`` calls ``numpy.linalg.eigh``. ``"ql"`` runs the in-house
        Householder tridiagonalization followed by implicit QL with Wilkinson
        shifts; it is slower and kept as an independent route.

    Returns
    -------
    eigenvalues : ndarray, shape (k,)
        Ascending.
    eigenvectors : ndarray, shape (n, k)
        Orthonormal columns.
    """
    a = check_symmetric(m)
    n = a.shape[0]
    if k is None:
        k = n
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in [1, {n}], got {k}")
    a = 0.5 * (a + a.T)
    if method == "lapack":
        w, v = np.linalg.eigh(a)
    elif method == "ql":
        d, e, q = householder_tridiagonal(a)
        w, v = tridiagonal_ql(d, e, q)
    else:
        raise ValidationError(f"unknown eigensolver method {method!r}")
    order = np.argsort(w, kind="stable")[:k]
    return w[order], v[:, order]


def householder_tridiagonal(a):
    """Reduce symmetric ``a`` to tridiagonal form ``Q^T a Q``.

    Returns the diagonal, the sub-diagonal (length n-1) and ``Q``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    q = np.eye(n)
    for j in range(n - 2):
        x = a[j + 1 :, j]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        # two-sided reflection on the trailing block, P = I - 2 v v^T
        sub = a[j + 1 :, j:]
        sub -= 2.0 * np.outer(v, v @ sub)
        sub = a[j:, j + 1 :]
        sub -= 2.0 * np.outer(sub @ v, v)
        q[:, j + 1 :] -= 2.0 * np.outer(q[:, j + 1 :] @ v, v)
    d = np.diag(a).copy()
    e = np.diag(a, -1).copy()
    return d, e, q


def tridiagonal_ql(d, e, z=None, max_iter: int = 60):
    """Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL.

    ``d`` is the diagonal, ``e`` the sub-diagonal. Eigenvectors are
    accumulated into ``z`` (identity when omitted), so passing the
    Householder ``Q`` yields eigenvectors of the original matrix.
    """
    d = np.array(d, dtype=float)
    n = d.size
    e_full = np.zeros(n)
    e_full[: n - 1] = e
    z = np.eye(n) if z is None else np.array(z, dtype=float)
    eps = np.finfo(float).eps
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e_full[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                raise ConvergenceError(
                    f"implicit QL did not converge for eigenvalue {l}", iterations=it
                )
            g = (d[l + 1] - d[l]) / (2.0 * e_full[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e_full[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e_full[i]
                b = c * e_full[i]
                r = math.hypot(f, g)
                e_full[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e_full[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi1 = z[:, i + 1].copy()
                z[:, i + 1] = s * z[:, i] + c * zi1
                z[:, i] = c * z[:, i] - s * zi1
                i -= 1
            if underflow and i >= l:
                continue
            d[l] -= p
            e_full[l] = g
            e_full[m] = 0.0
    return d, z


# --------------------------------------------------------------------------
# Spectral density
# --------------------------------------------------------------------------


@dataclass
class SpectralDensity:
    """One-sided power spectral density samples.

    ``psd`` has units of ``x``-units squared per Hz. ``averages`` is the number
    of independent periodograms averaged into each bin (it sets the
    log-bias correction used by power-law fits).
    """

    freqs: np.ndarray
    psd: np.ndarray
    dt: float
    n_samples: int
    n_fft: int
    averages: int = 1
    estimator: str = "periodogram"
    metadata: dict = field(default_factory=dict)

    @property
    def padded(self) -> bool:
        return self.n_fft != self.n_samples

    @property
    def df(self) -> float:
        return 1.0 / (self.n_fft * self.dt)

    def total_power(self) -> float:
        """Integral of the PSD, equal to the variance of the mean-removed input."""
        return float(self.psd.sum() * self.df)


def next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def periodogram(x, dt: float, pad: bool = False) -> SpectralDensity:
    """One-sided periodogram ``dt |DFT(x - mean)|^2 / len`` folded to f >= 0.

    With ``pad=True`` the mean-removed series is zero-padded to the next power
    of two; the normalization still uses the original length so that the
    integrated PSD equals the sample variance.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 4:
        raise ValidationError("periodogram needs a 1-D series of at least 4 samples")
    if not dt > 0:
        raise ValidationError("dt must be positive")
    n = x.size
    nfft = next_pow2(n) if pad else n
    spec = np.fft.rfft(x - x.mean(), nfft)
    psd = dt * (spec.real**2 + spec.imag**2) / n
    # fold negative frequencies; DC and (even-length) Nyquist appear once
    if nfft % 2 == 0:
        psd[1:-1] *= 2.0
    else:
        psd[1:] *= 2.0
    freqs = np.fft.rfftfreq(nfft, dt)
    return SpectralDensity(freqs=freqs, psd=psd, dt=float(dt), n_samples=n, n_fft=nfft)


def average_spectra(spectra: Sequence[SpectralDensity]) -> SpectralDensity:
    """Bin-wise mean of periodograms that share a frequency grid."""
    if not spectra:
        raise ValidationError("nothing to average")
    first = spectra[0]
    acc = np.zeros_like(first.psd)
    for s in spectra:
        if s.psd.shape != first.psd.shape or s.dt != first.dt:
            raise ValidationError("spectra do not share a frequency grid")
        acc += s.psd
    acc /= len(spectra)
    return SpectralDensity(
        freqs=first.freqs.copy(),
        psd=acc,
        dt=first.dt,
        n_samples=first.n_samples,
        n_fft=first.n_fft,
        averages=sum(s.averages for s in spectra),
        estimator="averaged periodogram",
        metadata=dict(first.metadata),
    )


def log_bin(sd: SpectralDensity, fmin: float, fmax: float, bins_per_decade: int = 10):
    """Mean PSD in logarithmic frequency bins; empty bins are dropped.

    Returns (geometric bin centres, mean psd, counts).
    """
    edges = np.logspace(np.log10(fmin), np.log10(fmax), int(round(np.log10(fmax / fmin) * bins_per_decade)) + 1)
    idx = np.digitize(sd.freqs, edges) - 1
    ok = (idx >= 0) & (idx < edges.size - 1)
    counts = np.bincount(idx[ok], minlength=edges.size - 1)
    sums = np.bincount(idx[ok], weights=sd.psd[ok], minlength=edges.size - 1)
    keep = counts > 0
    centres = np.sqrt(edges[:-1] * edges[1:])
    return centres[keep], sums[keep] / counts[keep], counts[keep]


# --------------------------------------------------------------------------
# Nelder-Mead
# --------------------------------------------------------------------------


class MinimizeResult(NamedTuple):
    x: np.ndarray
    fun: float
    nit: int
    nfev: int
    converged: bool
    history: list


def _evaluate(f, x):
    v = float(f(x))
    if math.isnan(v):
        raise OptimizationError(f"objective returned NaN at {x.tolist()}", point=x.copy())
    return v


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0,
    *,
    xatol: float = 1e-8,
    fatol: float = 1e-12,
    max_iter: int | None = None,
    initial_step=None,
    restarts: int = 0,
) -> MinimizeResult:
    """Minimize ``f`` with the Nelder-Mead simplex method.

    Uses dimension-adaptive coefficients (Gao & Han) so that higher-dimensional
    fits do not stall. Convergence requires the simplex to shrink below
    ``xatol`` in every coordinate and its function values to agree within
    ``fatol``. ``restarts`` rebuilds a fresh simplex around the best point
    that many times, which guards against premature collapse.

    ``history`` holds the best objective value after every iteration; it is
    non-increasing by construction.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = x0.size
    if max_iter is None:
        max_iter = 400 * n
    if initial_step is None:
        step = np.where(x0 != 0.0, 0.05 * x0, 0.00025)
    else:
        step = np.broadcast_to(np.asarray(initial_step, dtype=float), (n,)).copy()
    f0 = _evaluate(f, x0)
    if not math.isfinite(f0):
        raise OptimizationError(f"objective is not finite at the start point {x0.tolist()}", point=x0)

    alpha = 1.0
    beta = 1.0 + 2.0 / n
    gamma = 0.75 - 1.0 / (2.0 * n)
    delta = 1.0 - 1.0 / n

    total_it = 0
    nfev = 1
    history: list[float] = []
    best_x, best_f = x0, f0
    converged = False
    for _ in range(restarts + 1):
        sim = np.empty((n + 1, n))
        sim[0] = best_x
        for i in range(n):
            y = best_x.copy()
            y[i] += step[i] if step[i] != 0 else 0.00025
            sim[i + 1] = y
        fs = np.empty(n + 1)
        fs[0] = best_f
        for i in range(1, n + 1):
            fs[i] = _evaluate(f, sim[i])
        nfev += n
        converged = False
        it = 0
        while it < max_iter:
            order = np.argsort(fs, kind="stable")
            sim, fs = sim[order], fs[order]
            if (
                np.max(np.abs(sim[1:] - sim[0])) <= xatol
                and np.max(np.abs(fs[1:] - fs[0])) <= fatol
            ):
                converged = True
                break
            it += 1
            centroid = sim[:-1].mean(axis=0)
            xr = centroid + alpha * (centroid - sim[-1])
            fr = _evaluate(f, xr)
            nfev += 1
            if fr < fs[0]:
                xe = centroid + beta * (xr - centroid)
                fe = _evaluate(f, xe)
                nfev += 1
                if fe < fr:
                    sim[-1], fs[-1] = xe, fe
                else:
                    sim[-1], fs[-1] = xr, fr
            elif fr < fs[-2]:
                sim[-1], fs[-1] = xr, fr
            else:
                if fr < fs[-1]:
                    xc = centroid + gamma * (xr - centroid)
                else:
                    xc = centroid - gamma * (centroid - sim[-1])
                fc = _evaluate(f, xc)
                nfev += 1
                if fc < min(fr, fs[-1]):
                    sim[-1], fs[-1] = xc, fc
                else:
                    for i in range(1, n + 1):
                        sim[i] = sim[0] + delta * (sim[i] - sim[0])
                        fs[i] = _evaluate(f, sim[i])
                    nfev += n
            history.append(float(min(fs.min(), best_f)))
        total_it += it
        i_best = int(np.argmin(fs))
        if fs[i_best] <= best_f:
            best_x, best_f = sim[i_best].copy(), float(fs[i_best])
        # a restart rebuilds the simplex at the original scale around the best point
    return MinimizeResult(best_x, best_f, total_it, nfev, converged, history)


def multistart(
    f: Callable[[np.ndarray], float], starts: Sequence, **kwargs
) -> MinimizeResult:
    """Run :func:`nelder_mead` from each start and keep the best result."""
    best = None
    for s in starts:
        res = nelder_mead(f, s, **kwargs)
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise ValidationError("multistart needs at least one start point")
    return best


# --------------------------------------------------------------------------
# Random streams
# --------------------------------------------------------------------------


def make_rng(seed: int | None) -> np.random.Generator:
    """PCG64 generator from a 64-bit seed."""
    if seed is not None and not 0 <= int(seed) < 2**64:
        raise ValidationError("seed must be a 64-bit unsigned integer")
    return np.random.default_rng(seed)


def spawn_rngs(seed: int | None, n: int) -> list[np.random.Generator]:
    """``n`` independent generators derived from one master seed.

    Stream ``i`` depends only on ``(seed, i)``, never on how many workers
    consume the streams.
    """
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(n)]
