"""Phase-slip amplitudes of a single junction.

Two routes are provided: the closed-form WKB (instanton) estimate and the
exact Bloch-band route, where the ground band ``omega_0(k)`` of
``4 E_C (n + k)^2 - E_J cos(phi)`` is expanded in a Fourier series in the
quasicharge ``k``. The ``l``-th harmonic is the amplitude of an ``l``-fold
(correlated) phase slip.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from cqpslab.circuit import JunctionParams, plasma_frequency, reduced_impedance
from cqpslab.errors import ConvergenceError, ValidationError

IDENTITY_RTOL = 1e-12


@dataclass(frozen=True)
class PhaseSlipAmplitude:
    """Magnitude ``eps`` (GHz) of the ``l``-th phase-slip harmonic of band ``band``."""

    value: float
    band: int = 0
    order: int = 1
    method: str = "wkb"
    warning: str | None = None

    def __post_init__(self):
        if not self.value >= 0:
            raise ValidationError(f"phase-slip amplitude is stored as a magnitude, got {self.value}")
        if self.order < 1:
            raise ValidationError("order l must be >= 1")
        if self.method not in ("wkb", "band-fourier"):
            raise ValidationError(f"unknown method {self.method!r}")


def wkb_ratio_form(E_J: float, E_C: float) -> float:
    """``2 sqrt(2/pi) sqrt(8 E_J E_C) (8 E_J/E_C)^(1/4) exp(-sqrt(8 E_J/E_C))``."""
    r = 8.0 * E_J / E_C
    return 2.0 * math.sqrt(2.0 / math.pi) * math.sqrt(8.0 * E_J * E_C) * r**0.25 * math.exp(-math.sqrt(r))


def wkb_impedance_form(omega_p: float, z: float) -> float:
    """``(4 sqrt(2) / pi) omega_p z^(-1/2) exp(-4 / (pi z))``."""
    return 4.0 * math.sqrt(2.0) / math.pi * omega_p / math.sqrt(z) * math.exp(-4.0 / (math.pi * z))


def wkb_phase_slip_energy(j: JunctionParams) -> PhaseSlipAmplitude:
    """WKB phase-slip amplitude of one junction, in GHz.

    Evaluated both from ``E_J/E_C`` and from the reduced impedance; the two
    forms are algebraically identical and must agree to 1e-12. Below
    ``E_J/E_C = 1`` the semiclassical estimate is unreliable: a
    ``RuntimeWarning`` is emitted and the result carries a warning note.
    """
    a = wkb_ratio_form(j.E_J, j.E_C)
    b = wkb_impedance_form(plasma_frequency(j), reduced_impedance(j))
    if not math.isclose(a, b, rel_tol=IDENTITY_RTOL, abs_tol=0.0) and a > 0:
        raise ConvergenceError(f"WKB forms disagree: {a!r} vs {b!r}", ratio_form=a, impedance_form=b)
    note = None
    if j.E_J / j.E_C < 1.0:
        note = f"E_J/E_C = {j.E_J / j.E_C:.3g} < 1: WKB estimate outside its validity range"
        warnings.warn(note, RuntimeWarning, stacklevel=2)
    return PhaseSlipAmplitude(value=a, band=0, order=1, method="wkb", warning=note)


@dataclass
class BandStructure:
    k: np.ndarray  # uniform grid over [-1/2, 1/2)
    energies: np.ndarray  # (n_bands, n_k), GHz
    n_charge: int


def _check_uniform_period(k: np.ndarray) -> float:
    k = np.asarray(k, dtype=float)
    if k.ndim != 1 or k.size < 4:
        raise ValidationError("k grid must be one-dimensional with at least 4 points")
    dk = np.diff(k)
    step = 1.0 / k.size
    if not np.allclose(dk, step, rtol=1e-9, atol=1e-12):
        raise ValidationError("k grid must be uniform and cover exactly one period (endpoint excluded)")
    return step


def charge_band_energies(
    j: JunctionParams, n_k: int = 201, n_charge: int = 41, n_bands: int = 3, occupation_tol: float = 1e-10
) -> BandStructure:
    """Bloch bands ``omega_b(k)`` of a single junction in the charge basis.

    For each quasicharge ``k`` the tridiagonal matrix with diagonal
    ``4 E_C (n + k)^2`` (``n = -n_max..n_max``) and off-diagonal ``-E_J/2`` is
    diagonalized. Raises :class:`ConvergenceError` if any returned band has
    weight above ``occupation_tol`` on the outermost charge states.
    """
    if n_charge < 21 or n_charge % 2 == 0:
        raise ValidationError(f"n_charge must be odd and >= 21, got {n_charge}")
    if n_k < 32:
        raise ValidationError(f"n_k must be >= 32, got {n_k}")
    if not 1 <= n_bands < n_charge:
        raise ValidationError("n_bands out of range")
    nmax = n_charge // 2
    n = np.arange(-nmax, nmax + 1, dtype=float)
    k = -0.5 + np.arange(n_k) / n_k
    off = np.full(n_charge - 1, -0.5 * j.E_J)
    out = np.empty((n_bands, n_k))
    worst = 0.0
    for i, kk in enumerate(k):
        w, v = eigh_tridiagonal(4.0 * j.E_C * (n + kk) ** 2, off, select="i", select_range=(0, n_bands - 1))
        out[:, i] = w
        worst = max(worst, float(np.max(v[0] ** 2 + v[-1] ** 2)))
    if worst > occupation_tol:
        raise ConvergenceError(
            f"edge charge-state occupation {worst:.2e} exceeds {occupation_tol:.0e}; increase n_charge",
            occupation=worst,
        )
    return BandStructure(k=k, energies=out, n_charge=n_charge)


def band_fourier_amplitudes(k, band, l_max: int = 4, band_index: int = 0) -> list[PhaseSlipAmplitude]:
    """``eps(b, l) = 2 |c_l|`` where ``c_l`` is the ``l``-th Fourier coefficient
    of one band sampled on a uniform grid covering one period in ``k``."""
    step = _check_uniform_period(k)
    band = np.asarray(band, dtype=float)
    if band.shape != np.shape(k):
        raise ValidationError("band and k must have the same shape")
    if not 1 <= l_max < band.size // 2:
        raise ValidationError("l_max must be at least 1 and below half the number of samples")
    k = np.asarray(k, dtype=float)
    out = []
    for l in range(1, l_max + 1):
        # periodic trapezoid rule == plain sum on an endpoint-free grid
        c = np.sum(band * np.exp(-2j * np.pi * l * k)) * step
        out.append(PhaseSlipAmplitude(value=2.0 * abs(c), band=band_index, order=l, method="band-fourier"))
    return out


def band_phase_slip_energies(j: JunctionParams, l_max: int = 3, band: int = 0, **kw) -> list[PhaseSlipAmplitude]:
    bs = charge_band_energies(j, n_bands=max(band + 1, 1), **kw)
    return band_fourier_amplitudes(bs.k, bs.energies[band], l_max=l_max, band_index=band)


def amplitude_table(ratios, l_max: int = 3, E_C: float = 1.0, **kw) -> list[dict]:
    """Rows ``ejec_ratio, l, eps_ps_over_EC, method`` for both methods."""
    rows = []
    for r in ratios:
        j = JunctionParams(E_J=float(r) * E_C, E_C=E_C)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            w = wkb_phase_slip_energy(j)
        rows.append({"ejec_ratio": float(r), "l": 1, "eps_ps_over_EC": w.value / E_C, "method": "wkb"})
        for a in band_phase_slip_energies(j, l_max=l_max, **kw):
            rows.append({"ejec_ratio": float(r), "l": a.order, "eps_ps_over_EC": a.value / E_C, "method": a.method})
    return rows
