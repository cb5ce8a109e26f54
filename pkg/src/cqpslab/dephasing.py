"""Pure-dephasing budget: 1/f flux noise plus CQPS, combined in quadrature.

Flux noise is taken as ``S_Phi(f) = A_Phi^2 / f`` (``A_Phi`` in uPhi0/sqrt(Hz)).
For a Gaussian-decaying signal ``exp(-(t/T)^2)`` the first-order rate is
``Gamma = 2 pi |df01/dPhi| A_Phi sqrt(xi)``, with ``xi = ln 2`` for a Hahn
echo. Ramsey decay is parametrized with the effective amplitude
``A_R1 = 4 A_Phi sqrt(ln 2)``, i.e. ``xi = 16 ln 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cqpslab.circuit import QubitSpec
from cqpslab.cqps import basis_overlap, cqps_dephasing_rate
from cqpslab.errors import ValidationError
from cqpslab.phaseslip import wkb_phase_slip_energy
from cqpslab.spectrum import BasisConfig, dispersion_hellmann_feynman, eigensystem

LN2 = math.log(2.0)
GHZ = 1e9
MICRO = 1e-6


@dataclass(frozen=True)
class FluxNoiseModel:
    """``amplitude`` in uPhi0/sqrt(Hz); ``filter_factor`` is the dimensionless ``xi``."""

    amplitude: float
    filter_factor: float = LN2

    def __post_init__(self):
        if not (self.amplitude > 0 and self.filter_factor > 0):
            raise ValidationError("flux-noise amplitude and filter factor must be positive")

    @classmethod
    def echo(cls, A_phi: float) -> "FluxNoiseModel":
        return cls(A_phi, LN2)

    @classmethod
    def ramsey(cls, A_phi: float) -> "FluxNoiseModel":
        """Ramsey model whose effective amplitude is ``4 A_phi sqrt(ln 2)``."""
        return cls(A_phi, 16.0 * LN2)

    @property
    def effective_amplitude(self) -> float:
        return self.amplitude * math.sqrt(self.filter_factor)


def flux_dephasing_rate(model: FluxNoiseModel, dispersion_GHz_per_phi0: float) -> float:
    """First-order flux-noise dephasing rate in 1/s.

    ``2 pi * |df/dPhi| [Hz/Phi0] * A [Phi0/sqrt(Hz)] * sqrt(xi)``.
    """
    if not math.isfinite(dispersion_GHz_per_phi0):
        raise ValidationError("dispersion must be finite")
    return 2.0 * math.pi * abs(dispersion_GHz_per_phi0) * GHZ * model.effective_amplitude * MICRO


def ramsey_flux_amplitude(A_phi: float) -> float:
    """``A_R1 = 4 A_phi sqrt(ln 2)``."""
    return 4.0 * A_phi * math.sqrt(LN2)


@dataclass(frozen=True)
class DephasingBudget:
    gamma_cqps: float
    gamma_flux: float
    gamma_total: float
    phi_ext: float = float("nan")
    label: str = ""

    @property
    def T_cqps(self) -> float:
        return _inv(self.gamma_cqps)

    @property
    def T_flux(self) -> float:
        return _inv(self.gamma_flux)

    @property
    def T_total(self) -> float:
        return _inv(self.gamma_total)


def _inv(g: float) -> float:
    return math.inf if g == 0 else 1.0 / g


def total_ramsey_rate(cqps: float, flux: float, phi_ext: float = float("nan"), label: str = "") -> DephasingBudget:
    if cqps < 0 or flux < 0:
        raise ValidationError("rates must be non-negative")
    return DephasingBudget(cqps, flux, math.hypot(cqps, flux), phi_ext, label)


def gaussian_decay(t, T1, T_phi, f, phase=0.0):
    """``exp(-t/2T1) exp(-(t/T_phi)^2) cos(2 pi f t + phase)``.

    ``t``, ``T1``, ``T_phi`` in us and ``f`` in MHz; ``T1 = inf`` is allowed.
    """
    if not (T1 > 0 and T_phi > 0):
        raise ValidationError("T1 and T_phi must be positive")
    t = np.asarray(t, dtype=float)
    return np.exp(-t / (2.0 * T1)) * np.exp(-((t / T_phi) ** 2)) * np.cos(2.0 * np.pi * f * t + phase)


@dataclass
class CoherenceTable:
    label: str
    phi_ext: np.ndarray
    f01_GHz: np.ndarray
    dispersion_GHz_per_phi0: np.ndarray
    F01: np.ndarray
    gamma_cqps: np.ndarray
    gamma_flux: np.ndarray

    @property
    def gamma_total(self) -> np.ndarray:
        return np.hypot(self.gamma_cqps, self.gamma_flux)

    @property
    def T_cqps_s(self):
        return _safe_inv(self.gamma_cqps)

    @property
    def T_flux_s(self):
        return _safe_inv(self.gamma_flux)

    @property
    def T_total_s(self):
        return _safe_inv(self.gamma_total)

    def budgets(self) -> list[DephasingBudget]:
        return [
            total_ramsey_rate(float(c), float(f), float(x), self.label)
            for c, f, x in zip(self.gamma_cqps, self.gamma_flux, self.phi_ext)
        ]

    def columns(self) -> dict:
        return {
            "phi_ext": self.phi_ext,
            "f01_GHz": self.f01_GHz,
            "T_cqps_s": self.T_cqps_s,
            "T_flux_s": self.T_flux_s,
            "T_total_s": self.T_total_s,
        }


def _safe_inv(g):
    g = np.asarray(g, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(g == 0, np.inf, 1.0 / g)


def qubit_phase_slip_Hz(qubit: QubitSpec, josephson: str = "inductance") -> float:
    """WKB phase-slip amplitude of one array junction, in Hz."""
    return wkb_phase_slip_energy(qubit.array(josephson).junction_params).value * GHZ


def coherence_vs_flux(
    qubit: QubitSpec,
    phis,
    *,
    flux_model: FluxNoiseModel | None = None,
    basis: BasisConfig = BasisConfig(),
    josephson: str = "inductance",
) -> CoherenceTable:
    """Ramsey dephasing budget over a flux grid.

    The CQPS channel uses the WKB amplitude of one array junction and the
    structure factor ``F_01``; the flux channel uses the Ramsey model with the
    qubit's ``A_phi`` unless ``flux_model`` is given.
    """
    phis = np.asarray(phis, dtype=float)
    model = flux_model or FluxNoiseModel.ramsey(qubit.A_phi)
    eps_hz = qubit_phase_slip_Hz(qubit, josephson)
    n = phis.size
    f01, disp, F = np.empty(n), np.empty(n), np.empty(n, dtype=complex)
    g_c, g_f = np.empty(n), np.empty(n)
    for i, x in enumerate(phis):
        sol = eigensystem(qubit.hamiltonian.at_flux(x), basis, k=2, check_convergence=(i == 0))
        f01[i] = sol.energies[1] - sol.energies[0]
        disp[i] = dispersion_hellmann_feynman(sol)
        F[i] = basis_overlap(sol, 1) - basis_overlap(sol, 0)
        g_c[i] = cqps_dephasing_rate(qubit.N, eps_hz, F[i])
        g_f[i] = flux_dephasing_rate(model, disp[i])
    return CoherenceTable(qubit.name, phis, f01, disp, F, g_c, g_f)
