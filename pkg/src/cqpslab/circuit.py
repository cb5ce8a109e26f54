"""Junction geometry -> circuit energies and impedances.

Conventions
-----------
``E_C`` is always the *single-electron* charging energy ``e^2 / 2C`` divided
by ``h``, which is the convention of ``H = 4 E_C n^2 - E_J cos(phi) + ...``
with ``n`` counted in Cooper pairs. Some references use ``(2e)^2 / 2C``
instead; those values are four times larger.

Units: GHz for energies, fF for capacitance, uA for current, um for lengths,
fF/um^2 for specific capacitance, uA/um^2 for critical-current density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import scipy.constants as sc

from cqpslab.errors import ValidationError


@dataclass(frozen=True)
class PhysicalConstants:
    flux_quantum: float = sc.h / (2 * sc.e)  # Wb
    electron_charge: float = sc.e  # C
    planck: float = sc.h  # J s

    @property
    def charging_constant_GHz_fF(self) -> float:
        """``E_C[GHz] * C[fF]``, i.e. ``e^2 / 2h`` in these units (about 19.37)."""
        return self.electron_charge**2 / (2 * self.planck) / 1e-15 / 1e9

    @property
    def josephson_constant_GHz_per_uA(self) -> float:
        """``E_J[GHz] / I_c[uA]``, i.e. ``Phi0 / (2 pi h)`` in these units."""
        return self.flux_quantum / (2 * math.pi * self.planck) * 1e-6 / 1e9

    @property
    def resistance_quantum(self) -> float:
        """``h / (2e)^2`` in ohm."""
        return self.planck / (2 * self.electron_charge) ** 2


CONSTANTS = PhysicalConstants()


def charging_energy_from_capacitance(c_fF: float) -> float:
    if not c_fF > 0:
        raise ValidationError("capacitance must be positive")
    return CONSTANTS.charging_constant_GHz_fF / c_fF


def capacitance_from_charging_energy(ec_GHz: float) -> float:
    if not ec_GHz > 0:
        raise ValidationError("E_C must be positive")
    return CONSTANTS.charging_constant_GHz_fF / ec_GHz


def josephson_energy_from_current(ic_uA: float) -> float:
    return CONSTANTS.josephson_constant_GHz_per_uA * ic_uA


def critical_current_from_josephson_energy(ej_GHz: float) -> float:
    return ej_GHz / CONSTANTS.josephson_constant_GHz_per_uA


@dataclass(frozen=True)
class JunctionGeometry:
    length: float  # um
    width: float  # um
    c_s: float  # fF/um^2
    J_c: float  # uA/um^2

    def __post_init__(self):
        for name in ("length", "width", "c_s", "J_c"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValidationError(f"JunctionGeometry.{name} must be positive, got {v!r}")

    @property
    def area(self) -> float:
        return self.length * self.width


@dataclass(frozen=True)
class JunctionParams:
    E_J: float  # GHz
    E_C: float  # GHz

    def __post_init__(self):
        if not (self.E_J > 0 and self.E_C > 0):
            raise ValidationError(f"E_J and E_C must be positive, got {self.E_J}, {self.E_C}")

    @property
    def capacitance(self) -> float:
        """fF"""
        return capacitance_from_charging_energy(self.E_C)

    @property
    def critical_current(self) -> float:
        """uA"""
        return critical_current_from_josephson_energy(self.E_J)


def junction_from_geometry(g: JunctionGeometry) -> JunctionParams:
    """``C = c_s a``, ``I_c = J_c a``, ``E_J = Phi0 I_c / 2 pi``, ``E_C = e^2 / 2C``."""
    c = g.c_s * g.area
    ic = g.J_c * g.area
    return JunctionParams(
        E_J=josephson_energy_from_current(ic), E_C=charging_energy_from_capacitance(c)
    )


def reduced_impedance(j: JunctionParams) -> float:
    """``z = Z / R_Q = sqrt(8 E_C / E_J) / 2 pi``."""
    return math.sqrt(8 * j.E_C / j.E_J) / (2 * math.pi)


def plasma_frequency(j: JunctionParams) -> float:
    """``sqrt(8 E_J E_C)`` in GHz."""
    return math.sqrt(8 * j.E_J * j.E_C)


@dataclass(frozen=True)
class ArraySpec:
    """Series array of ``N`` nominally identical junctions.

    ``junction`` is either a :class:`JunctionGeometry` (energies derived) or
    explicit :class:`JunctionParams`. ``epsilon_override`` replaces the
    per-junction phase-slip energies (GHz) when given.
    """

    N: int
    junction: JunctionGeometry | JunctionParams
    epsilon_override: tuple | None = None

    def __post_init__(self):
        if not (isinstance(self.N, int) and self.N >= 1):
            raise ValidationError(f"array size N must be a positive integer, got {self.N!r}")
        if self.epsilon_override is not None:
            eps = tuple(float(v) for v in self.epsilon_override)
            if len(eps) != self.N or any(v < 0 for v in eps):
                raise ValidationError("epsilon_override needs N non-negative values")
            object.__setattr__(self, "epsilon_override", eps)

    @property
    def junction_params(self) -> JunctionParams:
        if isinstance(self.junction, JunctionParams):
            return self.junction
        return junction_from_geometry(self.junction)


def array_inductive_energy(a: ArraySpec) -> float:
    """``E_L = E_JA / N``."""
    return a.junction_params.E_J / a.N


def array_for_inductive_energy(geometry: JunctionGeometry, N: int, E_L: float) -> ArraySpec:
    """Array whose junctions take their charging energy from the geometry and
    their Josephson energy from ``E_JA = N E_L``.

    This is how measured fluxonium devices are usually described: ``E_L`` is
    known from spectroscopy, while the junction area fixes the capacitance.
    """
    if not E_L > 0:
        raise ValidationError("E_L must be positive")
    ec = charging_energy_from_capacitance(geometry.c_s * geometry.area)
    return ArraySpec(N=N, junction=JunctionParams(E_J=N * E_L, E_C=ec))


@dataclass(frozen=True)
class FluxoniumParams:
    """Hamiltonian parameters ``4 E_C (n - n_g)^2 - E_J cos(phi) + E_L/2 (phi + 2 pi phi_ext)^2``."""

    E_J: float
    E_C: float
    E_L: float
    phi_ext: float = 0.0
    n_g: float = 0.0

    def __post_init__(self):
        if not (self.E_J >= 0 and self.E_C > 0 and self.E_L > 0):
            raise ValidationError(
                f"need E_J >= 0, E_C > 0, E_L > 0; got {self.E_J}, {self.E_C}, {self.E_L}"
            )
        if not 0.0 <= self.n_g < 1.0:
            raise ValidationError("n_g must lie in [0, 1)")

    def at_flux(self, phi_ext: float) -> "FluxoniumParams":
        return replace(self, phi_ext=float(phi_ext))


@dataclass(frozen=True)
class QubitSpec:
    """A complete device description: Hamiltonian, array and flux noise.

    ``junction_length``/``junction_width`` describe one array junction;
    ``reference`` carries published comparison values (f01, T_phiR, z_A, ...).
    """

    name: str
    hamiltonian: FluxoniumParams
    N: int
    junction_length: float  # um
    junction_width: float = 0.2  # um
    c_s: float = 49.0  # fF/um^2
    J_c: float = 0.15  # uA/um^2
    A_phi: float = 3.0  # uPhi0/sqrt(Hz)
    reference: dict = field(default_factory=dict, compare=False)

    @property
    def geometry(self) -> JunctionGeometry:
        return JunctionGeometry(self.junction_length, self.junction_width, self.c_s, self.J_c)

    def array(self, josephson: str = "inductance") -> ArraySpec:
        """Array description.

        ``josephson="inductance"`` takes ``E_JA = N E_L`` from the fitted
        Hamiltonian (reproduces published ``z_A`` values); ``"geometry"`` takes
        ``E_JA`` from ``J_c`` times the area.
        """
        if josephson == "inductance":
            return array_for_inductive_energy(self.geometry, self.N, self.hamiltonian.E_L)
        if josephson == "geometry":
            return ArraySpec(N=self.N, junction=self.geometry)
        raise ValidationError(f"unknown josephson source {josephson!r}")
