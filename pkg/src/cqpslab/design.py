"""Design-space sweeps of the CQPS dephasing limit at half flux.

A cell is described by the fluxonium Hamiltonian ``(E_J, E_C, E_L)`` and the
array variables ``(J_c, a_A, N)`` with ``c_s`` fixed. Two closure rules tie
them together through ``E_L = E_JA / N``:

``hold_EL``
    ``J_c`` and ``a_A`` fix ``E_JA``; ``N = max(1, round(E_JA / E_L))``. The
    achieved inductive energy ``E_JA / N`` is used and reported.
``derive_area``
    ``N``, ``J_c`` and ``E_L`` fix ``E_JA = N E_L`` and hence the junction
    area ``a_A = I_c / J_c``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from cqpslab.circuit import (
    FluxoniumParams,
    JunctionParams,
    charging_energy_from_capacitance,
    critical_current_from_josephson_energy,
    josephson_energy_from_current,
)
from cqpslab.cqps import cqps_dephasing_rate, structure_factor
from cqpslab.errors import CqpsError, ValidationError
from cqpslab.phaseslip import wkb_ratio_form
from cqpslab.spectrum import BasisConfig

AXIS_NAMES = ("E_L", "a_A", "J_c", "N")
RULES = ("hold_EL", "derive_area")

DEFAULT_FIXED = {"E_J": 3.2, "E_C": 1.4, "E_L": 0.25, "J_c": 0.15, "c_s": 49.0, "phi_ext": 0.5}


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    points: int = 61
    scale: str = "log"

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ValidationError(f"axis name must be one of {AXIS_NAMES}, got {self.name!r}")
        if not (isinstance(self.points, int) and self.points >= 2):
            raise ValidationError("an axis needs at least 2 points")
        if self.scale not in ("log", "linear"):
            raise ValidationError("axis scale must be 'log' or 'linear'")
        if not (0 < self.min < self.max):
            raise ValidationError(f"axis {self.name}: need 0 < min < max")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.logspace(math.log10(self.min), math.log10(self.max), self.points)
        return np.linspace(self.min, self.max, self.points)


@dataclass(frozen=True)
class SweepSpec:
    x: Axis
    y: Axis
    rule: str = "hold_EL"
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.x.name == self.y.name:
            raise ValidationError("swept axes must be distinct")
        if self.rule not in RULES:
            raise ValidationError(f"rule must be one of {RULES}")
        merged = dict(DEFAULT_FIXED)
        merged.update(self.fixed)
        object.__setattr__(self, "fixed", merged)
        swept = {self.x.name, self.y.name}
        need = {"E_L", "a_A", "J_c"} if self.rule == "hold_EL" else {"E_L", "N", "J_c"}
        missing = [n for n in need if n not in swept and n not in merged]
        if missing:
            raise ValidationError(f"rule {self.rule!r} needs {sorted(missing)} either swept or fixed")
        if self.rule == "hold_EL" and "N" in swept:
            raise ValidationError("rule 'hold_EL' derives N; it cannot be swept")
        if self.rule == "derive_area" and "a_A" in swept:
            raise ValidationError("rule 'derive_area' derives a_A; it cannot be swept")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        try:
            return cls(
                x=Axis(**d["x"]), y=Axis(**d["y"]), rule=d.get("rule", "hold_EL"), fixed=dict(d.get("fixed", {}))
            )
        except KeyError as exc:
            raise ValidationError(f"sweep spec is missing field {exc}") from None
        except TypeError as exc:
            raise ValidationError(f"sweep spec: {exc}") from None

    def to_dict(self) -> dict:
        return {"x": self.x.__dict__, "y": self.y.__dict__, "rule": self.rule, "fixed": dict(self.fixed)}


@dataclass
class Cell:
    E_L: float  # achieved
    E_L_target: float
    a_A: float
    J_c: float
    N: int
    array_junction: JunctionParams

    def hamiltonian(self, fixed: dict) -> FluxoniumParams:
        return FluxoniumParams(fixed["E_J"], fixed["E_C"], self.E_L, phi_ext=fixed["phi_ext"])


def resolve_cell(values: dict, rule: str, c_s: float) -> Cell:
    """Close the parameter set of one sweep cell."""
    J_c = values["J_c"]
    E_L = values["E_L"]
    if rule == "hold_EL":
        a = values["a_A"]
        E_JA = josephson_energy_from_current(J_c * a)
        N = max(1, int(round(E_JA / E_L)))
        achieved = E_JA / N
    else:
        N = int(round(values["N"]))
        if N < 1:
            raise ValidationError("N must be >= 1")
        E_JA = N * E_L
        a = critical_current_from_josephson_energy(E_JA) / J_c
        achieved = E_L
    j = JunctionParams(E_J=E_JA, E_C=charging_energy_from_capacitance(c_s * a))
    return Cell(E_L=achieved, E_L_target=E_L, a_A=a, J_c=J_c, N=N, array_junction=j)


@dataclass
class SweepResult:
    spec: SweepSpec
    x: np.ndarray
    y: np.ndarray
    value: np.ndarray  # (len(y), len(x)); T in s, nan where invalid
    achieved_EL: np.ndarray
    N: np.ndarray
    area: np.ndarray
    valid: np.ndarray
    quantity: str = "T_cqps_s"

    def rows(self) -> list[dict]:
        out = []
        for iy, yv in enumerate(self.y):
            for ix, xv in enumerate(self.x):
                out.append(
                    {
                        "x": float(xv),
                        "y": float(yv),
                        "value": float(self.value[iy, ix]),
                        "achieved_EL_GHz": float(self.achieved_EL[iy, ix]),
                        "N": int(self.N[iy, ix]),
                    }
                )
        return out


class _FCache:
    """|F_01| by achieved E_L (the only cell variable the Hamiltonian sees)."""

    def __init__(self, fixed: dict, basis: BasisConfig):
        self.fixed = fixed
        self.basis = basis
        self.store = {}

    def __call__(self, E_L: float) -> float:
        key = float(E_L)
        if key not in self.store:
            p = FluxoniumParams(self.fixed["E_J"], self.fixed["E_C"], key, phi_ext=self.fixed["phi_ext"])
            self.store[key] = abs(structure_factor(p, basis=self.basis, method="basis", check_convergence=False).value)
        return self.store[key]


def sweep_cqps_limit(spec: SweepSpec, *, basis: BasisConfig = BasisConfig(), threads: int = 1) -> SweepResult:
    """``T = 1 / (pi sqrt(N) eps_ps |F_01|)`` on the spec's grid.

    ``eps_ps`` is the WKB amplitude of one array junction. Cells whose
    parameters violate a circuit invariant are marked invalid (``nan``).
    """
    xs, ys = spec.x.values(), spec.y.values()
    fixed = spec.fixed
    shape = (ys.size, xs.size)
    T = np.full(shape, np.nan)
    EL = np.full(shape, np.nan)
    Ns = np.zeros(shape, dtype=int)
    area = np.full(shape, np.nan)
    valid = np.zeros(shape, dtype=bool)
    cells = {}
    for iy, yv in enumerate(ys):
        for ix, xv in enumerate(xs):
            vals = dict(fixed)
            vals[spec.x.name] = float(xv)
            vals[spec.y.name] = float(yv)
            try:
                cells[(iy, ix)] = resolve_cell(vals, spec.rule, fixed["c_s"])
            except (ValidationError, ValueError):
                continue
    fcache = _FCache(fixed, basis)
    # structure factors first (deterministic order), then the closed-form part
    uniq = sorted({c.E_L for c in cells.values()})
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(fcache, uniq))
        fcache.store.update(dict(zip(uniq, vals)))
    for (iy, ix), c in cells.items():
        try:
            F = fcache(c.E_L)
        except CqpsError:
            continue
        eps_hz = wkb_ratio_form(c.array_junction.E_J, c.array_junction.E_C) * 1e9
        g = cqps_dephasing_rate(c.N, eps_hz, F)
        T[iy, ix] = math.inf if g == 0 else 1.0 / g
        EL[iy, ix] = c.E_L
        Ns[iy, ix] = c.N
        area[iy, ix] = c.a_A
        valid[iy, ix] = True
    return SweepResult(spec, xs, ys, T, EL, Ns, area, valid)


def sweep_structure_factor(
    el_over_ec, ej_over_ec, *, E_C: float = 1.0, phi_ext: float = 0.5, basis: BasisConfig = BasisConfig(),
    check_convergence: bool = False,
) -> np.ndarray:
    """``|F_01|`` on a grid; rows follow ``ej_over_ec``, columns ``el_over_ec``."""
    el = np.asarray(el_over_ec, dtype=float)
    ej = np.asarray(ej_over_ec, dtype=float)
    if np.any(el <= 0) or np.any(ej <= 0):
        raise ValidationError("energy ratios must be positive")
    out = np.empty((ej.size, el.size))
    for i, rj in enumerate(ej):
        for k, rl in enumerate(el):
            p = FluxoniumParams(rj * E_C, E_C, rl * E_C, phi_ext=phi_ext)
            try:
                F = structure_factor(p, basis=basis, method="basis", check_convergence=check_convergence)
            except CqpsError as exc:
                raise type(exc)(f"{exc} at E_L/E_C={rl:g}, E_J/E_C={rj:g}") from exc
            out[i, k] = abs(F.value)
    return out


def fig6b_spec(points: int = 61) -> SweepSpec:
    return SweepSpec(Axis("E_L", 0.1, 1.0, points), Axis("a_A", 0.1, 2.0, points), rule="hold_EL")


def fig6c_spec(points: int = 61) -> SweepSpec:
    return SweepSpec(Axis("J_c", 0.05, 1.0, points), Axis("N", 50, 400, points), rule="derive_area")


def fig6d_spec(points: int = 61) -> SweepSpec:
    return SweepSpec(Axis("J_c", 0.05, 1.0, points), Axis("a_A", 0.1, 2.0, points), rule="hold_EL")
