"""Coherent quantum phase slips (CQPS) in the superinductor array.

Each array junction ``j`` contributes a phase-slip amplitude ``eps_j`` with an
Aharonov-Casher phase set by the charge accumulated on the islands to its
left, ``eta_j = sum_{k<j} n_g,k``. To first order the qubit level ``alpha``
shifts by ``Re[E_CQPS <psi_alpha|m+|psi_alpha>]`` with
``E_CQPS = sum_j eps_j exp(-2 pi i eta_j)``, where ``m+`` translates the
fluxonium phase by ``2 pi``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from cqpslab.circuit import FluxoniumParams
from cqpslab.errors import ConvergenceError, ValidationError
from cqpslab.spectrum import (
    TWO_PI,
    BasisConfig,
    EigenSolution,
    PhaseGrid,
    eigensystem,
    evaluate_states,
    translation_matrix,
    wavefunctions_on_grid,
)

REFINEMENT_TOL = 1e-6


@dataclass(frozen=True)
class ChargeConfiguration:
    """Island offset charges ``n_g,0..n_g,N`` in Cooper-pair units, each in [0, 1).

    Island 0 sits between the small junction and the first array junction.
    """

    offsets: tuple

    def __post_init__(self):
        arr = np.asarray(self.offsets, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValidationError("a configuration needs at least two islands (N >= 1)")
        if np.any(arr < 0) or np.any(arr >= 1) or not np.all(np.isfinite(arr)):
            raise ValidationError("offset charges must lie in [0, 1)")
        object.__setattr__(self, "offsets", tuple(float(v) for v in arr))

    @property
    def N(self) -> int:
        return len(self.offsets) - 1

    @classmethod
    def random(cls, N: int, rng: np.random.Generator) -> "ChargeConfiguration":
        return cls(tuple(rng.random(N + 1)))

    @classmethod
    def wrapped(cls, values) -> "ChargeConfiguration":
        return cls(tuple(np.mod(np.asarray(values, dtype=float), 1.0)))

    def digest(self) -> str:
        return hashlib.sha256(np.asarray(self.offsets).tobytes()).hexdigest()[:16]


def aggregated_charges(offsets) -> np.ndarray:
    """``eta_j = sum_{k<j} n_g,k`` for ``j = 1..N`` (reduced mod 1).

    Accepts a 1-D configuration or a 2-D batch with islands along the last axis.
    """
    n = np.asarray(offsets, dtype=float)
    return np.mod(np.cumsum(n[..., :-1], axis=-1), 1.0)


@dataclass
class CqpsEnergy:
    value: complex  # GHz
    configuration: str
    eps: np.ndarray = field(repr=False)


def _eps_vector(eps, N: int) -> np.ndarray:
    e = np.asarray(eps, dtype=float)
    if e.ndim == 0:
        e = np.full(N, float(e))
    if e.shape != (N,):
        raise ValidationError(f"need {N} phase-slip amplitudes for {N + 1} islands, got {e.size}")
    if np.any(e < 0):
        raise ValidationError("phase-slip amplitudes are magnitudes and must be >= 0")
    return e


def total_cqps_energy(eps, cfg: ChargeConfiguration) -> CqpsEnergy:
    """``E_CQPS = sum_j eps_j exp(-2 pi i eta_j)`` (GHz).

    ``eps`` is a scalar (homogeneous array) or a length-``N`` sequence.
    """
    e = _eps_vector(eps, cfg.N)
    eta = aggregated_charges(cfg.offsets)
    val = complex(np.sum(e * np.exp(-1j * TWO_PI * eta)))
    return CqpsEnergy(value=val, configuration=cfg.digest(), eps=e)


def cqps_energy_batch(eps, offsets) -> np.ndarray:
    """Vectorized ``E_CQPS`` for a batch of configurations ``(samples, N+1)``."""
    offsets = np.asarray(offsets, dtype=float)
    e = _eps_vector(eps, offsets.shape[-1] - 1)
    return np.exp(-1j * TWO_PI * aggregated_charges(offsets)) @ e


def sample_cqps_energies(eps, N: int, samples: int, rng: np.random.Generator, chunk: int = 20000) -> np.ndarray:
    """``E_CQPS`` for ``samples`` independent uniform-random configurations."""
    out = np.empty(samples, dtype=complex)
    for s in range(0, samples, chunk):
        m = min(chunk, samples - s)
        out[s : s + m] = cqps_energy_batch(eps, rng.random((m, N + 1)))
    return out


# --------------------------------------------------------------------------
# Structure factor
# --------------------------------------------------------------------------


def _grid_overlap(sol: EigenSolution, phi: np.ndarray, level: int) -> complex:
    psi = evaluate_states(sol, phi, [level])[0]
    shifted = evaluate_states(sol, phi - TWO_PI, [level])[0]
    return complex(np.trapezoid(np.conj(psi) * shifted, phi))


def displacement_overlap(grid: PhaseGrid, level: int, check_refinement: bool = True) -> complex:
    """``<psi|m+|psi> ~ int psi*(phi) psi(phi - 2 pi) dphi`` by the trapezoid rule.

    ``psi(phi - 2 pi)`` is evaluated from the basis expansion rather than by
    interpolation. With ``check_refinement`` the integral is repeated on a grid
    with twice the points and :class:`ConvergenceError` is raised if it moves
    by more than 1e-6.
    """
    sol = grid.solution
    if level not in grid.levels:
        raise ValidationError(f"level {level} not on the grid (levels {grid.levels})")
    val = _grid_overlap(sol, grid.phi, level)
    if check_refinement:
        fine = np.linspace(grid.phi[0], grid.phi[-1], 2 * grid.M - 1)
        val2 = _grid_overlap(sol, fine, level)
        if abs(val2 - val) > REFINEMENT_TOL:
            raise ConvergenceError(
                f"overlap changed by {abs(val2 - val):.2e} on grid refinement", coarse=val, fine=val2
            )
    return val


def basis_overlap(sol: EigenSolution, level: int) -> complex:
    """Same overlap computed exactly in the oscillator basis.

    ``m+`` is the displacement operator ``D(pi / phi_zpf)``; the gauge phase of
    a nonzero ``n_g`` contributes ``exp(-2 pi i n_g)``.
    """
    c = sol.states[:, level]
    t = translation_matrix(TWO_PI, sol.phi_zpf, sol.basis.dimension)
    val = float(c @ t @ c)
    if sol.params.n_g != 0.0:
        return val * complex(np.exp(-1j * TWO_PI * sol.params.n_g))
    return complex(val)


@dataclass
class StructureFactor:
    value: complex
    levels: tuple
    phi_ext: float
    overlaps: tuple = ()

    def __abs__(self):
        return abs(self.value)


def structure_factor(
    p: FluxoniumParams,
    alpha: int = 0,
    beta: int = 1,
    basis: BasisConfig = BasisConfig(),
    method: str = "grid",
    L: float = 8.0,
    M: int = 4096,
    check_convergence: bool = True,
) -> StructureFactor:
    """``F_ab = <b|m+|b> - <a|m+|a>``.

    ``method="grid"`` integrates on the phase grid (with boundary, norm and
    refinement checks); ``"basis"`` uses the exact oscillator-basis
    displacement matrix and is much faster, which suits dense sweeps.
    """
    k = max(alpha, beta) + 1
    sol = eigensystem(p, basis, k=max(k, 2), check_convergence=check_convergence)
    if method == "grid":
        grid = wavefunctions_on_grid(sol, L=L, M=M, levels=(alpha, beta))
        oa = displacement_overlap(grid, alpha)
        ob = displacement_overlap(grid, beta)
    elif method == "basis":
        oa = basis_overlap(sol, alpha)
        ob = basis_overlap(sol, beta)
    else:
        raise ValidationError(f"unknown method {method!r}")
    return StructureFactor(value=ob - oa, levels=(alpha, beta), phi_ext=p.phi_ext, overlaps=(oa, ob))


def structure_factor_sweep(p: FluxoniumParams, phis, basis: BasisConfig = BasisConfig()) -> np.ndarray:
    """``F_01`` (oscillator-basis method) over flux points."""
    return np.array(
        [structure_factor(p.at_flux(x), basis=basis, method="basis", check_convergence=False).value for x in phis]
    )


# --------------------------------------------------------------------------
# Frequency shift and dephasing
# --------------------------------------------------------------------------


def _fvalue(F) -> complex:
    return F.value if isinstance(F, StructureFactor) else complex(F)


def frequency_shift(E, F) -> float:
    """``h delta f01 = Re[E_CQPS F_01]`` in the units of ``E``."""
    e = E.value if isinstance(E, CqpsEnergy) else complex(E)
    return float((e * _fvalue(F)).real)


def sigma_f(N: int, eps_ps: float, F) -> float:
    """``sqrt(N/2) eps |F|``, the Gaussian spread of f01 for a homogeneous array."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    return math.sqrt(N / 2.0) * eps_ps * abs(_fvalue(F))


def cqps_dephasing_rate(N: int, eps_ps_Hz: float, F) -> float:
    """Ramsey CQPS dephasing rate ``pi sqrt(N) eps |F|`` in 1/s, ``eps`` in Hz."""
    return math.pi * math.sqrt(N) * eps_ps_Hz * abs(_fvalue(F))


def cqps_time(N: int, eps_ps_Hz: float, F) -> float:
    g = cqps_dephasing_rate(N, eps_ps_Hz, F)
    return math.inf if g == 0 else 1.0 / g
