"""Fluxonium spectrum in the harmonic-oscillator basis of the (E_C, E_L) mode.

With ``theta = phi + 2 pi phi_ext`` the Hamiltonian reads

    H = sqrt(8 E_C E_L) (a^dag a + 1/2) - E_J cos(theta - 2 pi phi_ext),
    theta = phi_zpf (a + a^dag),  phi_zpf = (2 E_C / E_L)^(1/4).

``exp(i theta)`` is an oscillator displacement operator whose matrix elements
are known in closed form (generalized Laguerre polynomials), so the cosine is
represented without any grid or series truncation beyond the basis cutoff.

An offset charge ``n_g`` is removed by the gauge transformation
``exp(i n_g phi)``: energies do not depend on it and eigenfunctions pick up
that phase factor. Solutions are therefore always computed at ``n_g = 0`` and
the phase is applied when wavefunctions or overlaps are requested.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from cqpslab.circuit import FluxoniumParams
from cqpslab.errors import ConvergenceError, ValidationError
from cqpslab.numerics import symmetric_eigen

TWO_PI = 2.0 * np.pi
CONVERGENCE_TOL_GHZ = 1e-6


@dataclass(frozen=True)
class BasisConfig:
    dimension: int = 150

    def __post_init__(self):
        if not (isinstance(self.dimension, (int, np.integer)) and self.dimension >= 20):
            raise ValidationError(f"basis dimension must be an integer >= 20, got {self.dimension!r}")

    def doubled(self) -> "BasisConfig":
        return BasisConfig(2 * int(self.dimension))


def phi_zpf(E_C: float, E_L: float) -> float:
    return (2.0 * E_C / E_L) ** 0.25


@lru_cache(maxsize=256)
def _displacement_magnitudes(x: float, dim: int) -> np.ndarray:
    # |<m|D(beta)|n>| up to sign/phase for |beta| = x:
    # sqrt(lo!/hi!) x^d exp(-x^2/2) L_lo^(d)(x^2), d = |m - n|
    m = np.arange(dim)[:, None]
    n = np.arange(dim)[None, :]
    lo = np.minimum(m, n)
    hi = np.maximum(m, n)
    d = hi - lo
    with np.errstate(divide="ignore"):
        log_x = np.log(x) if x > 0 else -np.inf
    logpre = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) + np.where(d > 0, d * log_x, 0.0) - 0.5 * x * x
    out = np.exp(logpre) * eval_genlaguerre(lo, d, x * x)
    out.setflags(write=False)
    return out


def exp_i_theta(zpf: float, dim: int):
    """Real and imaginary parts of ``exp(i zpf (a + a^dag))``.

    Both parts are real symmetric: ``cos(theta)`` and ``sin(theta)``.
    """
    r = _displacement_magnitudes(float(zpf), int(dim))
    d = np.abs(np.arange(dim)[:, None] - np.arange(dim)[None, :])
    # element phase is i^|m-n|
    cos_part = np.where(d % 2 == 0, r * np.where(d % 4 == 0, 1.0, -1.0), 0.0)
    sin_part = np.where(d % 2 == 1, r * np.where(d % 4 == 1, 1.0, -1.0), 0.0)
    return cos_part, sin_part


def translation_matrix(shift: float, zpf: float, dim: int) -> np.ndarray:
    """Matrix of ``psi(theta) -> psi(theta - shift)`` in the oscillator basis.

    This is the displacement ``D(beta)`` with real ``beta = shift / (2 zpf)``.
    """
    beta = shift / (2.0 * zpf)
    r = _displacement_magnitudes(abs(float(beta)), int(dim))
    m = np.arange(dim)[:, None]
    n = np.arange(dim)[None, :]
    # <m|D|n> carries beta^(m-n) for m >= n and (-beta)^(n-m) for m < n
    sign_below = np.sign(beta) ** (m - n)
    sign_above = (-np.sign(beta)) ** (n - m)
    return np.where(m >= n, sign_below, sign_above) * r


def hamiltonian_matrix(p: FluxoniumParams, basis: BasisConfig = BasisConfig()) -> np.ndarray:
    """Real symmetric matrix of the fluxonium Hamiltonian (``n_g`` gauged away)."""
    dim = int(basis.dimension)
    zpf = phi_zpf(p.E_C, p.E_L)
    cos_t, sin_t = exp_i_theta(zpf, dim)
    a = TWO_PI * p.phi_ext
    h = -p.E_J * (np.cos(a) * cos_t + np.sin(a) * sin_t)
    h[np.diag_indices(dim)] += np.sqrt(8.0 * p.E_C * p.E_L) * (np.arange(dim) + 0.5)
    return h


@dataclass
class EigenSolution:
    """Lowest eigenpairs. ``states[:, i]`` are oscillator-basis coefficients
    of the ``n_g = 0`` eigenfunction ``i``; ``converged`` is None when the
    basis-doubling check was skipped."""

    params: FluxoniumParams
    energies: np.ndarray
    states: np.ndarray
    basis: BasisConfig
    converged: bool | None = None
    doubled_energies: np.ndarray | None = field(default=None, repr=False)

    @property
    def phi_zpf(self) -> float:
        return phi_zpf(self.params.E_C, self.params.E_L)

    @property
    def k(self) -> int:
        return self.energies.size


def eigensystem(
    p: FluxoniumParams,
    basis: BasisConfig = BasisConfig(),
    k: int = 6,
    *,
    check_convergence: bool = True,
    tol: float = CONVERGENCE_TOL_GHZ,
) -> EigenSolution:
    """Diagonalize the fluxonium Hamiltonian.

    With ``check_convergence`` the problem is re-solved in a basis of twice
    the dimension and :class:`ConvergenceError` is raised if any retained
    energy moves by more than ``tol`` GHz.
    """
    if not 1 <= k <= basis.dimension // 3:
        raise ValidationError(f"k must lie in [1, dimension/3 = {basis.dimension // 3}], got {k}")
    w, v = symmetric_eigen(hamiltonian_matrix(p, basis), k)
    sol = EigenSolution(params=p, energies=w, states=v, basis=basis)
    if check_convergence:
        w2, _ = symmetric_eigen(hamiltonian_matrix(p, basis.doubled()), k)
        sol.doubled_energies = w2
        shift = np.max(np.abs(w2 - w))
        sol.converged = bool(shift < tol)
        if not sol.converged:
            raise ConvergenceError(
                f"energies moved by {shift:.3e} GHz when the basis was doubled",
                energies=w,
                doubled_energies=w2,
            )
    return sol


def transition_frequency(sol: EigenSolution, a: int, b: int) -> float:
    if not b > a:
        raise ValidationError(f"need b > a, got a={a}, b={b}")
    if a < 0 or b >= sol.k:
        raise ValidationError(f"levels ({a}, {b}) outside the {sol.k} computed")
    return float(sol.energies[b] - sol.energies[a])


def _transition(p: FluxoniumParams, phi: float, a: int, b: int, basis: BasisConfig) -> float:
    w, _ = symmetric_eigen(hamiltonian_matrix(p.at_flux(phi), basis), b + 1)
    return float(w[b] - w[a])


def flux_dispersion(
    p: FluxoniumParams,
    a: int = 0,
    b: int = 1,
    dphi: float = 1e-4,
    basis: BasisConfig = BasisConfig(),
) -> float:
    """Central-difference ``d f_ab / d phi_ext`` in GHz per flux quantum.

    A step-halving (Richardson) comparison is made; a ``RuntimeWarning`` is
    issued when the two estimates differ by more than 0.1 %.
    """
    if not 1e-6 <= dphi <= 1e-2:
        raise ValidationError("dphi must lie in [1e-6, 1e-2]")
    x = p.phi_ext

    def cd(h):
        return (_transition(p, x + h, a, b, basis) - _transition(p, x - h, a, b, basis)) / (2 * h)

    d1 = cd(dphi)
    d2 = cd(dphi / 2)
    if abs(d1 - d2) > 1e-3 * abs(d2) + 1e-6:
        warnings.warn(
            f"flux_dispersion: step halving changed the result from {d1:.6g} to {d2:.6g}",
            RuntimeWarning,
            stacklevel=2,
        )
    return d2 + (d2 - d1) / 3.0


def flux_sweep(p: FluxoniumParams, phis, basis: BasisConfig = BasisConfig()) -> dict:
    """f01, f02, f12 (GHz) over a list of flux points."""
    phis = np.asarray(phis, dtype=float)
    out = {"phi_ext": phis, "f01_GHz": np.empty(phis.size), "f02_GHz": np.empty(phis.size), "f12_GHz": np.empty(phis.size)}
    for i, phi in enumerate(phis):
        w, _ = symmetric_eigen(hamiltonian_matrix(p.at_flux(phi), basis), 3)
        out["f01_GHz"][i] = w[1] - w[0]
        out["f02_GHz"][i] = w[2] - w[0]
        out["f12_GHz"][i] = w[2] - w[1]
    return out


# --------------------------------------------------------------------------
# Phase-basis wavefunctions
# --------------------------------------------------------------------------


def hermite_functions(x, nmax: int) -> np.ndarray:
    """Normalized Hermite functions ``h_0..h_{nmax-1}`` at ``x`` (rows)."""
    x = np.asarray(x, dtype=float)
    h = np.zeros((nmax,) + x.shape)
    h[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if nmax > 1:
        h[1] = np.sqrt(2.0) * x * h[0]
    for n in range(2, nmax):
        h[n] = np.sqrt(2.0 / n) * x * h[n - 1] - np.sqrt((n - 1) / n) * h[n - 2]
    return h


def basis_functions(sol: EigenSolution, phi) -> np.ndarray:
    """Oscillator eigenfunctions centred on the inductive minimum, at ``phi``."""
    zpf = sol.phi_zpf
    s = np.sqrt(2.0) * zpf
    theta = np.asarray(phi, dtype=float) + TWO_PI * sol.params.phi_ext
    return hermite_functions(theta / s, int(sol.basis.dimension)) / np.sqrt(s)


def evaluate_states(sol: EigenSolution, phi, levels=None) -> np.ndarray:
    """Eigenfunctions ``psi_alpha(phi)`` (rows), including the ``n_g`` gauge phase."""
    levels = range(sol.k) if levels is None else levels
    coeffs = sol.states[:, list(levels)]
    vals = coeffs.T @ basis_functions(sol, phi)
    if sol.params.n_g != 0.0:
        vals = vals * np.exp(1j * sol.params.n_g * np.asarray(phi, dtype=float))
    return vals


@dataclass
class PhaseGrid:
    phi: np.ndarray
    values: np.ndarray  # (levels, M)
    levels: tuple
    L: float
    M: int
    solution: EigenSolution = field(repr=False)

    def norms(self) -> np.ndarray:
        return np.trapezoid(np.abs(self.values) ** 2, self.phi, axis=-1)


BOUNDARY_TOL = 1e-8
NORM_TOL = 1e-6


def wavefunctions_on_grid(
    sol: EigenSolution, L: float = 8.0, M: int = 4096, levels=None
) -> PhaseGrid:
    """Eigenfunctions on the uniform grid ``phi in [-L pi, L pi]`` with ``M`` points.

    Raises :class:`ConvergenceError` when a state has amplitude above 1e-8 at
    the grid edge (increase ``L``) or its trapezoid norm is off by more than
    1e-6 (increase ``M``).
    """
    levels = tuple(range(sol.k) if levels is None else levels)
    phi = np.linspace(-L * np.pi, L * np.pi, int(M))
    vals = evaluate_states(sol, phi, levels)
    grid = PhaseGrid(phi=phi, values=vals, levels=levels, L=L, M=int(M), solution=sol)
    edge = np.max(np.abs(vals[:, [0, -1]]))
    if edge > BOUNDARY_TOL:
        raise ConvergenceError(
            f"wavefunction amplitude {edge:.2e} at the grid edge; increase L (now {L})", edge=edge
        )
    norms = grid.norms()
    if np.max(np.abs(norms - 1.0)) > NORM_TOL:
        raise ConvergenceError(f"grid norms {norms} deviate from 1; increase M (now {M})", norms=norms)
    return grid


def potential(p: FluxoniumParams, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    return -p.E_J * np.cos(phi) + 0.5 * p.E_L * (phi + TWO_PI * p.phi_ext) ** 2


def flux_derivative_operator(p: FluxoniumParams, basis: BasisConfig = BasisConfig()) -> np.ndarray:
    """``dH / d phi_ext`` in the oscillator basis (GHz per flux quantum)."""
    cos_t, sin_t = exp_i_theta(phi_zpf(p.E_C, p.E_L), int(basis.dimension))
    a = TWO_PI * p.phi_ext
    return -TWO_PI * p.E_J * (np.cos(a) * sin_t - np.sin(a) * cos_t)


def level_slopes(sol: EigenSolution) -> np.ndarray:
    """``d E_alpha / d phi_ext`` for every computed level (Hellmann-Feynman)."""
    dh = flux_derivative_operator(sol.params, sol.basis)
    return np.einsum("ia,ij,ja->a", sol.states, dh, sol.states)


def dispersion_hellmann_feynman(sol: EigenSolution, a: int = 0, b: int = 1) -> float:
    """``d f_ab / d phi_ext`` from eigenvector expectation values (GHz per flux quantum)."""
    s = level_slopes(sol)
    return float(s[b] - s[a])
