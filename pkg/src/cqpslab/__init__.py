"""Coherent-quantum-phase-slip dephasing in fluxonium qubits.

Energies are in GHz (energy / h) unless a name says otherwise; rates are in
1/s; flux is in units of the flux quantum.
"""

from cqpslab.errors import (
    ConvergenceError,
    CqpsError,
    IdentifiabilityError,
    OptimizationError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "CqpsError",
    "IdentifiabilityError",
    "OptimizationError",
    "ValidationError",
    "__version__",
]
