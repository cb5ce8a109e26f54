"""Bundled device presets."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from cqpslab.circuit import FluxoniumParams, QubitSpec
from cqpslab.errors import ValidationError

QUBIT_NAMES = ("Q1", "Q2", "Q3", "Q4", "Q5", "Q6")

# Parameters used for the single-device illustrations and the design sweeps.
ILLUSTRATION_PARAMS = FluxoniumParams(E_J=3.2, E_C=1.4, E_L=0.25)


@lru_cache(maxsize=1)
def load_table() -> dict:
    with resources.files("cqpslab").joinpath("data/table1.json").open() as fh:
        return json.load(fh)


def load_qubit_preset(name: str, phi_ext: float = 0.5) -> QubitSpec:
    table = load_table()
    try:
        row = table["qubits"][name]
    except KeyError:
        raise ValidationError(f"unknown qubit preset {name!r}; choose one of {', '.join(QUBIT_NAMES)}") from None
    d = table["defaults"]
    ref = {k: row[k] for k in ("f01_GHz", "T1_us", "T_phiR_us", "T_phiE_us", "z_A")}
    return QubitSpec(
        name=name,
        hamiltonian=FluxoniumParams(row["E_J_GHz"], row["E_C_GHz"], row["E_L_GHz"], phi_ext=phi_ext),
        N=int(row["N"]),
        junction_length=row["junction_length_um"],
        junction_width=d["junction_width_um"],
        c_s=d["c_s_fF_per_um2"],
        J_c=d["J_c_uA_per_um2"],
        A_phi=row["A_phi_uPhi0"],
        reference=ref,
    )


def all_qubits(phi_ext: float = 0.5) -> list[QubitSpec]:
    return [load_qubit_preset(n, phi_ext) for n in QUBIT_NAMES]
