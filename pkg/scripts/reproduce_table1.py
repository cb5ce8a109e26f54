"""Half-flux predictions for the six devices next to their tabulated values."""

import argparse

from cqpslab.dephasing import coherence_vs_flux, qubit_phase_slip_Hz
from cqpslab.presets import all_qubits


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--josephson", choices=("inductance", "geometry"), default="inductance")
    args = ap.parse_args()
    print(f"{'qubit':6}{'f01 GHz':>10}{'table':>8}{'eps kHz':>10}{'|F01|':>8}{'T_cqps us':>12}{'T_phiR us':>11}")
    for q in all_qubits(0.5):
        t = coherence_vs_flux(q, [0.5], josephson=args.josephson)
        eps = qubit_phase_slip_Hz(q, args.josephson) / 1e3
        print(
            f"{q.name:6}{t.f01_GHz[0]:10.4f}{q.reference['f01_GHz']:8.3f}{eps:10.3g}{abs(t.F01[0]):8.3f}"
            f"{t.T_cqps_s[0] * 1e6:12.4g}{q.reference['T_phiR_us']:11.3g}"
        )


if __name__ == "__main__":
    main()
