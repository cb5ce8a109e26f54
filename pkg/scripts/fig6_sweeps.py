"""Design-space maps of the CQPS-limited Ramsey time at half flux."""

import argparse

import numpy as np

from cqpslab.design import fig6b_spec, fig6c_spec, fig6d_spec, sweep_cqps_limit
from cqpslab.io import write_rows

SPECS = {"6b": fig6b_spec, "6c": fig6c_spec, "6d": fig6d_spec}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("figures", nargs="*", default=sorted(SPECS))
    ap.add_argument("--points", type=int, default=31)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    for name in args.figures:
        spec = SPECS[name](args.points)
        r = sweep_cqps_limit(spec, threads=args.threads)
        write_rows(f"fig{name}.csv", r.rows())
        v = r.value[r.valid]
        print(
            f"{name}: {spec.x.name} x {spec.y.name} ({spec.rule}), T from {np.min(v):.3g} s to {np.max(v):.3g} s, "
            f"1 s contour present: {bool(np.min(v) < 1 < np.max(v))}"
        )


if __name__ == "__main__":
    main()
