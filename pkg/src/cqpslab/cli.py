"""Command-line interface.

Exit codes: 0 success, 1 replay mismatch, 2 usage error, 3 invalid
configuration or missing input file.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import tempfile
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

import cqpslab
from cqpslab import analysis, design, paritysim, phaseslip
from cqpslab.circuit import FluxoniumParams, QubitSpec
from cqpslab.cqps import cqps_dephasing_rate, sigma_f, structure_factor
from cqpslab.dephasing import coherence_vs_flux, qubit_phase_slip_Hz
from cqpslab.errors import CqpsError, ValidationError
from cqpslab.io import dump_json, sha256_file, write_csv, write_rows
from cqpslab.numerics import log_bin
from cqpslab.presets import load_qubit_preset
from cqpslab.spectrum import BasisConfig, flux_sweep

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_CONFIG = 0, 1, 2, 3

PARITY_PRESETS = {"paper-fig5": paritysim.SimConfig()}


class ConfigError(Exception):
    """Invalid user configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# --------------------------------------------------------------------------
# Parameter loading
# --------------------------------------------------------------------------

HAMILTONIAN_KEYS = {"E_J_GHz": "E_J", "E_C_GHz": "E_C", "E_L_GHz": "E_L"}
OPTIONAL_KEYS = {
    "phi_ext", "n_g", "N", "junction_length_um", "junction_width_um", "c_s_fF_per_um2", "J_c_uA_per_um2",
    "A_phi_uPhi0", "name",
}


def _number(src: str, key: str, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{src}.{key}", f"expected a finite number, got {v!r}")
    return float(v)


def load_params_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"params file not found: {path}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(path, f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ConfigError(path, "expected a JSON object")
    unknown = sorted(set(data) - set(HAMILTONIAN_KEYS) - OPTIONAL_KEYS)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}", "unknown field")
    return data


def qubit_from_args(args, need_array: bool) -> QubitSpec:
    if getattr(args, "preset", None) and getattr(args, "params", None):
        raise ConfigError("--preset/--params", "give one of them, not both")
    if getattr(args, "preset", None):
        return load_qubit_preset(args.preset)
    if not getattr(args, "params", None):
        raise ConfigError("--params", "a params file or --preset is required")
    src = args.params
    d = load_params_file(src)
    h = {}
    for key, name in HAMILTONIAN_KEYS.items():
        if key not in d:
            raise ConfigError(f"{src}.{key}", "missing required field")
        h[name] = _number(src, key, d[key])
    try:
        ham = FluxoniumParams(
            h["E_J"], h["E_C"], h["E_L"], _number(src, "phi_ext", d.get("phi_ext", 0.5)), _number(src, "n_g", d.get("n_g", 0.0))
        )
    except ValidationError as exc:
        raise ConfigError(src, str(exc)) from None
    if need_array:
        for key in ("N", "junction_length_um"):
            if key not in d:
                raise ConfigError(f"{src}.{key}", "missing required field for array calculations")
    N = d.get("N", 1)
    if not isinstance(N, int) or N < 1:
        raise ConfigError(f"{src}.N", f"expected a positive integer, got {N!r}")
    return QubitSpec(
        name=str(d.get("name", Path(src).stem)),
        hamiltonian=ham,
        N=N,
        junction_length=_number(src, "junction_length_um", d.get("junction_length_um", 1.0)),
        junction_width=_number(src, "junction_width_um", d.get("junction_width_um", 0.2)),
        c_s=_number(src, "c_s_fF_per_um2", d.get("c_s_fF_per_um2", 49.0)),
        J_c=_number(src, "J_c_uA_per_um2", d.get("J_c_uA_per_um2", 0.15)),
        A_phi=_number(src, "A_phi_uPhi0", d.get("A_phi_uPhi0", 3.0)),
    )


def parse_range(text: str, field: str = "--phi") -> np.ndarray:
    """``a:b:n`` (inclusive, n points), or a single value."""
    try:
        parts = [float(x) for x in text.split(":")]
    except ValueError:
        raise ConfigError(field, f"expected 'start:stop:points' or a number, got {text!r}") from None
    if len(parts) == 1:
        return np.array(parts)
    if len(parts) != 3 or parts[2] < 1 or parts[2] != int(parts[2]):
        raise ConfigError(field, f"expected 'start:stop:points', got {text!r}")
    return np.linspace(parts[0], parts[1], int(parts[2]))


# --------------------------------------------------------------------------
# Output handling
# --------------------------------------------------------------------------


class Outputs:
    def __init__(self, out_dir: str | None):
        self.dir = Path(out_dir) if out_dir else None
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)
        self.files = []

    def csv(self, name: str, columns: dict | None = None, rows: list | None = None):
        target = (self.dir / name) if self.dir else sys.stdout
        if rows is not None:
            write_rows(target, rows)
        else:
            write_csv(target, columns)
        if self.dir:
            self.files.append(self.dir / name)

    def json(self, name: str, obj):
        target = (self.dir / name) if self.dir else None
        dump_json(obj, target)
        if self.dir:
            self.files.append(self.dir / name)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_spectrum(args, out: Outputs) -> dict:
    q = qubit_from_args(args, need_array=False)
    phis = parse_range(args.phi)
    tab = flux_sweep(q.hamiltonian, phis, BasisConfig(args.dim))
    out.csv("spectrum.csv", {k: tab[k] for k in ("phi_ext", "f01_GHz", "f02_GHz", "f12_GHz")})
    return {"qubit": q.name, "hamiltonian": asdict(q.hamiltonian), "dim": args.dim}


def cmd_coherence(args, out: Outputs) -> dict:
    q = qubit_from_args(args, need_array=True)
    if args.A_phi is not None:
        q = replace(q, A_phi=args.A_phi)
    phis = parse_range(args.phi)
    tab = coherence_vs_flux(q, phis, basis=BasisConfig(args.dim), josephson=args.josephson)
    out.csv("coherence.csv", tab.columns())
    return {"qubit": q.name, "A_phi_uPhi0": q.A_phi, "josephson": args.josephson, "dim": args.dim}


def cmd_cqps_rate(args, out: Outputs) -> dict:
    q = qubit_from_args(args, need_array=True)
    phis = parse_range(args.phi)
    eps_hz = qubit_phase_slip_Hz(q, args.josephson)
    rows = []
    for x in phis:
        F = structure_factor(q.hamiltonian.at_flux(x), basis=BasisConfig(args.dim), method=args.method)
        g = cqps_dephasing_rate(q.N, eps_hz, F)
        rows.append(
            {
                "phi_ext": float(x),
                "F01_abs": abs(F.value),
                "sigma_f_Hz": sigma_f(q.N, eps_hz, F),
                "gamma_cqps_per_s": g,
                "T_cqps_s": math.inf if g == 0 else 1.0 / g,
            }
        )
    out.csv("cqps_rate.csv", rows=rows)
    return {"qubit": q.name, "eps_ps_Hz": eps_hz, "josephson": args.josephson, "method": args.method}


def cmd_ps_amplitudes(args, out: Outputs) -> dict:
    ratios = parse_range(args.ratios, "--ratios")
    if np.any(ratios <= 0):
        raise ConfigError("--ratios", "E_J/E_C ratios must be positive")
    rows = phaseslip.amplitude_table(ratios, l_max=args.lmax, n_k=args.n_k, n_charge=args.n_charge)
    out.csv("ps_amplitudes.csv", rows=rows)
    return {"l_max": args.lmax, "n_k": args.n_k, "n_charge": args.n_charge}


def cmd_simulate_parity(args, out: Outputs) -> dict:
    base = PARITY_PRESETS[args.preset] if args.preset else paritysim.SimConfig()
    overrides = {
        "N": args.N, "n_qp": args.n_qp, "tau_qp": args.tau_qp, "dt": args.dt, "duration": args.duration,
        "realizations": args.realizations, "eps_ps": args.eps_ps,
    }
    kw = {k: v for k, v in overrides.items() if v is not None}
    kw["seed"] = args.seed
    try:
        cfg = replace(base, **kw)
    except ValidationError as exc:
        raise ConfigError("simulate-parity", str(exc)) from None
    res = paritysim.run(cfg, threads=args.threads)
    n = res.trace.size if args.trace_limit == 0 else min(args.trace_limit, res.trace.size)
    out.csv("trace.csv", {"t_s": res.times[:n], "re_ecqps_over_eps": res.trace[:n]})
    sd = res.spectrum
    if args.psd_bins_per_decade > 0:
        f, s, _ = log_bin(sd, sd.freqs[1], sd.freqs[-1], args.psd_bins_per_decade)
    else:
        f, s = sd.freqs, sd.psd
    out.csv("psd.csv", {"f_Hz": f, "S_over_eps2_per_Hz": s})
    S0, fc = paritysim.fit_lorentzian(sd)
    summary = {
        "lorentzian_S0": S0,
        "lorentzian_fc_Hz": fc,
        "flat_band_mu": analysis.fit_power_law(sd, 1e-4, 1e-2).mu if cfg.duration >= 1e4 else None,
        "slope_decade_above_corner": paritysim.loglog_slope(sd, fc, 10 * fc) if 10 * fc <= sd.freqs[-1] else None,
    }
    if out.dir:
        out.json("summary.json", summary)
    return {"config": asdict(cfg), "qp_density": res.metadata["qp_density"], "trace_rows": n,
            "psd_bins_per_decade": args.psd_bins_per_decade, "summary": summary}


def cmd_fit(args, out: Outputs) -> dict:
    kind = args.kind
    if kind == "spectrum":
        data = analysis.read_spectroscopy_csv(_require(args.input, "input"))
        if args.start:
            d = load_params_file(args.start)
            start = FluxoniumParams(*(_number(args.start, k, d[k]) if k in d else _missing(args.start, k) for k in HAMILTONIAN_KEYS))
        else:
            start = FluxoniumParams(3.2, 1.4, 0.25)
        fit = analysis.fit_spectrum(data, start, basis=BasisConfig(args.dim), seed=args.seed)
        report = fit.to_dict()
        report["start"] = asdict(start)
    elif kind == "ramsey":
        trace = analysis.read_ramsey_csv(_require(args.input, "input"), T1_us=args.T1_us)
        report = analysis.fit_ramsey(trace).to_dict()
    elif kind in ("psd", "powerlaw"):
        if kind == "psd":
            sd = analysis.frequency_psd(analysis.read_frequency_series_csv(_require(args.input, "input")))
        else:
            sd = analysis.read_spectrum_csv(_require(args.input, "input"))
        fmin = args.fmin if args.fmin is not None else sd.freqs[1]
        fmax = args.fmax if args.fmax is not None else sd.freqs[-1]
        report = analysis.fit_power_law(sd, fmin, fmax).to_dict()
        if args.dispersion is not None:
            report["A_phi_uPhi0"] = analysis.flux_amplitude_from_psd(report["M"], args.dispersion)
    elif kind == "fluxamp":
        if args.input:
            from cqpslab.io import read_csv

            path = _require(args.input, "input")
            cols = read_csv(path)
            for c in ("gamma_E_per_s", "dispersion_GHz_per_phi0"):
                if c not in cols:
                    raise ConfigError(f"{path}.{c}", "missing column")
            report = {"A_phi_uPhi0": analysis.flux_amplitude_from_echo(cols["gamma_E_per_s"], cols["dispersion_GHz_per_phi0"]),
                      "method": "echo"}
        else:
            if args.M is None or args.dispersion is None:
                raise ConfigError("--M/--dispersion", "both are required without an input file")
            report = {"A_phi_uPhi0": analysis.flux_amplitude_from_psd(args.M, args.dispersion), "method": "psd"}
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError("--kind", kind)
    out.json(f"fit_{kind}.json", report)
    return {"kind": kind, "input": args.input}


def _missing(src, key):
    raise ConfigError(f"{src}.{key}", "missing required field")


def _require(path, field):
    if not path:
        raise ConfigError(field, "an input file is required")
    if not Path(path).is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    return path


def cmd_sweep(args, out: Outputs) -> dict:
    if args.figure:
        spec = {"6b": design.fig6b_spec, "6c": design.fig6c_spec, "6d": design.fig6d_spec}[args.figure](args.points)
    else:
        path = _require(args.spec, "spec")
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(path, f"invalid JSON ({exc.msg})") from None
        try:
            spec = design.SweepSpec.from_dict(raw)
        except ValidationError as exc:
            raise ConfigError(path, str(exc)) from None
    res = design.sweep_cqps_limit(spec, basis=BasisConfig(args.dim), threads=args.threads)
    out.csv("sweep.csv", rows=res.rows())
    grid = {"y\\x": res.y}
    for ix, xv in enumerate(res.x):
        grid[repr(float(xv))] = res.value[:, ix]
    out.csv("sweep_grid.csv", grid)
    return {"spec": spec.to_dict(), "x_axis": spec.x.name, "y_axis": spec.y.name, "value": res.quantity}


def cmd_psd(args, out: Outputs) -> dict:
    series = analysis.read_frequency_series_csv(_require(args.input, "input"))
    sd = analysis.frequency_psd(series)
    out.csv("psd.csv", {"f_Hz": sd.freqs, "S_MHz2_per_Hz": sd.psd})
    return {"dt_s": sd.dt, "n_samples": sd.n_samples}


COMMANDS = {
    "spectrum": cmd_spectrum,
    "coherence": cmd_coherence,
    "cqps-rate": cmd_cqps_rate,
    "ps-amplitudes": cmd_ps_amplitudes,
    "simulate-parity": cmd_simulate_parity,
    "fit": cmd_fit,
    "sweep": cmd_sweep,
    "psd": cmd_psd,
}


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _global_flags(p: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS
    p.add_argument("--seed", type=int, default=d if suppress else 0, help="master RNG seed (default 0)")
    p.add_argument("--threads", type=int, default=d if suppress else 1, help="worker threads (default 1)")
    p.add_argument("--out", default=d if suppress else None, help="output directory (default: CSV/JSON to stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cqpslab", description="Fluxonium CQPS dephasing toolkit")
    _global_flags(parser, suppress=False)
    parser.add_argument("--version", action="version", version=f"cqpslab {cqpslab.__version__}")
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def qubit_opts(p):
        p.add_argument("--params", help="JSON file with E_J_GHz, E_C_GHz, E_L_GHz (+ N, junction_length_um, ...)")
        p.add_argument("--preset", help="built-in device Q1..Q6")
        p.add_argument("--dim", type=int, default=150, help="oscillator basis size")

    p = sub.add_parser("spectrum", parents=[common], help="transition frequencies vs flux")
    qubit_opts(p)
    p.add_argument("--phi", default="0:1:101", help="flux grid start:stop:points (flux quanta)")

    p = sub.add_parser("coherence", parents=[common], help="Ramsey dephasing budget vs flux")
    qubit_opts(p)
    p.add_argument("--phi", default="0:1:201")
    p.add_argument("--A-phi", dest="A_phi", type=float, help="flux-noise amplitude override (uPhi0/sqrt(Hz))")
    p.add_argument("--josephson", choices=("inductance", "geometry"), default="inductance")

    p = sub.add_parser("cqps-rate", parents=[common], help="structure factor and CQPS dephasing vs flux")
    qubit_opts(p)
    p.add_argument("--phi", default="0:1:101")
    p.add_argument("--josephson", choices=("inductance", "geometry"), default="inductance")
    p.add_argument("--method", choices=("basis", "grid"), default="basis")

    p = sub.add_parser("ps-amplitudes", parents=[common], help="phase-slip amplitudes vs E_J/E_C")
    p.add_argument("--ratios", default="1:50:50", help="E_J/E_C grid start:stop:points")
    p.add_argument("--lmax", type=int, default=3)
    p.add_argument("--n-k", dest="n_k", type=int, default=201)
    p.add_argument("--n-charge", dest="n_charge", type=int, default=41)

    p = sub.add_parser("simulate-parity", parents=[common], help="quasiparticle parity-switching simulation")
    p.add_argument("--preset", choices=sorted(PARITY_PRESETS))
    p.add_argument("--N", type=int)
    p.add_argument("--n-qp", dest="n_qp", type=int)
    p.add_argument("--tau-qp", dest="tau_qp", type=float, help="s")
    p.add_argument("--dt", type=float, help="s")
    p.add_argument("--duration", type=float, help="s")
    p.add_argument("--realizations", type=int)
    p.add_argument("--eps-ps", dest="eps_ps", type=float, help="GHz")
    p.add_argument("--trace-limit", type=int, default=200_000, help="rows of trace.csv to write (0: all)")
    p.add_argument("--psd-bins-per-decade", type=int, default=20, help="log-bin psd.csv (0: every bin)")

    p = sub.add_parser("fit", parents=[common], help="fit measured or synthetic data")
    p.add_argument("--kind", required=True, choices=("spectrum", "ramsey", "psd", "powerlaw", "fluxamp"))
    p.add_argument("input", nargs="?")
    p.add_argument("--start", help="JSON with starting E_J_GHz, E_C_GHz, E_L_GHz (spectrum)")
    p.add_argument("--dim", type=int, default=80)
    p.add_argument("--T1-us", dest="T1_us", type=float, default=math.inf)
    p.add_argument("--fmin", type=float)
    p.add_argument("--fmax", type=float)
    p.add_argument("--dispersion", type=float, help="df01/dPhi in GHz per flux quantum")
    p.add_argument("--M", type=float, help="power-law prefactor in MHz^2/Hz at 1 Hz")

    p = sub.add_parser("sweep", parents=[common], help="design-space sweep of the CQPS limit")
    p.add_argument("spec", nargs="?", help="SweepSpec JSON")
    p.add_argument("--figure", choices=("6b", "6c", "6d"), help="built-in sweep instead of a spec file")
    p.add_argument("--points", type=int, default=61)
    p.add_argument("--dim", type=int, default=150)

    p = sub.add_parser("psd", parents=[common], help="PSD of a frequency time series")
    p.add_argument("input")

    p = sub.add_parser("replay", parents=[common], help="re-run a manifest and compare outputs")
    p.add_argument("manifest")
    return parser


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


def _input_files(args) -> list[str]:
    files = []
    for attr in ("params", "input", "start", "spec"):
        v = getattr(args, attr, None)
        if v and Path(v).is_file():
            files.append(v)
    return files


def _strip_out(argv: list[str]) -> list[str]:
    res, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        res.append(a)
    return res


def run_command(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.command == "replay":
        return replay(args.manifest, args.out)
    t0 = time.perf_counter()
    out = Outputs(args.out)
    inputs = {f: sha256_file(f) for f in _input_files(args)}
    config = COMMANDS[args.command](args, out)
    manifest = {
        "subcommand": args.command,
        "argv": _strip_out(list(argv)),
        "config": config,
        "seed": args.seed,
        "threads": args.threads,
        "version": cqpslab.__version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "inputs": inputs,
        "outputs": {p.name: sha256_file(p) for p in out.files},
        "wall_time_s": time.perf_counter() - t0,
    }
    if out.dir:
        dump_json(manifest, out.dir / "manifest.json")
    else:
        sys.stderr.write("manifest: " + json.dumps(manifest["outputs"] or {"subcommand": args.command}) + "\n")
    return EXIT_OK


def replay(manifest_path: str, out_dir: str | None) -> int:
    p = Path(manifest_path)
    if not p.is_file():
        raise FileNotFoundError(f"manifest not found: {manifest_path}")
    m = json.loads(p.read_text())
    for key in ("argv", "outputs"):
        if key not in m:
            raise ConfigError(f"{manifest_path}.{key}", "missing field")
    for f, digest in m.get("inputs", {}).items():
        if not Path(f).is_file() or sha256_file(f) != digest:
            sys.stderr.write(f"replay: input {f} is missing or has changed\n")
            return EXIT_MISMATCH
    target = Path(out_dir) if out_dir else Path(tempfile.mkdtemp(prefix="cqpslab-replay-"))
    code = run_command(list(m["argv"]) + ["--out", str(target)])
    if code != EXIT_OK:
        return code
    bad = [name for name, digest in m["outputs"].items() if sha256_file(target / name) != digest]
    if bad:
        sys.stderr.write(f"replay: outputs differ: {', '.join(bad)}\n")
        return EXIT_MISMATCH
    sys.stderr.write(f"replay: {len(m['outputs'])} output(s) identical ({target})\n")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return run_command(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except ConfigError as exc:
        sys.stderr.write(f"error: invalid configuration: {exc}\n")
        return EXIT_CONFIG
    except (ValidationError, CqpsError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
