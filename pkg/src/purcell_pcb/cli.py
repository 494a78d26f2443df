"""Command-line entry point: ``purcell-pcb <command> ...``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import formats
from .admittance import NoPassbandError, normalized_q_curve, passband_metrics
from .eigen import eigenmodes, identify_modes, sweep_element
from .network import FrequencyGrid
from .spectro import aggregate_fits, estimate_offset, fit_reflection, overlay_with_simulation
from .synthesis import (
    CalibrationError, PatchSpec, build_no_filter_variant, build_standalone_pcb,
    build_unit_cell, default_cell,
)

DEFAULT_GRID = "4e9:15e9:2001"


def _grid(text: str) -> FrequencyGrid:
    try:
        a, b, n = text.split(":")
        return FrequencyGrid.from_hz(formats.parse_value(a), formats.parse_value(b), int(n))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must be f1:f2:n in Hz ({exc})") from exc


def _range(text: str):
    try:
        label, spec = text.split("=", 1)
        a, b, n = spec.split(":")
        return formats.SweepSpec(label, formats.parse_value(a), formats.parse_value(b), int(n))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"sweep must be LABEL=v1:v2:n ({exc})") from exc


def _emit(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _resolve_probe(net, label: str):
    """A port label is used as is; an inductor label is replaced by a probe port."""
    if any(p.label == label for p in net.ports):
        return net, label
    el = net.element(label)
    probed, port = net.probe_inductor(el.label)
    return probed, port.label


# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    doc = formats.read_netlist(args.netlist)
    try:
        net, port = _resolve_probe(doc.netlist, args.port)
    except KeyError:
        raise ValueError(f"no port or inductor named {args.port!r}") from None
    curve = normalized_q_curve(net, port, args.grid)
    _emit(formats.qcurve_csv(curve), args.out)
    info = sys.stderr if args.out in (None, "-") else sys.stdout
    try:
        pm = passband_metrics(curve)
        print(f"center_hz = {pm.center_hz!r}", file=info)
        print(f"bandwidth_hz = {pm.bandwidth_hz!r}", file=info)
        print(f"q_filter = {pm.q_filter!r}", file=info)
    except NoPassbandError as exc:
        print(f"no passband: {exc}", file=info)
    if args.svg:
        from .plotting import plot_q_curve
        plot_q_curve(curve, args.svg, f"normalized Q at {args.port}")
    return 0


def cmd_eigen(args) -> int:
    doc = formats.read_netlist(args.netlist)
    net = doc.netlist
    band = None
    if args.band:
        lo, hi = (formats.parse_value(x) for x in args.band.split(":"))
        band = (2 * math.pi * lo, 2 * math.pi * hi)
    sweep = args.sweep or (doc.sweeps[0] if doc.sweeps else None)
    if sweep is None:
        modes = identify_modes(eigenmodes(net, band), net.group_map) if net.groups else eigenmodes(net, band)
        rows = [(m.freq_hz, m.q, m.sigma, m.subsystem, ";".join(sorted(m.flags))) for m in modes]
        _emit(formats.csv_text(["mode_freq_hz", "q", "sigma_per_s", "identity", "flags"], rows), args.out)
        return 0
    if not args.track:
        raise ValueError("--track is required with a sweep")
    trace = sweep_element(net, sweep.label, sweep.values, args.track, band)
    _emit(formats.sweep_csv(trace), args.out)
    return 0


def cmd_synth(args) -> int:
    if args.patch:
        if args.eps is None:
            raise ValueError("--patch needs --eps")
        p = PatchSpec.design(args.f_center, args.eps, args.rho)
        print(f"patch side a = {p.side * 1e3:.3f} mm")
    if args.n_res == 0:
        return 0
    spec = default_cell(args.n_res, args.n_qubits, f_center=args.f_center, bandwidth=args.bw)
    if args.standalone:
        net = build_standalone_pcb(spec)
    elif args.no_filter:
        net = build_no_filter_variant(spec)
    else:
        net = build_unit_cell(spec)
    if args.out is not None or not args.patch:
        _emit(formats.serialize_netlist(net), args.out)
    return 0


def _load_trace(path):
    p = Path(path)
    return formats.read_trace_csv(p) if p.suffix.lower() == ".csv" else formats.read_touchstone(p)


def cmd_fit(args) -> int:
    fits = [fit_reflection(_load_trace(p)) for p in args.files]
    _emit(formats.fits_csv(fits), args.out)
    info = sys.stderr if args.out in (None, "-") else sys.stdout
    try:
        s = aggregate_fits(fits)
    except ValueError as exc:
        print(f"aggregate: {exc}", file=info)
        return 1
    print(f"fits = {s.n_total}, converged = {s.n_used}, excluded = {s.n_excluded}", file=info)
    for k in ("q_int", "q_ext", "q_tot"):
        print(f"median_{k} = {s.median[k]!r} (std {s.std[k]!r})", file=info)
    print(f"q_tot_from_medians = {s.q_tot_from_medians!r}", file=info)
    return 0


def cmd_compare(args) -> int:
    fits = formats.read_fits_csv(args.fits)
    curve = formats.read_qcurve_csv(args.sim)
    offset = estimate_offset(fits, curve) if args.estimate_offset else args.offset_hz
    ov = overlay_with_simulation(fits, curve, offset)
    rows = [(r.source, r.f0, r.q_ext, r.sim_freq, r.sim_value) for r in ov.rows]
    _emit(formats.csv_text(["source", "f0_hz", "q_ext", "sim_freq_hz", "sim_value"], rows), args.out)
    info = sys.stderr if args.out in (None, "-") else sys.stdout
    print(f"offset_hz = {ov.offset_hz!r}", file=info)
    print(f"rank_correlation = {ov.rank_correlation!r}", file=info)
    if args.svg:
        from .plotting import plot_overlay
        plot_overlay(ov.rows, curve, ov.offset_hz, args.svg)
    return 0


def cmd_report(args) -> int:
    from .report import build_report

    s = build_report(args.out, args.f_center, args.bw, figure_format=args.format)
    print("\n".join(s.lines()))
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="purcell-pcb", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="normalized Q curve at a port (or probed inductor)")
    p.add_argument("netlist")
    p.add_argument("--port", required=True, help="port label, or inductor label to probe")
    p.add_argument("--grid", type=_grid, default=_grid(DEFAULT_GRID), help="f1:f2:n in Hz")
    p.add_argument("-o", "--out", help="CSV output (default stdout)")
    p.add_argument("--svg", help="also write a chart (.svg or .png)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eigen", help="eigenmodes, or a tracked inductance sweep")
    p.add_argument("netlist")
    p.add_argument("--sweep", type=_range, help="LABEL=v1:v2:n (henries)")
    p.add_argument("--track", help="qubit | resonator | filter | a group name")
    p.add_argument("--band", help="f1:f2 window in Hz")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("synth", help="calibrated unit-cell netlist and patch size")
    p.add_argument("--f-center", type=float, default=9.8e9)
    p.add_argument("--bw", type=float, default=0.9e9)
    p.add_argument("--n-res", type=int, default=1)
    p.add_argument("--n-qubits", type=int, default=None)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--no-filter", action="store_true")
    g.add_argument("--standalone", action="store_true", help="PCB only, with weakly coupled input ports")
    p.add_argument("--patch", action="store_true")
    p.add_argument("--eps", type=float)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit reflection traces (Touchstone .s1p or CSV)")
    p.add_argument("files", nargs="+")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="overlay measured Q_ext with a simulated curve")
    p.add_argument("--fits", required=True)
    p.add_argument("--sim", required=True)
    p.add_argument("--offset-hz", type=float, default=0.0)
    p.add_argument("--estimate-offset", action="store_true")
    p.add_argument("-o", "--out")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="consolidated run summary with CSVs and figures")
    p.add_argument("--out", default="report")
    p.add_argument("--f-center", type=float, default=9.8e9)
    p.add_argument("--bw", type=float, default=0.9e9)
    p.add_argument("--format", choices=("svg", "png"), default="svg")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, CalibrationError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
