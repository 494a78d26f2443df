"""Consolidated run: passband, filtering ratio, Purcell suppression and T1 limits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import formats, plotting
from .admittance import (
    filtering_ratio, normalized_q_curve, passband_metrics, single_pole_filtering_ratio,
)
from .eigen import SweepTrace, compare_with_without_filter, eigenmodes, identify_modes, sweep_element
from .network import DomainError, FrequencyGrid
from .purcell import t1_radiative
from .synthesis import (
    build_no_filter_variant, build_standalone_pcb, build_unit_cell, default_cell,
    qubit_inductances, resonator_inductances,
)

F_STOP = 4.4e9
F_T1 = 4.1e9


def q_at(trace: SweepTrace, freq_hz: float) -> float:
    """Tracked-mode Q at ``freq_hz``, interpolated in log Q over mode frequency."""
    f, q = trace.freq_hz, trace.q
    ok = np.isfinite(f) & np.isfinite(q) & (q > 0)
    f, q = f[ok], q[ok]
    order = np.argsort(f)
    f, q = f[order], q[order]
    if f.size == 0 or not f[0] <= freq_hz <= f[-1]:
        raise DomainError(f"{freq_hz:.6g} Hz outside the tracked range")
    return float(np.exp(np.interp(freq_hz, f, np.log(q))))


@dataclass(frozen=True)
class ReportSummary:
    center_hz: float
    bandwidth_hz: float
    q_filter: float
    filter_mode_q: float
    filtering_ratio_db: float
    filtering_ratio_single_pole_db: float
    suppression_db_at_stop: float
    suppression_factor_at_stop: float
    suppression_db_at_center: float
    q_qubit_filter_at_t1: float
    q_qubit_nofilter_at_t1: float
    t1_limit_filter_s: float
    t1_limit_nofilter_s: float

    def lines(self) -> list[str]:
        return [f"{k} = {float(v)!r}" for k, v in asdict(self).items()]


def build_report(outdir, f_center: float = 9.8e9, bandwidth: float = 0.9e9,
                 grid: tuple[float, float, int] = (4e9, 15e9, 2001), figure_format: str = "svg",
                 n_sweep: int = 60) -> ReportSummary:
    """Compute every report quantity for the calibrated 1-resonator/1-qubit cell
    and write CSVs, figures and ``summary.txt`` into ``outdir``."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    spec = default_cell(1, 1, f_center=f_center, bandwidth=bandwidth)
    net = build_unit_cell(spec)

    # modal-network curve of the PCB alone
    fg = FrequencyGrid.from_hz(*grid)
    curve = normalized_q_curve(build_standalone_pcb(spec), "in1", fg)
    pm = passband_metrics(curve)
    ratio = filtering_ratio(curve, 2 * math.pi * F_STOP, pm.center)
    oracle = single_pole_filtering_ratio(F_STOP, pm.center_hz, pm.center_hz, pm.q_filter)
    formats.write_qcurve_csv(out / "q_curve.csv", curve)
    plotting.plot_q_curve(curve, out / f"q_curve.{figure_format}", "normalized Q at input port",
                          (F_STOP, pm.center_hz))

    groups = net.group_map
    fmodes = [m for m in identify_modes(eigenmodes(net), groups) if m.subsystem == "filter"]
    filter_q = fmodes[0].q if fmodes else math.nan

    # qubit sweep with and without the filter
    fq = np.linspace(3.8e9, 10.5e9, n_sweep)
    comp = compare_with_without_filter(spec, qubit_inductances(spec, fq))
    formats.write_sweep_csv(out / "qubit_sweep_filter.csv", comp.with_filter)
    formats.write_sweep_csv(out / "qubit_sweep_nofilter.csv", comp.without_filter)
    plotting.plot_sweeps(
        {"with filter": comp.with_filter, "without filter": comp.without_filter},
        out / f"qubit_sweep.{figure_format}", "qubit mode Q", "Q_qb",
    )
    supp = comp.suppression_at(F_STOP)
    supp_c = comp.suppression_at(pm.center_hz)
    q_with = q_at(comp.with_filter, F_T1)
    q_without = q_at(comp.without_filter, F_T1)

    # resonator sweep with and without the filter
    fr = np.linspace(4e9, 15e9, 50)
    Ls = resonator_inductances(spec, fr)
    rt = sweep_element(net, "Lr1", Ls, "resonator1")
    rn = sweep_element(build_no_filter_variant(spec), "Lr1", Ls, "resonator1")
    formats.write_sweep_csv(out / "resonator_sweep_filter.csv", rt)
    formats.write_sweep_csv(out / "resonator_sweep_nofilter.csv", rn)
    plotting.plot_sweeps({"with filter": rt, "without filter": rn},
                         out / f"resonator_sweep.{figure_format}", "resonator mode Q", "Q_res")

    w = 2 * math.pi * F_T1
    summary = ReportSummary(
        pm.center_hz, pm.bandwidth_hz, pm.q_filter, filter_q, ratio, oracle,
        supp, 10 ** (supp / 10), supp_c, q_with, q_without,
        t1_radiative(q_with, w), t1_radiative(q_without, w),
    )
    (out / "summary.txt").write_text("\n".join(summary.lines()) + "\n")
    return summary
