"""Patch sizing, lumped filter calibration and unit-cell netlist builders.

The embedded patch filter is reduced to its fundamental mode: a parallel
L_f C_f resonator at node ``filter``, tapped to the 50 ohm output through
a series stub inductance. Readout resonators couple to ``filter`` through
small capacitors; each qubit couples to its resonator and, weakly, directly
to the node its resonator couples to.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import optimize
from scipy.constants import c as SPEED_OF_LIGHT

from .network import GROUND, DomainError, Element, Netlist, Port, admittance_sweep

MAX_RESONATORS = 9

DEFAULT_CC = 1.73e-15
RESONATOR_L = 1.8e-9
QUBIT_L = 11.5e-9
RESONATOR_F = 9.8e9
QUBIT_F = 4.43e9
FILTER_C = 3.3e-12
QUBIT_CG = 4.0e-15
QUBIT_CD = 0.3e-15


class CalibrationError(RuntimeError):
    def __init__(self, message: str, achieved_q: float | None = None):
        super().__init__(message)
        self.achieved_q = achieved_q


# ---------------------------------------------------------------------------
# patch

def patch_side(f_r: float, eps_r: float, rho: float = 0.5) -> float:
    """Outer side (m) of the triangular patch whose fundamental sits at f_r (Hz)."""
    if not (f_r > 0 and eps_r > 0 and rho > 0):
        raise DomainError("f_r, eps_r and rho must be positive")
    return rho * 2 * SPEED_OF_LIGHT / (3 * f_r * math.sqrt(eps_r))


def patch_frequency(a: float, eps_r: float, rho: float = 0.5) -> float:
    """Inverse of :func:`patch_side`: fundamental frequency (Hz) of side a (m)."""
    if not (a > 0 and eps_r > 0 and rho > 0):
        raise DomainError("a, eps_r and rho must be positive")
    return rho * 2 * SPEED_OF_LIGHT / (3 * a * math.sqrt(eps_r))


@dataclass(frozen=True)
class PatchSpec:
    side: float
    f_r: float
    eps_r: float
    rho: float = 0.5

    def __post_init__(self):
        if not (self.side > 0 and self.f_r > 0 and self.eps_r > 0):
            raise DomainError("patch dimensions must be positive")
        if not 0 < self.rho <= 1:
            raise DomainError("rho must lie in (0, 1]")
        lhs = self.side * 3 * self.f_r * math.sqrt(self.eps_r)
        rhs = self.rho * 2 * SPEED_OF_LIGHT
        if abs(lhs - rhs) > 1e-9 * rhs:
            raise DomainError("side, f_r, eps_r and rho are not mutually consistent")

    @classmethod
    def design(cls, f_r: float, eps_r: float, rho: float = 0.5) -> PatchSpec:
        return cls(patch_side(f_r, eps_r, rho), f_r, eps_r, rho)


# ---------------------------------------------------------------------------
# unit cell description

@dataclass(frozen=True)
class FilterValues:
    L_f: float
    C_f: float
    L_stub: float
    R_load: float = 50.0


@dataclass(frozen=True)
class ResonatorBranch:
    C: float
    L: float = RESONATOR_L
    Cc: float = DEFAULT_CC

    @property
    def freq_hz(self) -> float:
        return 1 / (2 * math.pi * math.sqrt(self.L * (self.C + self.Cc)))


@dataclass(frozen=True)
class QubitBranch:
    """Qubit as a linear LC mode.

    ``Cg`` couples it to its resonator; ``Cd`` is the weak direct path to
    the node the resonator couples into (0 disables it).
    """

    C: float
    L: float = QUBIT_L
    Cg: float = QUBIT_CG
    Cd: float = QUBIT_CD


@dataclass(frozen=True)
class UnitCellSpec:
    """One N-1 cell. ``qubits[k]`` sits on ``resonators[k]``."""

    filter: FilterValues
    resonators: tuple[ResonatorBranch, ...]
    qubits: tuple[QubitBranch, ...] = ()
    z0: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "resonators", tuple(self.resonators))
        object.__setattr__(self, "qubits", tuple(self.qubits))
        n = len(self.resonators)
        if not 1 <= n <= MAX_RESONATORS:
            raise DomainError(f"a unit cell holds 1..{MAX_RESONATORS} resonators, got {n}")
        if len(self.qubits) > n:
            raise DomainError("more qubits than resonators")
        vals = [self.filter.L_f, self.filter.C_f, self.filter.L_stub, self.filter.R_load, self.z0]
        for r in self.resonators:
            vals += [r.C, r.L, r.Cc]
        for q in self.qubits:
            vals += [q.C, q.L, q.Cg]
            if q.Cd < 0:
                raise DomainError("direct coupling Cd must be >= 0")
        if not all(v > 0 for v in vals):
            raise DomainError("all unit-cell element values must be positive")

    @property
    def n_resonators(self) -> int:
        return len(self.resonators)


def shunt_for(freq_hz: float, L: float, loading: float = 0.0) -> float:
    """Shunt C that puts an LC (plus ``loading`` coupling capacitance) at freq_hz."""
    c = 1 / ((2 * math.pi * freq_hz) ** 2 * L) - loading
    if c <= 0:
        raise DomainError(f"cannot reach {freq_hz:.4g} Hz with L = {L:.4g} H")
    return c


def staggered_frequencies(n: int, f_center: float, bandwidth: float) -> list[float]:
    """Resonator frequencies spread uniformly across the passband."""
    if n == 1:
        return [f_center]
    return [f_center + bandwidth * (k / (n - 1) - 0.5) for k in range(n)]


# ---------------------------------------------------------------------------
# builders

def _filter_core(fv: FilterValues, z0: float):
    nodes = [GROUND, "filter", "out"]
    els = [
        Element("Lf", "inductor", ("filter", GROUND), fv.L_f),
        Element("Cf", "capacitor", ("filter", GROUND), fv.C_f),
        Element("Lstub", "inductor", ("filter", "out"), fv.L_stub),
    ]
    # the output connector's reference impedance is the filter's load
    ports = [Port("out", ("out", GROUND), fv.R_load)]
    return nodes, els, ports, {"filter": ("Lf", "Cf", "Lstub")}


def _qpu(spec: UnitCellSpec, couple_node, nodes, els, groups):
    for k, r in enumerate(spec.resonators, start=1):
        rn = f"res{k}"
        nodes.append(rn)
        els += [
            Element(f"Lr{k}", "inductor", (rn, GROUND), r.L),
            Element(f"Cr{k}", "capacitor", (rn, GROUND), r.C),
            Element(f"Cc{k}", "capacitor", (rn, couple_node(k)), r.Cc),
        ]
        groups[f"resonator{k}"] = (f"Lr{k}", f"Cr{k}")
    for k, q in enumerate(spec.qubits, start=1):
        qn = f"qb{k}"
        nodes.append(qn)
        els += [
            Element(f"Lq{k}", "inductor", (qn, GROUND), q.L),
            Element(f"Cq{k}", "capacitor", (qn, GROUND), q.C),
            Element(f"Cg{k}", "capacitor", (qn, f"res{k}"), q.Cg),
        ]
        if q.Cd > 0:
            els.append(Element(f"Cd{k}", "capacitor", (qn, couple_node(k)), q.Cd))
        groups[f"qubit{k}"] = (f"Lq{k}", f"Cq{k}")


def build_unit_cell(spec: UnitCellSpec) -> Netlist:
    """Filter + stub + output port with every resonator (and qubit) attached."""
    nodes, els, ports, groups = _filter_core(spec.filter, spec.z0)
    _qpu(spec, lambda k: "filter", nodes, els, groups)
    return Netlist(tuple(nodes), tuple(els), tuple(ports), groups)


def build_no_filter_variant(spec: UnitCellSpec) -> Netlist:
    """Each resonator's Cc goes straight to its own terminated readout line."""
    nodes = [GROUND]
    els: list[Element] = []
    ports = []
    groups: dict = {}
    for k in range(1, spec.n_resonators + 1):
        nodes.append(f"line{k}")
        ports.append(Port(f"line{k}", (f"line{k}", GROUND), spec.z0))
    _qpu(spec, lambda k: f"line{k}", nodes, els, groups)
    return Netlist(tuple(nodes), tuple(els), tuple(ports), groups)


def build_standalone_pcb(spec: UnitCellSpec) -> Netlist:
    """The PCB on its own: resonators replaced by weakly coupled input ports.

    Input port ``in{k}`` couples to the filter through resonator k's Cc.
    """
    return build_probe_pcb(spec.filter, [r.Cc for r in spec.resonators], spec.z0)


def build_probe_pcb(fv: FilterValues, couplings: Sequence[float], z0: float = 50.0) -> Netlist:
    nodes, els, ports, groups = _filter_core(fv, z0)
    for k, cc in enumerate(couplings, start=1):
        nodes.append(f"in{k}")
        els.append(Element(f"Cc{k}", "capacitor", (f"in{k}", "filter"), cc))
        ports.append(Port(f"in{k}", (f"in{k}", GROUND), z0))
    return Netlist(tuple(nodes), tuple(els), tuple(ports), groups)


# ---------------------------------------------------------------------------
# calibration

@dataclass(frozen=True)
class Calibration:
    filter: FilterValues
    center_hz: float
    bandwidth_hz: float
    iterations: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def q_loaded(self) -> float:
        return self.center_hz / self.bandwidth_hz


class _ProbeCurve:
    """omega/Re[Y] at input port 1 of the standalone PCB, evaluated off-grid."""

    def __init__(self, fv: FilterValues, couplings, z0):
        self.net = build_probe_pcb(fv, couplings, z0)

    def __call__(self, omega):
        sw = admittance_sweep(self.net, "in1", np.atleast_1d(omega))
        return np.atleast_1d(omega) / sw.y.real

    def center(self, w_guess: float) -> tuple[float, float]:
        lo, hi = 0.5 * w_guess, 1.5 * w_guess
        n = 81
        for _ in range(6):
            w = np.linspace(lo, hi, n)
            v = self(w)
            i = min(max(int(np.argmin(v)), 1), n - 2)
            lo, hi = w[i - 1], w[i + 1]
            n = 21
        # parabola through the last bracket
        x = w[i - 1 : i + 2] - w[i]
        y = v[i - 1 : i + 2]
        a = (y[0] - 2 * y[1] + y[2]) / (2 * (x[2] ** 2))
        b = (y[2] - y[0]) / (2 * x[2])
        dx = -b / (2 * a) if a > 0 else 0.0
        w_c = w[i] + dx
        return float(w_c), float(self(w_c)[0])

    def band_edges(self, w_c: float, v_min: float) -> tuple[float, float]:
        f = lambda x: float(self(x)[0]) - 2 * v_min
        hi = w_c
        while f(hi) < 0:
            hi *= 1.2
        lo = w_c
        while f(lo) < 0:
            lo /= 1.2
            if lo < 1e-3 * w_c:
                raise CalibrationError("lower 3 dB point not found")
        return (
            optimize.brentq(f, lo, w_c, xtol=1e-9 * w_c),
            optimize.brentq(f, w_c, hi, xtol=1e-9 * w_c),
        )

    def metrics(self, w_guess: float) -> tuple[float, float]:
        w_c, v_min = self.center(w_guess)
        lo, hi = self.band_edges(w_c, v_min)
        return w_c, hi - lo


def _tune_lf(C_f, L_stub, w_target, couplings, z0):
    """L_f that puts the probe-curve minimum at w_target for a given stub."""

    def centre_error(log_lf):
        fv = FilterValues(math.exp(log_lf), C_f, L_stub, z0)
        return _ProbeCurve(fv, couplings, z0).center(w_target)[0] / w_target - 1

    # stub loading looks inductive: start from the bare-LC value and widen
    guess = math.log(1 / (w_target**2 * C_f))
    a, b = guess - 0.3, guess + 0.3
    fa, fb = centre_error(a), centre_error(b)
    n = 0
    while fa * fb > 0:
        a, b = a - 0.5, b + 0.5
        fa, fb = centre_error(a), centre_error(b)
        n += 1
        if n > 12:
            raise CalibrationError("could not bracket the filter centre")
    return math.exp(optimize.brentq(centre_error, a, b, xtol=1e-13))


def calibrate_filter(
    f_center: float,
    bandwidth: float,
    C_f: float = FILTER_C,
    couplings: Sequence[float] = (DEFAULT_CC,),
    z0: float = 50.0,
) -> Calibration:
    """Solve L_f and the stub inductance for a passband centre and 3 dB width.

    The stub is the one-dimensional search variable; for each trial stub
    L_f is re-tuned so the probe curve stays centred. The loaded Q cannot
    drop below omega_c C_f z0 (zero stub); narrower-than-attainable
    requests raise :class:`CalibrationError` carrying that bound.
    """
    if not 0 < bandwidth <= f_center:
        raise DomainError("need 0 < bandwidth <= f_center")
    return _calibrate(
        float(f_center), float(bandwidth), float(C_f),
        tuple(float(c) for c in couplings) or (DEFAULT_CC,), float(z0),
    )


@functools.lru_cache(maxsize=64)
def _calibrate(f_center, bandwidth, C_f, couplings, z0) -> Calibration:
    w_t = 2 * math.pi * f_center
    q_target = f_center / bandwidth
    calls = {"n": 0}

    def q_of(log_ls):
        calls["n"] += 1
        ls = math.exp(log_ls)
        lf = _tune_lf(C_f, ls, w_t, couplings, z0)
        w_c, bw = _ProbeCurve(FilterValues(lf, C_f, ls, z0), couplings, z0).metrics(w_t)
        return w_c / bw

    # stub impedance from 1e-4 to 10 z0 at the centre
    lo = math.log(1e-4 * z0 / w_t)
    hi = math.log(10 * z0 / w_t)
    q_lo = q_of(lo)
    if q_target < q_lo:
        raise CalibrationError(
            f"loaded Q {q_target:.4g} below the topology minimum {q_lo:.4g} "
            f"for C_f = {C_f:.4g} F",
            achieved_q=q_lo,
        )
    q_hi = q_of(hi)
    if q_target > q_hi:
        raise CalibrationError(
            f"loaded Q {q_target:.4g} above the reachable {q_hi:.4g}", achieved_q=q_hi
        )
    log_ls = optimize.brentq(lambda x: q_of(x) - q_target, lo, hi, xtol=1e-10, rtol=1e-12)
    ls = math.exp(log_ls)
    lf = _tune_lf(C_f, ls, w_t, couplings, z0)
    fv = FilterValues(lf, C_f, ls, z0)
    w_c, bw = _ProbeCurve(fv, couplings, z0).metrics(w_t)
    return Calibration(fv, w_c / (2 * math.pi), bw / (2 * math.pi), calls["n"])


def default_cell(
    n_resonators: int = 1,
    n_qubits: int | None = None,
    f_center: float = RESONATOR_F,
    bandwidth: float = 0.9e9,
    resonator_freqs: Sequence[float] | None = None,
    qubit_freq: float = QUBIT_F,
    Cc: float = DEFAULT_CC,
    Cg: float = QUBIT_CG,
    Cd: float = QUBIT_CD,
    C_f: float = FILTER_C,
    calibration: Calibration | None = None,
) -> UnitCellSpec:
    """Calibrated cell with the stated inductances and solved shunt capacitances.

    Resonators default to 1.8 nH; one resonator sits at the filter centre,
    several are spread uniformly across the passband. Qubits default to
    11.5 nH at 4.43 GHz, one per resonator.
    """
    if not 1 <= n_resonators <= MAX_RESONATORS:
        raise DomainError(f"a unit cell holds 1..{MAX_RESONATORS} resonators")
    n_qubits = n_resonators if n_qubits is None else n_qubits
    if calibration is None:
        calibration = calibrate_filter(f_center, bandwidth, C_f, [Cc] * n_resonators)
    freqs = list(resonator_freqs) if resonator_freqs is not None else staggered_frequencies(
        n_resonators, f_center, bandwidth
    )
    if len(freqs) != n_resonators:
        raise DomainError("one frequency per resonator expected")
    res = []
    for k, f in enumerate(freqs):
        loading = Cc + (Cg if k < n_qubits else 0.0)
        res.append(ResonatorBranch(shunt_for(f, RESONATOR_L, loading), RESONATOR_L, Cc))
    qbs = [
        QubitBranch(shunt_for(qubit_freq, QUBIT_L, Cg + Cd), QUBIT_L, Cg, Cd)
        for _ in range(n_qubits)
    ]
    return UnitCellSpec(calibration.filter, tuple(res), tuple(qbs))


def inductance_for(freq_hz, C_total: float):
    """Inductance putting a node of total capacitance C_total at freq_hz."""
    f = np.asarray(freq_hz, dtype=float)
    return 1 / ((2 * np.pi * f) ** 2 * C_total)


def qubit_inductances(spec: UnitCellSpec, freqs_hz, index: int = 0) -> np.ndarray:
    """Qubit inductor values whose bare LC frequency (coupling caps included) is freqs_hz."""
    q = spec.qubits[index]
    return inductance_for(freqs_hz, q.C + q.Cg + q.Cd)


def resonator_inductances(spec: UnitCellSpec, freqs_hz, index: int = 0) -> np.ndarray:
    r = spec.resonators[index]
    load = r.Cc + (spec.qubits[index].Cg if index < len(spec.qubits) else 0.0)
    return inductance_for(freqs_hz, r.C + load)


def with_qubit_inductance(spec: UnitCellSpec, L: float, index: int = 0) -> UnitCellSpec:
    qbs = list(spec.qubits)
    qbs[index] = replace(qbs[index], L=L)
    return replace(spec, qubits=tuple(qbs))


# ---------------------------------------------------------------------------
# tiling

@dataclass(frozen=True)
class TilingMap:
    """Cells of a tiled PCB with how many of each cell's inputs are used."""

    cells: tuple[UnitCellSpec, ...]
    used: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "used", tuple(int(u) for u in self.used))
        if len(self.cells) != len(self.used):
            raise DomainError("one usage count per cell")
        for cell, u in zip(self.cells, self.used):
            if cell.n_resonators > MAX_RESONATORS:
                raise DomainError(f"at most {MAX_RESONATORS} inputs per cell")
            if not 0 <= u <= cell.n_resonators:
                raise DomainError("usage count exceeds the cell's inputs")

    @property
    def available(self) -> int:
        return sum(c.n_resonators for c in self.cells)

    @property
    def total_used(self) -> int:
        return sum(self.used)

    @property
    def outputs(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class TiledPCB:
    netlists: tuple[Netlist, ...]
    available: int
    used: int

    @property
    def outputs(self) -> int:
        return len(self.netlists)


def build_tiled(tiling: TilingMap) -> TiledPCB:
    """Independent per-cell netlists; shielded cells do not couple."""
    nets = tuple(build_unit_cell(c) for c in tiling.cells)
    return TiledPCB(nets, tiling.available, tiling.total_used)


def default_tiling(spec9: UnitCellSpec, spec3: UnitCellSpec, used: Sequence[int] = (8, 8, 8, 8, 2, 1)) -> TilingMap:
    """Four 9-1 cells and two 3-1 cells; ``used`` per cell (defaults sum to 35)."""
    if spec9.n_resonators != 9 or spec3.n_resonators != 3:
        raise DomainError("expected a 9-1 and a 3-1 cell")
    return TilingMap((spec9,) * 4 + (spec3,) * 2, tuple(used))
