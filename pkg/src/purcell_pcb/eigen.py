"""Complex eigenmodes of terminated lumped networks, mode labelling and sweeps.

The network is written in descriptor form E dx/dt = A x with x = node
voltages and inductor currents; the finite eigenvalues of the pencil
(A, E) are the natural frequencies s = -sigma + i omega_d.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg

from .network import GROUND, DomainError, Netlist

# scaling of the pencil: time unit 0.1 ns, impedance unit 50 ohm
_T0 = 1e-10
_ZS = 50.0

CATEGORIES = ("filter", "resonator", "qubit")


@dataclass(frozen=True)
class Mode:
    """One natural frequency of the network.

    ``participation`` maps element labels to their share of the stored
    energy. ``subsystem`` is the group a mode was assigned to (e.g.
    ``resonator3``), ``identity`` its category.
    """

    s: complex
    participation: Mapping[str, float] = field(default_factory=dict, repr=False)
    subsystem: str = "other"
    flags: frozenset = frozenset()

    @property
    def sigma(self) -> float:
        return max(-self.s.real, 0.0)

    @property
    def omega(self) -> float:
        return self.s.imag

    @property
    def omega0(self) -> float:
        """Undamped natural frequency |s|."""
        return abs(self.s)

    @property
    def freq_hz(self) -> float:
        return self.s.imag / (2 * math.pi)

    @property
    def q(self) -> float:
        """|s| / (2 sigma); infinite for a lossless mode.

        Equals omega_d / (2 sigma) up to O(1/Q^2), and for a parallel RLC it
        is exactly R sqrt(C/L).
        """
        if self.sigma == 0.0:
            return math.inf
        return abs(self.s) / (2 * self.sigma)

    @property
    def identity(self) -> str:
        cat = re.sub(r"\d+$", "", self.subsystem)
        return cat if cat in CATEGORIES else "other"

    def share(self, groups: Mapping[str, Iterable[str]], name: str) -> float:
        return sum(self.participation.get(lab, 0.0) for lab in groups.get(name, ()))


def _pencil(net: Netlist):
    if any(el.kind == "tline" for el in net.elements):
        raise DomainError("eigenmode analysis supports lumped R, L, C elements only")
    net = net.terminated()
    used = {t for el in net.elements for t in el.terminals}
    nodes = [n for n in net.internal_nodes if n in used]
    idx = {n: i for i, n in enumerate(nodes)}
    inductors = [el for el in net.elements if el.kind == "inductor"]
    n, m = len(nodes), len(inductors)
    G = np.zeros((n, n))
    C = np.zeros((n, n))
    AL = np.zeros((n, m))
    for el in net.elements:
        a, b = (idx.get(t) for t in el.terminals)
        if el.kind == "inductor":
            continue
        y = _ZS / el.value if el.kind == "resistor" else el.value * _ZS / _T0
        M = G if el.kind == "resistor" else C
        for i in (a, b):
            if i is not None:
                M[i, i] += y
        if a is not None and b is not None:
            M[a, b] -= y
            M[b, a] -= y
    for k, el in enumerate(inductors):
        a, b = (idx.get(t) for t in el.terminals)
        if a is not None:
            AL[a, k] = 1.0
        if b is not None:
            AL[b, k] = -1.0
    Lp = np.array([el.value / (_ZS * _T0) for el in inductors])
    A = np.block([[-G, -AL], [AL.T, np.zeros((m, m))]])
    E = np.block([[C, np.zeros((n, m))], [np.zeros((m, n)), np.diag(Lp)]])
    return net, idx, inductors, A, E


def _participation(net: Netlist, idx, inductors, x: np.ndarray) -> dict[str, float]:
    n = len(idx)
    energy = {}
    for el in net.elements:
        if el.kind == "capacitor":
            va, vb = (x[idx[t]] if t != GROUND else 0.0 for t in el.terminals)
            energy[el.label] = el.value * _ZS / _T0 * abs(va - vb) ** 2
    for k, el in enumerate(inductors):
        energy[el.label] = el.value / (_ZS * _T0) * abs(x[n + k]) ** 2
    total = sum(energy.values())
    return {k: v / total for k, v in energy.items()}


def _refine(A, E, lam, x, steps=3):
    """Newton/inverse-iteration polish of one eigenpair of (A, E)."""
    for _ in range(steps):
        M = A - lam * E
        try:
            y = np.linalg.solve(M, E @ x)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(y)):
            break
        x_new = y / np.linalg.norm(y)
        # Rayleigh-type quotient with the conjugate-free left vector of a
        # symmetric-structured pencil is not available; use the residual fit
        Ex = E @ x_new
        lam_new = np.vdot(Ex, A @ x_new) / np.vdot(Ex, Ex)
        if not np.isfinite(lam_new):
            break
        x, lam = x_new, lam_new
    return lam, x


def eigenmodes(net: Netlist, band: tuple[float, float] | None = None) -> list[Mode]:
    """Oscillatory natural modes of ``net`` with ports replaced by their z0.

    ``band`` is an optional (omega_lo, omega_hi) window in rad/s. Conjugate
    pairs are collapsed to the member with omega_d > 0; overdamped (real)
    eigenvalues are dropped. Sorted by frequency.
    """
    tnet, idx, inductors, A, E = _pencil(net)
    if E.size == 0 or not np.any(np.diag(E) > 0):
        return []
    w, v = scipy.linalg.eig(A, E)
    finite = np.isfinite(w) & (np.abs(w) < 1e6)
    modes = []
    lams = []
    for k in np.flatnonzero(finite):
        lam = w[k]
        if lam.imag <= 1e-9 * abs(lam):
            continue
        lam, x = _refine(A, E, lam, v[:, k])
        lams.append(lam)
        s = complex(lam) / _T0
        if band is not None and not band[0] <= s.imag <= band[1]:
            continue
        flags = set()
        if -s.real <= 1e-13 * abs(s):
            s = complex(0.0, s.imag)
            flags.add("lossless")
        modes.append((s, _participation(tnet, idx, inductors, x), flags))
    lams = np.array(lams)
    out = []
    for s, part, flags in modes:
        near = np.abs(lams * (1 / _T0) - s) < 1e-7 * abs(s)
        if near.sum() > 1:
            flags.add("degenerate")
        out.append(Mode(s, part, flags=frozenset(flags)))
    out.sort(key=lambda m: m.omega)
    return out


def identify_modes(
    modes: Sequence[Mode],
    groups: Mapping[str, Iterable[str]],
    hybrid_share: float | None = 0.4,
) -> list[Mode]:
    """Label each mode with the subsystem that holds most of its energy.

    A mode is ``other`` when its leading subsystem holds less than
    ``hybrid_share`` of the energy, or when the runner-up also reaches that
    share (a two-way hybrid near an avoided crossing). With
    ``hybrid_share=None`` exact ties go to the lower-Q subsystem and are
    flagged ``tie``.
    """
    groups = {k: tuple(v) for k, v in groups.items()}
    labelled = []
    for m in modes:
        shares = sorted(
            ((m.share(groups, name), name) for name in groups), reverse=True
        )
        flags = set(m.flags)
        if not shares:
            labelled.append(Mode(m.s, m.participation, "other", frozenset(flags)))
            continue
        top, name = shares[0]
        second = shares[1][0] if len(shares) > 1 else 0.0
        if hybrid_share is not None:
            if top < hybrid_share or second >= hybrid_share:
                flags.add("hybridized")
                name = "other"
        elif len(shares) > 1 and abs(top - second) <= 1e-9:
            tied = [nm for sh, nm in shares if abs(sh - top) <= 1e-9]
            # the lossier subsystem is the one whose own modes have lower Q
            q_of = {}
            for other in modes:
                best = max(groups, key=lambda g: other.share(groups, g))
                q_of[best] = min(q_of.get(best, math.inf), other.q)
            name = min(tied, key=lambda nm: q_of.get(nm, math.inf))
            flags.add("tie")
        labelled.append(Mode(m.s, m.participation, name, frozenset(flags)))
    return labelled


# ---------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class TracePoint:
    value: float
    mode: Mode | None
    flags: frozenset = frozenset()

    @property
    def is_gap(self) -> bool:
        return self.mode is None


@dataclass(frozen=True)
class SweepTrace:
    """Tracked mode versus the value of one swept inductor."""

    label: str
    track: str
    points: tuple[TracePoint, ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    @property
    def freq_hz(self) -> np.ndarray:
        return np.array([p.mode.freq_hz if p.mode else np.nan for p in self.points])

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * self.freq_hz

    @property
    def q(self) -> np.ndarray:
        return np.array([p.mode.q if p.mode else np.nan for p in self.points])


def _track_share(mode: Mode, groups, track: str) -> float:
    names = [g for g in groups if g == track or re.sub(r"\d+$", "", g) == track]
    return max((mode.share(groups, g) for g in names), default=0.0)


def _select(modes, groups, track, prev, min_share):
    if not modes:
        return None, set()
    shares = [_track_share(m, groups, track) for m in modes]
    best = int(np.argmax(shares))
    if shares[best] < min_share:
        return None, {"gap"}
    if prev is None:
        return modes[best], set()
    near = int(np.argmin([abs(m.s - prev.s) for m in modes]))
    if near == best:
        return modes[best], set()
    # participation-consistency veto on the nearest neighbour
    if shares[near] < 0.5 and shares[near] < shares[best]:
        return modes[best], {"jump"}
    return modes[near], set()


def sweep_element(
    net: Netlist,
    label: str,
    values: Sequence[float],
    track: str,
    band: tuple[float, float] | None = None,
    groups: Mapping[str, Iterable[str]] | None = None,
    min_share: float = 0.2,
) -> SweepTrace:
    """Re-solve the eigenmodes for each inductor value and follow one subsystem.

    ``track`` is a group name (``resonator2``) or a category (``qubit``).
    Between adjacent points the nearest eigenvalue is followed unless it has
    lost the tracked character, in which case the most ``track``-like mode
    is taken and the point flagged ``jump``. Points where the subsystem is
    absent from the band are gaps.
    """
    el = net.element(label)
    if el.kind != "inductor":
        raise DomainError(f"{label} is not an inductor")
    vals = np.asarray(values, dtype=float)
    if vals.size == 0 or np.any(vals <= 0):
        raise DomainError("sweep values must be positive")
    if vals.size > 1 and not (np.all(np.diff(vals) > 0) or np.all(np.diff(vals) < 0)):
        raise DomainError("sweep values must be strictly monotonic")
    groups = dict(net.groups if groups is None else groups)
    if not groups:
        raise DomainError("mode tracking needs a subsystem map (netlist groups)")
    points = []
    prev = None
    for val in vals:
        modes = identify_modes(eigenmodes(net.with_value(label, val), band), groups)
        mode, flags = _select(modes, groups, track, prev, min_share)
        points.append(TracePoint(float(val), mode, frozenset(flags)))
        if mode is not None:
            prev = mode
    return SweepTrace(label, track, tuple(points))


@dataclass(frozen=True)
class FilterComparison:
    """Qubit-mode Q versus qubit inductance with and without the PCB filter."""

    with_filter: SweepTrace
    without_filter: SweepTrace

    @property
    def freq_hz(self) -> np.ndarray:
        return self.with_filter.freq_hz

    @property
    def suppression_db(self) -> np.ndarray:
        """10 log10(Q_with / Q_without) per sweep point."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return 10 * np.log10(self.with_filter.q / self.without_filter.q)

    def suppression_at(self, freq_hz: float) -> float:
        """Suppression interpolated (in frequency) at ``freq_hz``."""
        f = self.freq_hz
        s = self.suppression_db
        ok = np.isfinite(f) & np.isfinite(s)
        order = np.argsort(f[ok])
        fo, so = f[ok][order], s[ok][order]
        if not fo[0] <= freq_hz <= fo[-1]:
            raise DomainError(f"{freq_hz:.6g} Hz outside the swept range")
        return float(np.interp(freq_hz, fo, so))


def compare_with_without_filter(cell, qubit_inductances: Sequence[float], qubit: int = 1) -> FilterComparison:
    """Sweep qubit ``qubit``'s inductor in the filtered cell and its no-filter twin."""
    from .synthesis import build_no_filter_variant, build_unit_cell

    label = f"Lq{qubit}"
    track = f"qubit{qubit}"
    a = sweep_element(build_unit_cell(cell), label, qubit_inductances, track)
    b = sweep_element(build_no_filter_variant(cell), label, qubit_inductances, track)
    return FilterComparison(a, b)
