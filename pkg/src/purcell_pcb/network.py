"""Linear microwave networks and their frequency-domain responses.

Frequencies are angular (rad/s) throughout. Element values are SI.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

GROUND = "gnd"

KINDS = ("resistor", "inductor", "capacitor", "tline")

# condition number (of the impedance-scaled system) above which a solve is
# treated as sitting on a lossless pole
POLE_CONDITION = 1e13


class NetlistError(ValueError):
    """Raised when a netlist violates its structural invariants."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("invalid netlist:\n  " + "\n  ".join(self.problems))


class DomainError(ValueError):
    """Raised for arguments outside an operation's domain."""


class LosslessPoleWarning(RuntimeWarning):
    """Emitted when a response is requested exactly on a lossless pole."""


@dataclass(frozen=True)
class Element:
    """A two-terminal lumped element or a ground-referenced TEM line segment.

    ``value`` is ohms, henries or farads for R/L/C. For ``tline`` it is the
    characteristic impedance and ``delay`` is the one-way delay in seconds;
    the segment runs from ``terminals[0]`` to ``terminals[1]`` with the
    ground plane as return conductor.
    """

    label: str
    kind: str
    terminals: tuple[str, str]
    value: float
    delay: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "terminals", tuple(self.terminals))
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "delay", float(self.delay))

    @property
    def stores_energy(self) -> bool:
        return self.kind in ("inductor", "capacitor")


@dataclass(frozen=True)
class Port:
    label: str
    terminals: tuple[str, str]
    z0: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "terminals", tuple(self.terminals))
        object.__setattr__(self, "z0", float(self.z0))


def _element_problems(el: Element, nodes: set[str]) -> list[str]:
    out = []
    if el.kind not in KINDS:
        out.append(f"{el.label}: unknown element kind {el.kind!r}")
    if len(el.terminals) != 2:
        out.append(f"{el.label}: needs exactly two terminals")
        return out
    for t in el.terminals:
        if t not in nodes:
            out.append(f"{el.label}: terminal {t!r} is not a declared node")
    if el.terminals[0] == el.terminals[1]:
        out.append(f"{el.label}: both terminals on node {el.terminals[0]!r}")
    if not (math.isfinite(el.value) and el.value > 0):
        out.append(f"{el.label}: value must be positive, got {el.value!r}")
    if el.kind == "tline" and not (math.isfinite(el.delay) and el.delay >= 0):
        out.append(f"{el.label}: delay must be >= 0, got {el.delay!r}")
    if el.kind == "tline" and GROUND in el.terminals:
        out.append(f"{el.label}: line segment ends must be ungrounded nodes")
    return out


@dataclass(frozen=True)
class Netlist:
    """Immutable, validated description of a linear network.

    ``groups`` optionally assigns energy-storing elements to named physical
    subsystems (``filter``, ``resonator1``, ``qubit1`` ...); it is used for
    mode identification and carried through serialization.
    """

    nodes: tuple[str, ...]
    elements: tuple[Element, ...]
    ports: tuple[Port, ...] = ()
    groups: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def __post_init__(self):
        nodes = tuple(dict.fromkeys(self.nodes))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "ports", tuple(self.ports))
        groups = self.groups.items() if isinstance(self.groups, Mapping) else self.groups
        object.__setattr__(
            self, "groups", tuple((str(k), tuple(v)) for k, v in groups)
        )
        problems = []
        node_set = set(nodes)
        if GROUND not in node_set:
            problems.append(f"ground node {GROUND!r} missing")
        seen: set[str] = set()
        for el in self.elements:
            if el.label in seen:
                problems.append(f"{el.label}: duplicate element label")
            seen.add(el.label)
            problems.extend(_element_problems(el, node_set))
        port_labels: set[str] = set()
        for p in self.ports:
            if p.label in port_labels:
                problems.append(f"port {p.label}: duplicate port label")
            port_labels.add(p.label)
            for t in p.terminals:
                if t not in node_set:
                    problems.append(f"port {p.label}: terminal {t!r} is not a declared node")
            if len(p.terminals) != 2 or p.terminals[0] == p.terminals[1]:
                problems.append(f"port {p.label}: needs two distinct terminals")
            if not (math.isfinite(p.z0) and p.z0 > 0):
                problems.append(f"port {p.label}: reference impedance must be positive")
        kinds = {el.label: el.kind for el in self.elements}
        for name, labels in self.groups:
            for lab in labels:
                if lab not in kinds:
                    problems.append(f"group {name}: unknown element {lab!r}")
                elif kinds[lab] not in ("inductor", "capacitor"):
                    problems.append(f"group {name}: {lab} stores no energy")
        if problems:
            raise NetlistError(problems)

    # -- lookup -----------------------------------------------------------
    def element(self, label: str) -> Element:
        for el in self.elements:
            if el.label == label:
                return el
        raise KeyError(label)

    def port(self, label: str) -> Port:
        for p in self.ports:
            if p.label == label:
                return p
        raise KeyError(label)

    @property
    def group_map(self) -> dict[str, tuple[str, ...]]:
        return dict(self.groups)

    @property
    def internal_nodes(self) -> tuple[str, ...]:
        return tuple(n for n in self.nodes if n != GROUND)

    # -- derived netlists -------------------------------------------------
    def with_value(self, label: str, value: float) -> Netlist:
        """Copy with one element's primary value replaced."""
        self.element(label)
        els = tuple(replace(e, value=value) if e.label == label else e for e in self.elements)
        return replace(self, elements=els)

    def without(self, labels: Iterable[str]) -> Netlist:
        """Copy with elements removed (and dropped from groups)."""
        drop = set(labels)
        els = tuple(e for e in self.elements if e.label not in drop)
        groups = tuple((k, tuple(x for x in v if x not in drop)) for k, v in self.groups)
        return replace(self, elements=els, groups=groups)

    def probe_inductor(self, label: str, z0: float = 50.0) -> tuple[Netlist, Port]:
        """Replace an inductor by a port across its terminals.

        This is the modal-network trick: the admittance seen at the probe,
        with the inductor removed, sets the Q of the mode that inductor
        tunes.
        """
        el = self.element(label)
        if el.kind != "inductor":
            raise DomainError(f"{label} is not an inductor")
        port = Port(label, el.terminals, z0)
        net = self.without([label])
        return replace(net, ports=net.ports + (port,)), port

    def terminated(self) -> Netlist:
        """Ports replaced by resistors equal to their reference impedances."""
        taken = {e.label for e in self.elements}
        extra = []
        for p in self.ports:
            lab = f"{p.label}.term"
            while lab in taken:
                lab += "_"
            taken.add(lab)
            extra.append(Element(lab, "resistor", p.terminals, p.z0))
        return replace(self, elements=self.elements + tuple(extra), ports=())


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing, positive angular frequencies (rad/s)."""

    omega: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float).reshape(-1)
        if w.size == 0:
            raise DomainError("empty frequency grid")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DomainError("grid frequencies must be finite and > 0")
        if np.any(np.diff(w) <= 0):
            raise DomainError("grid must be strictly increasing")
        w.setflags(write=False)
        object.__setattr__(self, "omega", w)

    @classmethod
    def from_hz(cls, start: float, stop: float, n: int) -> FrequencyGrid:
        if not 0 < start < stop:
            raise DomainError("need 0 < start < stop")
        if n < 2:
            raise DomainError("need at least two points")
        return cls(2 * np.pi * np.linspace(start, stop, int(n)))

    @property
    def hz(self) -> np.ndarray:
        return self.omega / (2 * np.pi)

    def __len__(self):
        return self.omega.size


# ---------------------------------------------------------------------------
# stamping

class _Stamps:
    """Frequency-independent pieces of the nodal matrix."""

    def __init__(self, net: Netlist):
        used = {t for el in net.elements for t in el.terminals}
        used |= {t for p in net.ports for t in p.terminals}
        # declared-but-unconnected nodes would only make the system singular
        live = [n for n in net.internal_nodes if n in used]
        self.index = {n: i for i, n in enumerate(live)}
        n = len(self.index)
        self.n = n
        self.G = np.zeros((n, n))
        self.C = np.zeros((n, n))
        self.Gamma = np.zeros((n, n))  # inverse inductance
        self.tlines = []
        for el in net.elements:
            a, b = (self.index.get(t) for t in el.terminals)
            if el.kind == "resistor":
                self._stamp(self.G, a, b, 1.0 / el.value)
            elif el.kind == "capacitor":
                self._stamp(self.C, a, b, el.value)
            elif el.kind == "inductor":
                self._stamp(self.Gamma, a, b, 1.0 / el.value)
            else:
                self.tlines.append((a, b, el.value, el.delay))

    @staticmethod
    def _stamp(M, a, b, y):
        if a is not None:
            M[a, a] += y
        if b is not None:
            M[b, b] += y
        if a is not None and b is not None:
            M[a, b] -= y
            M[b, a] -= y

    def incidence(self, terminals) -> np.ndarray:
        e = np.zeros(self.n)
        a, b = (self.index.get(t) for t in terminals)
        if a is not None:
            e[a] += 1.0
        if b is not None:
            e[b] -= 1.0
        return e

    def matrices(self, omega: np.ndarray) -> np.ndarray:
        """Nodal admittance matrices stacked along the first axis."""
        w = np.asarray(omega, dtype=float)[:, None, None]
        Y = self.G + 1j * w * self.C + self.Gamma / (1j * w)
        Y = np.array(Y, dtype=complex)
        for a, b, z0, tau in self.tlines:
            theta = omega * tau
            with np.errstate(divide="ignore", invalid="ignore"):
                y_self = -1j / (z0 * np.tan(theta))
                y_mut = 1j / (z0 * np.sin(theta))
            Y[:, a, a] += y_self
            Y[:, b, b] += y_self
            Y[:, a, b] -= y_mut
            Y[:, b, a] -= y_mut
        return Y


def _check_omega(omega) -> np.ndarray:
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise DomainError(f"angular frequency must be > 0, got {omega!r}")
    return w


def assemble_admittance(net: Netlist, omega: float) -> np.ndarray:
    """Complex nodal admittance matrix over the non-ground nodes.

    Rows/columns follow ``net.internal_nodes``. Ports do not contribute.
    """
    w = _check_omega(omega)
    if w.size != 1:
        raise DomainError("assemble_admittance takes a single frequency")
    return _Stamps(net).matrices(w)[0]


def _solve_stack(M: np.ndarray, rhs: np.ndarray, omega: np.ndarray, what: str):
    """Solve M x = rhs per frequency; singular/ill-conditioned slices -> NaN + pole mask."""
    poles = np.zeros(M.shape[0], dtype=bool)
    finite = np.all(np.isfinite(M), axis=(1, 2))
    poles |= ~finite
    ok = np.flatnonzero(finite)
    if ok.size:
        with np.errstate(all="ignore"):
            cond = np.linalg.cond(M[ok])
        poles[ok[~(cond < POLE_CONDITION)]] = True
    vector = rhs.ndim == 2
    if vector:
        rhs = rhs[..., None]
    x = np.full(rhs.shape, np.nan + 0j, dtype=complex)
    good = np.flatnonzero(~poles)
    if good.size:
        x[good] = np.linalg.solve(M[good], rhs[good])
    if vector:
        x = x[..., 0]
    if poles.any():
        f = omega[poles] / (2 * np.pi)
        warnings.warn(
            f"{what}: lossless pole at {poles.sum()} frequency point(s), "
            f"first at {f[0]:.9g} Hz; values reported as NaN",
            LosslessPoleWarning,
            stacklevel=3,
        )
    return x, poles


@dataclass(frozen=True)
class AdmittanceSweep:
    """Port admittance over a grid. ``poles`` flags samples on lossless poles."""

    omega: np.ndarray
    y: np.ndarray
    poles: np.ndarray


def _resolve_port(net: Netlist, port) -> Port:
    if isinstance(port, Port):
        if port not in net.ports:
            raise DomainError(f"port {port.label} is not part of the netlist")
        return port
    try:
        return net.port(port)
    except KeyError:
        raise DomainError(f"no port named {port!r}") from None


def admittance_sweep(net: Netlist, port, omega) -> AdmittanceSweep:
    """Input admittance at ``port`` with every other port terminated in its z0."""
    port = _resolve_port(net, port)
    w = _check_omega(omega)
    st = _Stamps(net)
    Y = st.matrices(w)
    for p in net.ports:
        if p is not port:
            e = st.incidence(p.terminals)
            Y = Y + np.outer(e, e) / p.z0
    # MNA with a unit voltage source at the probe; unknowns [v, j],
    # j = current delivered into the network. Rows scaled by z0.
    n = st.n
    e = st.incidence(port.terminals)
    M = np.zeros((w.size, n + 1, n + 1), dtype=complex)
    M[:, :n, :n] = Y * port.z0
    M[:, :n, n] = -e
    M[:, n, :n] = e
    rhs = np.zeros((w.size, n + 1), dtype=complex)
    rhs[:, n] = 1.0
    x, poles = _solve_stack(M, rhs, w, f"port {port.label}")
    return AdmittanceSweep(w, x[:, n] / port.z0, poles)


def port_admittance(net: Netlist, port, omega: float) -> complex:
    """Admittance (S) looking into ``port`` at one angular frequency.

    On a lossless pole a :class:`LosslessPoleWarning` is emitted and NaN is
    returned.
    """
    sw = admittance_sweep(net, port, [omega])
    return complex(sw.y[0])


def s_parameters(net: Netlist, grid) -> np.ndarray:
    """Scattering matrices, shape (len(grid), n_ports, n_ports).

    Port order follows ``net.ports``; each port is normalized to its own
    real reference impedance.
    """
    if not net.ports:
        raise DomainError("s_parameters needs at least one port")
    w = grid.omega if isinstance(grid, FrequencyGrid) else _check_omega(grid)
    st = _Stamps(net)
    Y = st.matrices(w)
    E = np.stack([st.incidence(p.terminals) for p in net.ports], axis=1)
    z = np.array([p.z0 for p in net.ports])
    zs = 50.0
    Y = Y + (E / z) @ E.T
    # scale to keep the pole detector impedance-independent
    X, poles = _solve_stack(Y * zs, np.broadcast_to(E, (w.size,) + E.shape).copy(), w, "s_parameters")
    X = X * zs
    root = 1.0 / np.sqrt(z)
    S = 2 * root[:, None] * np.einsum("ip,fiq->fpq", E, X) * root[None, :] - np.eye(len(z))
    S[poles] = np.nan
    return S
