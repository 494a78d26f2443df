"""Text formats: netlist documents, Touchstone one-port files and CSV tables.

Netlist document::

    # comment
    [nodes]
    gnd filter out
    [elements]
    Lf   inductor  filter gnd 82.4p
    T1   tline     a b 50 1.2n        # Z0 then one-way delay
    [ports]
    out  out gnd 50
    [groups]
    filter Lf Cf
    [sweeps]
    Lr1  1.0n 3.0n 41

Values take an optional SI prefix (f p n u m k M G) and an optional unit
(H F Ohm s). Kinds may be abbreviated R, L, C, TL.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .admittance import QCurve
from .eigen import SweepTrace
from .network import DomainError, Element, Netlist, NetlistError, Port
from .purcell import CoherenceSample
from .spectro import ReflectionTrace, ResonatorFit

PREFIX = {"f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "m": 1e-3, "k": 1e3, "M": 1e6, "G": 1e9}
_VALUE = re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([fpnumkMG]?)(H|F|Ohm|ohm|s)?$"
)
_KIND_ALIAS = {"r": "resistor", "l": "inductor", "c": "capacitor", "tl": "tline", "t": "tline"}
SECTIONS = ("nodes", "elements", "ports", "groups", "sweeps")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def parse_value(token: str) -> float:
    """'1.8n', '1.8nH', '50', '3.3pF' -> float. Raises ValueError."""
    m = _VALUE.match(token)
    if not m:
        raise ValueError(f"malformed value {token!r}")
    num, prefix, _unit = m.groups()
    return float(num) * PREFIX.get(prefix, 1.0)


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class SweepSpec:
    """Linear sweep of one element's value, ``n`` points from start to stop."""

    label: str
    start: float
    stop: float
    n: int

    def __post_init__(self):
        if self.n < 1 or not (self.start > 0 and self.stop > 0):
            raise DomainError("sweep needs n >= 1 and positive bounds")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.n)


@dataclass(frozen=True)
class NetlistDocument:
    netlist: Netlist
    sweeps: tuple[SweepSpec, ...] = ()


def parse_document(text: str) -> NetlistDocument:
    section = None
    nodes: list[str] = []
    elements: list[Element] = []
    ports: list[Port] = []
    groups: list[tuple[str, tuple[str, ...]]] = []
    sweeps: list[SweepSpec] = []
    where: dict[str, int] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                raise ParseError(f"unknown section [{section}]", no)
            continue
        tok = line.split()
        try:
            if section is None:
                raise ParseError("content before any [section]", no)
            if section == "nodes":
                nodes.extend(tok)
            elif section == "elements":
                if len(tok) not in (5, 6):
                    raise ParseError("expected: label kind node_a node_b value [delay]", no)
                label, kind = tok[0], tok[1].lower()
                kind = _KIND_ALIAS.get(kind, kind)
                if kind not in ("resistor", "inductor", "capacitor", "tline"):
                    raise ParseError(f"unknown element kind {tok[1]!r}", no)
                if label in where:
                    raise ParseError(f"duplicate label {label!r} (first on line {where[label]})", no)
                if (kind == "tline") != (len(tok) == 6):
                    raise ParseError("a delay is required for tline and only for tline", no)
                delay = parse_value(tok[5]) if len(tok) == 6 else 0.0
                where[label] = no
                elements.append(Element(label, kind, (tok[2], tok[3]), parse_value(tok[4]), delay))
            elif section == "ports":
                if len(tok) not in (3, 4):
                    raise ParseError("expected: label node_a node_b [z0]", no)
                z0 = parse_value(tok[3]) if len(tok) == 4 else 50.0
                ports.append(Port(tok[0], (tok[1], tok[2]), z0))
            elif section == "groups":
                groups.append((tok[0], tuple(tok[1:])))
            elif section == "sweeps":
                if len(tok) != 4:
                    raise ParseError("expected: label start stop n", no)
                sweeps.append(SweepSpec(tok[0], parse_value(tok[1]), parse_value(tok[2]), int(tok[3])))
        except ParseError:
            raise
        except (ValueError, DomainError) as exc:
            raise ParseError(str(exc), no) from exc
    try:
        net = Netlist(tuple(nodes), tuple(elements), tuple(ports), tuple(groups))
    except NetlistError as exc:
        lines = []
        for p in exc.problems:
            lab = p.split(":", 1)[0]
            lines.append(f"line {where[lab]}: {p}" if lab in where else p)
        raise ParseError("; ".join(lines)) from exc
    labels = {e.label for e in elements}
    for sw in sweeps:
        if sw.label not in labels:
            raise ParseError(f"sweep refers to unknown element {sw.label!r}")
    return NetlistDocument(net, tuple(sweeps))


def parse_netlist(text: str) -> Netlist:
    return parse_document(text).netlist


def serialize_netlist(net: Netlist, sweeps: Sequence[SweepSpec] = ()) -> str:
    """Text form with full-precision values; parses back to an equal Netlist."""
    out = ["[nodes]", " ".join(net.nodes), "[elements]"]
    for e in net.elements:
        row = [e.label, e.kind, *e.terminals, _fmt(e.value)]
        if e.kind == "tline":
            row.append(_fmt(e.delay))
        out.append(" ".join(row))
    if net.ports:
        out.append("[ports]")
        out += [" ".join([p.label, *p.terminals, _fmt(p.z0)]) for p in net.ports]
    if net.groups:
        out.append("[groups]")
        out += [" ".join([name, *labels]) for name, labels in net.groups]
    if sweeps:
        out.append("[sweeps]")
        out += [f"{s.label} {_fmt(s.start)} {_fmt(s.stop)} {s.n}" for s in sweeps]
    return "\n".join(out) + "\n"


def read_netlist(path) -> NetlistDocument:
    return parse_document(Path(path).read_text())


def write_netlist(path, net: Netlist, sweeps: Sequence[SweepSpec] = ()) -> None:
    Path(path).write_text(serialize_netlist(net, sweeps))


# ---------------------------------------------------------------------------
# Touchstone

_FREQ_UNIT = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}


def parse_touchstone(text: str, source: str = "") -> ReflectionTrace:
    """One-port Touchstone v1 (S parameters, RI / MA / DB)."""
    unit, fmt = 1e9, "ma"
    seen_option = False
    rows = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if seen_option:
                raise ParseError("second option line", no)
            seen_option = True
            tok = line[1:].lower().split()
            i = 0
            while i < len(tok):
                t = tok[i]
                if t in _FREQ_UNIT:
                    unit = _FREQ_UNIT[t]
                elif t in ("ri", "ma", "db"):
                    fmt = t
                elif t == "s":
                    pass
                elif t in ("y", "z", "h", "g"):
                    raise ParseError(f"only S parameters are supported, got {t.upper()}", no)
                elif t == "r" and i + 1 < len(tok):
                    try:
                        float(tok[i + 1])
                    except ValueError as exc:
                        raise ParseError(f"bad reference impedance {tok[i + 1]!r}", no) from exc
                    i += 1
                else:
                    raise ParseError(f"unparseable option {t!r}", no)
                i += 1
            continue
        if line.startswith("["):
            raise ParseError("Touchstone v2 keywords are not supported", no)
        try:
            vals = [float(x) for x in line.split()]
        except ValueError as exc:
            raise ParseError(f"non-numeric data {line!r}", no) from exc
        if len(vals) != 3:
            raise ParseError(f"expected 3 columns for a one-port file, got {len(vals)} (multi-port files are unsupported)", no)
        rows.append(vals)
    if not rows:
        raise ParseError("no data in Touchstone file")
    d = np.array(rows)
    f = d[:, 0] * unit
    a, b = d[:, 1], d[:, 2]
    if fmt == "ri":
        s = a + 1j * b
    elif fmt == "ma":
        s = a * np.exp(1j * np.deg2rad(b))
    else:
        s = 10 ** (a / 20) * np.exp(1j * np.deg2rad(b))
    order = np.argsort(f, kind="stable")
    return ReflectionTrace(f[order], s[order], source)


def read_touchstone(path) -> ReflectionTrace:
    p = Path(path)
    m = re.search(r"\.s(\d+)p$", p.name.lower())
    if m and m.group(1) != "1":
        raise ParseError(f"{p.name}: multi-port Touchstone files are unsupported")
    return parse_touchstone(p.read_text(), p.stem)


def format_touchstone(trace: ReflectionTrace, fmt: str = "RI", z0: float = 50.0) -> str:
    fmt = fmt.upper()
    out = [f"# Hz S {fmt} R {_fmt(z0)}"]
    for f, s in zip(trace.freq_hz, trace.s11):
        if fmt == "RI":
            a, b = s.real, s.imag
        elif fmt == "MA":
            a, b = abs(s), math.degrees(np.angle(s))
        elif fmt == "DB":
            a, b = 20 * math.log10(abs(s)), math.degrees(np.angle(s))
        else:
            raise DomainError(f"unknown Touchstone format {fmt!r}")
        out.append(f"{_fmt(f)} {_fmt(a)} {_fmt(b)}")
    return "\n".join(out) + "\n"


def write_touchstone(path, trace: ReflectionTrace, fmt: str = "RI") -> None:
    Path(path).write_text(format_touchstone(trace, fmt))


# ---------------------------------------------------------------------------
# CSV

def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue()


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return _fmt(x)
    return str(x)


def _read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _require(rows, cols, path):
    if not rows:
        raise ParseError(f"{path}: no rows")
    missing = [c for c in cols if c not in rows[0]]
    if missing:
        raise ParseError(f"{path}: missing columns {missing}")


def qcurve_csv(curve: QCurve) -> str:
    return csv_text(
        ["freq_hz", "value", "normalized", "min_normalized"],
        ((float(f), float(v), curve.normalized, curve.min_normalized) for f, v in zip(curve.hz, curve.values)),
    )


def write_qcurve_csv(path, curve: QCurve) -> None:
    Path(path).write_text(qcurve_csv(curve))


def read_qcurve_csv(path) -> QCurve:
    rows = _read_rows(path)
    _require(rows, ["freq_hz", "value"], path)
    f = np.array([float(r["freq_hz"]) for r in rows])
    v = np.array([float(r["value"]) if r["value"] else math.nan for r in rows])
    norm = rows[0].get("normalized", "1") == "1"
    mn = rows[0].get("min_normalized", "0") == "1"
    return QCurve(2 * np.pi * f, v, norm, mn)


def sweep_csv(trace: SweepTrace) -> str:
    rows = []
    for p in trace.points:
        flags = ";".join(sorted(set(p.flags) | (set(p.mode.flags) if p.mode else set())))
        if p.mode is None:
            rows.append((p.value, math.nan, math.nan, "gap", flags))
        else:
            rows.append((p.value, p.mode.freq_hz, p.mode.q, p.mode.subsystem, flags))
    return csv_text(["swept_value_h", "mode_freq_hz", "q", "identity", "flags"], rows)


def write_sweep_csv(path, trace: SweepTrace) -> None:
    Path(path).write_text(sweep_csv(trace))


def trace_csv(trace: ReflectionTrace) -> str:
    return csv_text(["freq_hz", "re", "im"], ((f, s.real, s.imag) for f, s in zip(trace.freq_hz, trace.s11)))


def read_trace_csv(path) -> ReflectionTrace:
    rows = _read_rows(path)
    _require(rows, ["freq_hz", "re", "im"], path)
    f = np.array([float(r["freq_hz"]) for r in rows])
    s = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    return ReflectionTrace(f, s, Path(path).stem)


FIT_COLUMNS = (
    "source", "f0_hz", "q_int", "q_ext", "q_tot", "amplitude", "phase_rad", "delay_s",
    "asymmetry_rad", "f0_hz_sigma", "q_int_sigma", "q_ext_sigma", "q_tot_sigma",
    "residual_norm", "converged",
)


def fits_csv(fits: Sequence[ResonatorFit]) -> str:
    rows = []
    for ft in fits:
        sg = ft.sigma
        rows.append((
            ft.source, ft.f0, ft.q_int, ft.q_ext, ft.q_tot, ft.amplitude, ft.phase, ft.delay,
            ft.asymmetry, sg.get("f0", math.nan), sg.get("q_int", math.nan),
            sg.get("q_ext", math.nan), sg.get("q_tot", math.nan), ft.residual_norm, ft.converged,
        ))
    return csv_text(FIT_COLUMNS, rows)


def write_fits_csv(path, fits: Sequence[ResonatorFit]) -> None:
    Path(path).write_text(fits_csv(fits))


def read_fits_csv(path) -> list[ResonatorFit]:
    rows = _read_rows(path)
    _require(rows, ["f0_hz", "q_int", "q_ext"], path)
    out = []
    for r in rows:
        g = lambda k, d=math.nan: float(r[k]) if r.get(k) not in (None, "") else d  # noqa: E731
        sigma = {k: g(f"{c}_sigma") for k, c in (("f0", "f0_hz"), ("q_int", "q_int"), ("q_ext", "q_ext"), ("q_tot", "q_tot"))}
        out.append(ResonatorFit(
            g("f0_hz"), g("q_int"), g("q_ext"), g("amplitude", 1.0), g("phase_rad", 0.0),
            g("delay_s", 0.0), g("asymmetry_rad", 0.0), sigma, g("residual_norm", 0.0),
            r.get("converged", "1") == "1", r.get("source", ""),
        ))
    return out


def read_coherence_csv(path) -> list[CoherenceSample]:
    """Columns qubit_id, t1_s, t2_ramsey_s, t2_echo_s; optional fields may be blank."""
    rows = _read_rows(path)
    _require(rows, ["qubit_id", "t1_s"], path)
    out = []
    for no, r in enumerate(rows, start=2):
        opt = lambda k: float(r[k]) if r.get(k) not in (None, "") else None  # noqa: E731
        try:
            out.append(CoherenceSample(r["qubit_id"], float(r["t1_s"]), opt("t2_ramsey_s"), opt("t2_echo_s")))
        except ValueError as exc:
            raise ParseError(str(exc), no) from exc
    return out


def coherence_csv(samples: Sequence[CoherenceSample]) -> str:
    blank = lambda v: "" if v is None else v  # noqa: E731
    return csv_text(
        ["qubit_id", "t1_s", "t2_ramsey_s", "t2_echo_s"],
        ((s.qubit, s.t1, blank(s.t2_ramsey), blank(s.t2_echo)) for s in samples),
    )
