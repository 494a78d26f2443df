"""Random ladder networks and their series/parallel-reduction impedance.

A ladder is a list of stages read from the port inwards. ``series``
stages move to a new node; ``shunt`` stages hang off the current node to
ground. Line segments are series stages evaluated with the textbook
input-impedance transformation.
"""

from __future__ import annotations

import math

from hypothesis import strategies as st

from purcell_pcb.network import GROUND, Element, Netlist, Port

KIND_RANGE = {
    "resistor": (1.0, 1e3),
    "inductor": (1e-10, 1e-8),
    "capacitor": (1e-14, 1e-11),
    "tline": (20.0, 100.0),
}


def element_impedance(kind, value, w):
    if kind == "resistor":
        return complex(value)
    if kind == "inductor":
        return 1j * w * value
    return 1 / (1j * w * value)


def reduce_ladder(stages, w):
    """Input impedance from the far end back to the port."""
    z = math.inf
    for topo, kind, value, delay in reversed(stages):
        if kind == "tline":
            t = math.tan(w * delay)
            if z == math.inf:
                z = -1j * value / t
            else:
                z = value * (z + 1j * value * t) / (value + 1j * z * t)
        elif topo == "series":
            z = z + element_impedance(kind, value, w)
        else:
            ze = element_impedance(kind, value, w)
            z = ze if z == math.inf else z * ze / (z + ze)
    return z


def ladder_netlist(stages):
    nodes = [GROUND, "n0"]
    els = []
    cur = "n0"
    for k, (topo, kind, value, delay) in enumerate(stages):
        lab = f"E{k}"
        if topo == "series":
            nxt = f"n{len(nodes) - 1}"
            nodes.append(nxt)
            els.append(Element(lab, kind, (cur, nxt), value, delay))
            cur = nxt
        else:
            els.append(Element(lab, kind, (cur, GROUND), value))
    return Netlist(tuple(nodes), tuple(els), (Port("p", ("n0", GROUND), 50.0),))


@st.composite
def stages_strategy(draw, max_elements=8, tlines=True):
    n = draw(st.integers(1, max_elements))
    kinds = list(KIND_RANGE) if tlines else ["resistor", "inductor", "capacitor"]
    stages = []
    for k in range(n):
        kind = draw(st.sampled_from(kinds))
        lo, hi = KIND_RANGE[kind]
        value = math.exp(draw(st.floats(math.log(lo), math.log(hi))))
        topo = "series" if kind == "tline" else draw(st.sampled_from(["series", "shunt"]))
        delay = draw(st.floats(1e-12, 4e-11)) if kind == "tline" else 0.0
        stages.append((topo, kind, value, delay))
    # a lossy shunt at the far end keeps every ladder well posed
    stages.append(("shunt", "resistor", math.exp(draw(st.floats(math.log(5.0), math.log(500.0)))), 0.0))
    return stages


def rel_err(a, b):
    return abs(a - b) / abs(b)

