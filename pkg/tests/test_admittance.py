import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from purcell_pcb.admittance import (
    NoPassbandError, QCurve, UndefinedQError, filtering_ratio, normalized_q_curve,
    passband_metrics, q_curve, q_from_admittance, single_pole_filtering_ratio,
)
from purcell_pcb.network import GROUND, DomainError, Element, FrequencyGrid, Netlist, Port
from purcell_pcb.purcell import direct_coupling_qext
from purcell_pcb.synthesis import build_standalone_pcb

W98 = 2 * math.pi * 9.8e9


def lorentzian_curve(f0=9.8e9, q=10.9, n=2001, lo=4e9, hi=15e9):
    """omega/Re[Y] of a single-pole filter: minimum 1 at f0, +3 dB at f0(1 +- 1/2q)."""
    f = np.linspace(lo, hi, n)
    u = f / f0
    v = 1 + q * q * (u - 1 / u) ** 2
    return QCurve(2 * np.pi * f, v)


class TestQFromAdmittance:
    def test_hand_value(self):
        assert q_from_admittance(W98, 400e-15, 0.02) == pytest.approx(1.2315, rel=1e-4)

    def test_undefined(self):
        with pytest.raises(UndefinedQError):
            q_from_admittance(W98, 1e-12, 0j)
        with pytest.raises(UndefinedQError):
            q_from_admittance(W98, 1e-12, -1e-3 + 0j)

    @given(
        st.floats(1e9, 1e11), st.floats(1e-15, 1e-11), st.floats(1e-8, 1.0),
        st.floats(0.01, 100.0),
    )
    def test_homogeneity(self, w, C, g, k):
        q = q_from_admittance(w, C, complex(g, 0.3))
        assert q_from_admittance(w, k * C, complex(g, 0.3)) == pytest.approx(k * q, rel=1e-12)
        assert q_from_admittance(w, C, complex(k * g, 0.3)) == pytest.approx(q / k, rel=1e-12)

    def test_direct_coupling_testbench(self):
        # resonator C (with L) coupled through Cc to a 50 ohm line; probe across L
        C, Cc, L = 400e-15, 1.73e-15, 1.8e-9
        net = Netlist(
            (GROUND, "r", "line"),
            (
                Element("Cr", "capacitor", ("r", GROUND), C),
                Element("Cc", "capacitor", ("r", "line"), Cc),
            ),
            (Port("L", ("r", GROUND)), Port("line", ("line", GROUND))),
        )
        w = 1 / math.sqrt(L * (C + Cc))
        q = q_curve(net, "L", FrequencyGrid([w]), C=C + Cc).values[0]
        assert q == pytest.approx(direct_coupling_qext(C + Cc, Cc, 50, w), rel=0.02)


class TestNormalized:
    def test_pure_load(self):
        net = Netlist((GROUND, "a"), (Element("R", "resistor", ("a", GROUND), 50.0),), (Port("p", ("a", GROUND)),))
        grid = FrequencyGrid.from_hz(1e9, 5e9, 5)
        c = normalized_q_curve(net, "p", grid)
        assert c.min_normalized
        assert np.allclose(c.values, grid.omega / grid.omega[0])

    def test_all_lossless(self):
        net = Netlist((GROUND, "a", "b"), (
            Element("C", "capacitor", ("a", "b"), 1e-12), Element("L", "inductor", ("b", GROUND), 1e-9),
        ), (Port("p", ("a", GROUND), 50.0),))
        with pytest.raises(UndefinedQError):
            normalized_q_curve(net, "p", FrequencyGrid.from_hz(1e9, 3e9, 3))

    def test_calibrated_cell_minimum(self, cell91):
        c = normalized_q_curve(build_standalone_pcb(cell91), "in1", FrequencyGrid.from_hz(4e9, 15e9, 2001))
        assert np.nanmin(c.values) == 1.0
        i = int(np.argmin(c.values))
        assert c.hz[i] == pytest.approx(9.8e9, rel=0.01)
        # single global minimum: monotone away from it on both sides
        assert np.all(np.diff(c.values[: i + 1]) < 0)
        assert np.all(np.diff(c.values[i:]) > 0)

    def test_common_loss_scaling(self):
        # four elements across the probed node: Re[Y] is the total conductance,
        # so scaling every loss by k scales omega/Re[Y] by exactly 1/k
        def build(k):
            return Netlist(
                (GROUND, "a"),
                (
                    Element("L", "inductor", ("a", GROUND), 1e-9),
                    Element("C", "capacitor", ("a", GROUND), 2.6e-13),
                    Element("R1", "resistor", ("a", GROUND), 2e3 / k),
                    Element("R2", "resistor", ("a", GROUND), 5e3 / k),
                ),
                (Port("p", ("a", GROUND), 50.0),),
            )
        grid = FrequencyGrid.from_hz(8e9, 12e9, 401)
        raw = q_curve(build(1.0), "p", grid).values
        for k in (0.5, 3.0):
            assert np.allclose(q_curve(build(k), "p", grid).values, raw / k, rtol=1e-9)
            a = normalized_q_curve(build(1.0), "p", grid).values
            b = normalized_q_curve(build(k), "p", grid).values
            assert np.argmin(a) == np.argmin(b)


class TestPassband:
    def test_lorentzian_bandwidth(self):
        pm = passband_metrics(lorentzian_curve())
        assert pm.center_hz == pytest.approx(9.8e9, rel=1e-4)
        assert pm.bandwidth_hz == pytest.approx(9.8e9 / 10.9, rel=0.01)
        assert pm.bandwidth_hz == pytest.approx(0.90e9, rel=0.01)
        assert not pm.partial

    def test_flat(self):
        w = 2 * np.pi * np.linspace(1e9, 2e9, 11)
        with pytest.raises(NoPassbandError):
            passband_metrics(QCurve(w, np.ones(11)))

    def test_edge_minimum(self):
        w = 2 * np.pi * np.linspace(1e9, 2e9, 11)
        with pytest.raises(NoPassbandError):
            passband_metrics(QCurve(w, np.linspace(1, 2, 11)))

    def test_partial(self):
        pm = passband_metrics(lorentzian_curve(lo=9.5e9, hi=10.5e9, n=201))
        assert pm.partial
        assert pm.lower_found is False and pm.upper_found is True
        assert math.isnan(pm.bandwidth)

    def test_grid_refinement(self):
        coarse = lorentzian_curve(n=201)
        fine = lorentzian_curve(n=4001)
        half = (coarse.omega[1] - coarse.omega[0]) / 2
        assert abs(passband_metrics(coarse).center - passband_metrics(fine).center) <= half


class TestFilteringRatio:
    def test_zero_and_antisymmetry(self):
        c = lorentzian_curve()
        a, b = 2 * np.pi * 4.4e9, W98
        assert filtering_ratio(c, a, a) == 0.0
        assert filtering_ratio(c, a, b) == -filtering_ratio(c, b, a)

    @given(st.floats(4e9, 15e9), st.floats(4e9, 15e9))
    def test_antisymmetry_property(self, fa, fb):
        c = lorentzian_curve(n=301)
        a, b = 2 * np.pi * fa, 2 * np.pi * fb
        assert filtering_ratio(c, a, b) == -filtering_ratio(c, b, a)

    def test_outside(self):
        with pytest.raises(DomainError):
            filtering_ratio(lorentzian_curve(), 2 * np.pi * 3e9, W98)

    def test_single_pole_oracle(self):
        # the Lorentzian curve is exactly the single-pole model
        c = lorentzian_curve(n=20001)
        got = filtering_ratio(c, 2 * np.pi * 4.4e9, W98)
        # the test curve omits the 1/omega factor
        expect = single_pole_filtering_ratio(4.4e9, 9.8e9, 9.8e9, 10.9) + 10 * math.log10(4.4 / 9.8)
        assert got == pytest.approx(expect, abs=1e-3)

    def test_calibrated_cell(self, cell11):
        c = normalized_q_curve(build_standalone_pcb(cell11), "in1", FrequencyGrid.from_hz(4e9, 15e9, 2001))
        pm = passband_metrics(c)
        r = filtering_ratio(c, 2 * np.pi * 4.4e9, pm.center)
        oracle = single_pole_filtering_ratio(4.4e9, pm.center_hz, pm.center_hz, pm.q_filter)
        print(f"filtering ratio {r:.2f} dB, single-pole oracle {oracle:.2f} dB")
        assert r >= 20
        # the series stub makes the circuit deviate from a pure single pole
        assert abs(r - oracle) < 1.5
