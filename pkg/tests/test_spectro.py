import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from purcell_pcb.admittance import QCurve
from purcell_pcb.network import DomainError
from purcell_pcb.spectro import (
    NoResonanceError, ReflectionTrace, ResonatorFit, _Problem, aggregate_fits,
    estimate_offset, fit_reflection, initial_guess, overlay_with_simulation,
    reflection_model, synthesize_trace,
)

F0 = 9.8e9
TRUTH = ResonatorFit(F0, 30e3, 8e3, 0.8, 0.7, 42e-9, 0.15)


def span_grid(fit=TRUTH, lw=6, n=201):
    half = lw * fit.f0 / fit.q_tot
    return np.linspace(fit.f0 - half, fit.f0 + half, n)


class TestModel:
    def test_on_resonance(self):
        fit = ResonatorFit(F0, 30e3, 8e3)
        s = reflection_model(fit, [F0])[0]
        assert s == pytest.approx(1 - 2 * fit.q_tot / fit.q_ext, abs=1e-15)
        assert abs(s) == pytest.approx(0.579, abs=1e-3)

    def test_overcoupled_limit(self):
        s = reflection_model(ResonatorFit(F0, 1e12, 1e3), [F0])[0]
        assert s == pytest.approx(-1, abs=1e-8)

    def test_q_tot_identity(self):
        f = ResonatorFit(F0, 30e3, 8e3)
        assert f.q_tot == pytest.approx(6315.8, abs=0.05)
        assert 1 / f.q_tot == pytest.approx(1 / f.q_int + 1 / f.q_ext, rel=1e-12)
        assert f.q_tot < min(f.q_int, f.q_ext)

    def test_seeded_noise(self):
        g = span_grid()
        a = synthesize_trace(TRUTH, g, 1e-2, seed=3)
        b = synthesize_trace(TRUTH, g, 1e-2, seed=3)
        assert np.array_equal(a.s11, b.s11)
        with pytest.raises(DomainError):
            synthesize_trace(TRUTH, g, 1e-2)

    def test_trace_validation(self):
        with pytest.raises(DomainError):
            ReflectionTrace([2.0, 1.0], [0j, 0j])
        with pytest.raises(DomainError):
            ReflectionTrace([1.0, 2.0], [0j])

    def test_jacobian_matches_finite_differences(self):
        tr = synthesize_trace(TRUTH, span_grid(), 0.0)
        prob = _Problem(tr.freq_hz, tr.s11)
        p = initial_guess(tr) * (1 + 1e-3)
        J = prob.jac(p)
        h = 1e-6 * np.maximum(np.abs(p), 1e-3)
        for k in range(p.size):
            dp = np.zeros_like(p)
            dp[k] = h[k]
            fd = (prob.residual(p + dp) - prob.residual(p - dp)) / (2 * h[k])
            assert np.linalg.norm(fd - J[:, k]) <= 1e-4 * np.linalg.norm(J[:, k])


class TestFit:
    def test_noiseless_round_trip(self):
        fit = fit_reflection(synthesize_trace(TRUTH, span_grid(), 0.0))
        assert fit.converged
        for name in ("f0", "q_int", "q_ext", "amplitude", "delay"):
            assert getattr(fit, name) == pytest.approx(getattr(TRUTH, name), rel=1e-3)
        assert fit.phase == pytest.approx(TRUTH.phase, abs=1e-3)
        assert fit.asymmetry == pytest.approx(TRUTH.asymmetry, abs=1e-3)

    @settings(max_examples=25)
    @given(
        st.floats(5e9, 12e9), st.floats(2e3, 2e5), st.floats(1e3, 5e4),
        st.floats(-math.pi, math.pi), st.floats(0.0, 60e-9), st.floats(-0.5, 0.5),
    )
    def test_round_trip_property(self, f0, qi, qe, alpha, tau, phi):
        truth = ResonatorFit(f0, qi, qe, 1.0, alpha, tau, phi)
        fit = fit_reflection(synthesize_trace(truth, span_grid(truth), 0.0))
        assert fit.f0 == pytest.approx(f0, rel=1e-6)
        assert fit.q_int == pytest.approx(qi, rel=1e-3)
        assert fit.q_ext == pytest.approx(qe, rel=1e-3)
        assert 1 / fit.q_tot == pytest.approx(1 / fit.q_int + 1 / fit.q_ext, rel=1e-9)

    def test_flat_trace(self):
        f = np.linspace(9e9, 10e9, 101)
        with pytest.raises(NoResonanceError):
            fit_reflection(ReflectionTrace(f, np.full(101, 0.5 + 0.2j)))

    def test_noise_only(self):
        rng = np.random.default_rng(0)
        f = np.linspace(9e9, 10e9, 201)
        s = 0.9 + 0.01 * (rng.standard_normal(201) + 1j * rng.standard_normal(201))
        with pytest.raises(NoResonanceError):
            fit_reflection(ReflectionTrace(f, s))

    def test_too_short(self):
        with pytest.raises(DomainError):
            fit_reflection(synthesize_trace(TRUTH, span_grid(n=10), 0.0))

    def test_unconverged_is_flagged(self):
        fit = fit_reflection(synthesize_trace(TRUTH, span_grid(), 1e-3, seed=1), max_nfev=2)
        assert fit.converged is False
        assert fit.residual_norm > 0

    def test_phase_equivariance(self):
        tr = synthesize_trace(TRUTH, span_grid(), 3e-3, seed=11)
        a = fit_reflection(tr)
        b = fit_reflection(ReflectionTrace(tr.freq_hz, tr.s11 * np.exp(0.9j)))
        assert math.remainder(b.phase - a.phase - 0.9, 2 * math.pi) == pytest.approx(0, abs=1e-6)
        for k in ("f0", "q_int", "q_ext"):
            assert abs(getattr(a, k) - getattr(b, k)) < a.sigma[k]

    def test_frequency_shift(self):
        shift = 25e6
        truth = ResonatorFit(F0, 30e3, 8e3)
        moved = ResonatorFit(F0 + shift, 30e3 * (F0 + shift) / F0, 8e3 * (F0 + shift) / F0)
        a = fit_reflection(synthesize_trace(truth, span_grid(truth), 3e-3, seed=5))
        b = fit_reflection(synthesize_trace(moved, span_grid(truth) + shift, 3e-3, seed=5))
        assert b.f0 - a.f0 == pytest.approx(shift, abs=3 * a.sigma["f0"])
        # same linewidth in Hz, so both Qs scale with f0; after that nothing may move
        scale = b.f0 / a.f0
        for k in ("q_int", "q_ext"):
            assert abs(getattr(b, k) - scale * getattr(a, k)) < a.sigma[k]

    def test_uncertainty_coverage(self):
        g = span_grid()
        hits = {"q_ext": 0, "f0": 0}
        n = 200
        for seed in range(n):
            fit = fit_reflection(synthesize_trace(TRUTH, g, 0.8 * 10 ** (-30 / 20), seed=seed))
            for k in hits:
                hits[k] += abs(getattr(fit, k) - getattr(TRUTH, k)) <= fit.sigma[k]
        for k, h in hits.items():
            print(f"1-sigma coverage {k}: {h / n:.2f}")
            # nominal 68%; the band allows for sampling scatter over 200 seeds
            assert 0.60 <= h / n <= 0.75


class TestAggregate:
    def test_single(self):
        s = aggregate_fits([TRUTH])
        assert s.median["q_int"] == TRUTH.q_int and s.median["q_ext"] == TRUTH.q_ext
        assert s.q_tot_from_medians == pytest.approx(TRUTH.q_tot)

    def test_excludes_unconverged(self):
        bad = ResonatorFit(F0, 1.0, 1.0, converged=False)
        s = aggregate_fits([TRUTH, bad, TRUTH])
        assert s.n_total == 3 and s.n_used == 2 and s.n_excluded == 1
        with pytest.raises(DomainError):
            aggregate_fits([bad])

    def test_reference_medians(self):
        s = aggregate_fits([ResonatorFit(F0, 30e3, 8e3)])
        assert s.q_tot_from_medians == pytest.approx(6.3e3, rel=0.01)

    def test_population(self):
        rng = np.random.default_rng(7)
        fits = [ResonatorFit(9.4e9 + 0.05e9 * k, float(rng.lognormal(math.log(30e3), 0.3)),
                             float(rng.lognormal(math.log(8e3), 0.3))) for k in range(22)]
        s = aggregate_fits(fits)
        assert 24e3 < s.median["q_int"] < 36e3
        assert 6e3 < s.median["q_ext"] < 10e3
        assert [row[0] for row in s.table] == sorted(row[0] for row in s.table)


class TestOverlay:
    def curve(self):
        f = np.linspace(8e9, 12e9, 401)
        return QCurve(2 * np.pi * f, 1 + 100 * (f / 9.8e9 - 1) ** 2)

    def fits_from(self, curve, shift=0.0):
        # off-centre so no two fits share a curve value (ties would make the rank fragile)
        fr = np.linspace(9.23e9, 10.41e9, 9)
        return [ResonatorFit(f + shift, 3e4, 8e3 * curve.value_at(2 * np.pi * f), source=f"r{k}")
                for k, f in enumerate(fr)]

    def test_self_consistent_rank(self):
        c = self.curve()
        ov = overlay_with_simulation(self.fits_from(c), c)
        assert ov.offset_hz == 0.0
        assert ov.rank_correlation == pytest.approx(1.0)

    def test_offset_estimate(self):
        c = self.curve()
        fits = self.fits_from(c, shift=0.35e9)
        off = estimate_offset(fits, c)
        assert off == pytest.approx(0.35e9, abs=0.02e9)
        ov = overlay_with_simulation(fits, c, off)
        assert ov.rank_correlation == pytest.approx(1.0)

    def test_disjoint(self):
        c = self.curve()
        with pytest.raises(DomainError):
            overlay_with_simulation([ResonatorFit(20e9, 1e4, 1e4)], c)
