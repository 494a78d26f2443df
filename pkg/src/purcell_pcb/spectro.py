"""Single-port reflection fitting of readout resonators.

Model::

    S11(f) = A e^{i alpha} e^{-2 pi i f tau}
             [1 - (2 Q_tot / Q_ext) e^{i phi} / (1 + 2 i Q_tot (f / f0 - 1))]

with 1/Q_tot = 1/Q_int + 1/Q_ext. ``phi`` rotates the resonance circle
(impedance mismatch / Fano asymmetry), ``tau`` is the cable delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, stats

from .admittance import QCurve
from .network import DomainError

MIN_POINTS = 20


class NoResonanceError(ValueError):
    pass


@dataclass(frozen=True)
class ReflectionTrace:
    freq_hz: np.ndarray = field(repr=False)
    s11: np.ndarray = field(repr=False)
    source: str = ""

    def __post_init__(self):
        f = np.asarray(self.freq_hz, dtype=float).reshape(-1)
        s = np.asarray(self.s11, dtype=complex).reshape(-1)
        if f.shape != s.shape:
            raise DomainError("frequency and S11 arrays differ in length")
        if f.size and np.any(np.diff(f) <= 0):
            raise DomainError("frequencies must be strictly increasing")
        if not np.all(np.isfinite(s)):
            raise DomainError("S11 must be finite")
        object.__setattr__(self, "freq_hz", f)
        object.__setattr__(self, "s11", s)

    def __len__(self):
        return self.freq_hz.size


@dataclass(frozen=True)
class ResonatorFit:
    f0: float
    q_int: float
    q_ext: float
    amplitude: float = 1.0
    phase: float = 0.0
    delay: float = 0.0
    asymmetry: float = 0.0
    sigma: dict = field(default_factory=dict, compare=False)
    residual_norm: float = 0.0
    converged: bool = True
    source: str = ""

    def __post_init__(self):
        if not (self.f0 > 0 and self.q_int > 0 and self.q_ext > 0):
            raise DomainError("f0, Q_int and Q_ext must be positive")

    @property
    def q_tot(self) -> float:
        return 1.0 / (1.0 / self.q_int + 1.0 / self.q_ext)


def _model(f, f0, qi, qe, a, alpha, tau, phi):
    qt = 1.0 / (1.0 / qi + 1.0 / qe)
    x = f / f0 - 1.0
    env = a * np.exp(1j * (alpha - 2 * np.pi * f * tau))
    return env * (1.0 - (2 * qt / qe) * np.exp(1j * phi) / (1 + 2j * qt * x))


def reflection_model(fit: ResonatorFit, freq_hz) -> np.ndarray:
    f = np.asarray(freq_hz, dtype=float)
    return _model(f, fit.f0, fit.q_int, fit.q_ext, fit.amplitude, fit.phase, fit.delay, fit.asymmetry)


def synthesize_trace(
    fit: ResonatorFit, freq_hz, noise: float = 0.0, seed: int | None = None, source: str = "synthetic"
) -> ReflectionTrace:
    """Model trace plus circular complex Gaussian noise of total std ``noise``."""
    s = reflection_model(fit, freq_hz)
    if noise > 0:
        if seed is None:
            raise DomainError("a seed is required for noisy synthesis")
        rng = np.random.default_rng(seed)
        s = s + noise / math.sqrt(2) * (rng.standard_normal(s.size) + 1j * rng.standard_normal(s.size))
    return ReflectionTrace(np.asarray(freq_hz, dtype=float), s, source)


# ---------------------------------------------------------------------------
# fitting

# internal parameter vector:
#   0 d     f0 = f_ref (1 + d)
#   1 lqi   ln Q_int
#   2 lqe   ln Q_ext
#   3 a     amplitude
#   4 ac    phase at f_ref
#   5 tn    delay in ns
#   6 phi   asymmetry
_NAMES = ("f0", "q_int", "q_ext", "amplitude", "phase", "delay", "asymmetry")


class _Problem:
    def __init__(self, f, s):
        self.f = f
        self.s = s
        self.f_ref = 0.5 * (f[0] + f[-1])
        self.df = f - self.f_ref

    def unpack(self, p):
        d, lqi, lqe, a, ac, tn, phi = p
        return self.f_ref * (1 + d), math.exp(lqi), math.exp(lqe), a, ac, tn * 1e-9, phi

    def model_parts(self, p):
        f0, qi, qe, a, ac, tau, phi = self.unpack(p)
        qt = 1.0 / (1.0 / qi + 1.0 / qe)
        x = self.f / f0 - 1.0
        den = 1 + 2j * qt * x
        K = np.exp(1j * phi) / den
        D = 2 * qt / qe
        R = 1.0 - D * K
        E = a * np.exp(1j * (ac - 2 * np.pi * self.df * tau))
        return f0, qi, qe, a, qt, x, den, K, D, R, E

    def residual(self, p):
        *_, R, E = self.model_parts(p)
        r = E * R - self.s
        return np.concatenate([r.real, r.imag])

    def jac(self, p):
        f0, qi, qe, a, qt, x, den, K, D, R, E = self.model_parts(p)
        M = E * R
        dR_dD = -K
        dR_dqt = D * K * 2j * x / den
        dR_dx = D * K * 2j * qt / den
        dqt_dlqi = qt * qt / qi
        dqt_dlqe = qt * qt / qe
        dD_dlqi = 2 * dqt_dlqi / qe
        dD_dlqe = 2 * dqt_dlqe / qe - D
        cols = [
            E * dR_dx * (-self.f / f0**2) * self.f_ref,
            E * (dR_dqt * dqt_dlqi + dR_dD * dD_dlqi),
            E * (dR_dqt * dqt_dlqe + dR_dD * dD_dlqe),
            M / a,
            1j * M,
            -2j * np.pi * self.df * 1e-9 * M,
            E * (-D * 1j * K),
        ]
        J = np.stack(cols, axis=1)
        return np.concatenate([J.real, J.imag], axis=0)


def _circle(z):
    """Algebraic (Kasa) circle fit; returns centre and radius."""
    x, y = z.real, z.imag
    A = np.column_stack([x, y, np.ones_like(x)])
    b = x * x + y * y
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    cx, cy = sol[0] / 2, sol[1] / 2
    r2 = sol[2] + cx * cx + cy * cy
    return complex(cx, cy), math.sqrt(max(r2, 0.0))


def _edge_slope(f, ph, frac=0.1):
    n = max(3, int(frac * f.size))
    s1 = np.polyfit(f[:n], ph[:n], 1)[0]
    s2 = np.polyfit(f[-n:], ph[-n:], 1)[0]
    return 0.5 * (s1 + s2)


def _phase_model(q, f):
    theta0, lqt, f0, sign = q[0], q[1], q[2], q[3]
    return theta0 + 2 * sign * np.arctan(2 * np.exp(lqt) * (1 - f / f0))


def _phase_fit(f, theta, f0, qt, sign):
    """Fit theta(f) = theta0 + 2 arctan(2 Q_tot (1 - f/f0)) around the circle centre."""
    j0 = int(np.argmin(np.abs(f - f0)))
    p0 = np.array([theta[j0], math.log(qt), f0])
    scale = np.array([1.0, 1.0, f0 / qt])
    res = optimize.least_squares(
        lambda p: _phase_model((p[0], p[1], p[2], sign), f) - theta,
        p0, x_scale=scale, method="lm",
    )
    rms = math.sqrt(np.mean(res.fun**2))
    return res.x, rms


def initial_guess(trace: ReflectionTrace) -> np.ndarray:
    """Starting point for the complex fit.

    Delay from the edge phase slopes; then a circle fit of the delay-corrected
    trace. f0 is seeded at the |S11| minimum (falling back to the point of
    fastest travel round the circle) and refined, together with Q_tot, by
    fitting the angle around the circle centre. The off-resonant point is
    diametrically opposite the resonance point, which fixes the environment,
    the diameter (hence Q_ext) and the asymmetry angle.
    """
    f, s = trace.freq_hz, trace.s11
    prob = _Problem(f, s)
    ph = np.unwrap(np.angle(s))
    tau = -_edge_slope(f, ph) / (2 * np.pi)
    z = s * np.exp(2j * np.pi * prob.df * tau)
    if np.ptp(z.real) + np.ptp(z.imag) <= 1e-12 * max(np.abs(z).max(), 1e-300):
        raise NoResonanceError("trace is flat")
    noise = np.std(np.diff(z)) / math.sqrt(2)
    centre, radius = _circle(z)
    if not (np.isfinite(radius) and radius > 5 * noise):
        raise NoResonanceError("no resonance circle above the noise")
    theta = np.unwrap(np.angle(z - centre))
    k = max(1, f.size // 50)
    smooth = np.convolve(theta, np.ones(2 * k + 1) / (2 * k + 1), mode="same")
    speed = np.abs(np.gradient(smooth, f))
    speed[:k] = speed[-k:] = 0
    sign = -1.0 if theta[-1] < theta[0] else 1.0
    # the model's angle falls with frequency; a rising angle means a mirrored circle
    sign = 1.0 if sign < 0 else -1.0
    span = f[-1] - f[0]
    best = None
    for i0 in (int(np.argmin(np.abs(s))), int(np.argmax(speed))):
        # width where the angle has moved +-pi/2 from the seed
        t0 = smooth[i0]
        lo = i0
        while lo > 0 and abs(smooth[lo] - t0) < math.pi / 2:
            lo -= 1
        hi = i0
        while hi < f.size - 1 and abs(smooth[hi] - t0) < math.pi / 2:
            hi += 1
        width = max(f[hi] - f[lo], 4 * (f[1] - f[0]))
        fit, rms = _phase_fit(f, theta, f[i0], f[i0] / width, sign)
        if best is None or rms < best[1]:
            best = (fit, rms)
    (theta0, lqt, f0), rms = best
    qt = math.exp(lqt)
    if not (f[0] < f0 < f[-1]) or rms > 0.3 or f0 / qt > span:
        raise NoResonanceError("no resonance identifiable in the measured span")
    p_res = centre + radius * np.exp(1j * theta0)
    a = 2 * centre - p_res
    ratio = (a - p_res) / a
    D = min(abs(ratio), 1.999)
    phi = math.atan2(ratio.imag, ratio.real)
    qe = 2 * qt / D
    inv_qi = 1 / qt - 1 / qe
    qi = 1 / inv_qi if inv_qi > 0 else 100 * qt
    return np.array([
        f0 / prob.f_ref - 1, math.log(qi), math.log(qe), abs(a),
        math.atan2(a.imag, a.real), tau * 1e9, phi,
    ])


def fit_reflection(trace: ReflectionTrace, max_nfev: int = 2000) -> ResonatorFit:
    """Complex least-squares fit of the reflection model.

    Uncertainties come from the Gauss-Newton covariance s^2 (J^T J)^-1 at
    the optimum. A fit that the optimizer does not report as converged is
    returned with ``converged=False``.
    """
    if len(trace) < MIN_POINTS:
        raise DomainError(f"need at least {MIN_POINTS} points, got {len(trace)}")
    prob = _Problem(trace.freq_hz, trace.s11)
    p0 = initial_guess(trace)
    res = optimize.least_squares(
        prob.residual, p0, jac=prob.jac, method="lm", x_scale="jac",
        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev,
    )
    p = res.x
    f0, qi, qe, a, ac, tau, phi = prob.unpack(p)
    if a < 0:
        a, ac = -a, ac + math.pi
    alpha = ac + 2 * np.pi * prob.f_ref * tau
    dof = max(2 * len(trace) - p.size, 1)
    rss = float(np.sum(res.fun**2))
    J = res.jac
    # alpha = ac + 2 pi f_ref tau: linear map from internal parameters
    T = np.diag([prob.f_ref, qi, qe, 1.0, 1.0, 1e-9, 1.0]).astype(float)
    T[4, 5] = 2 * np.pi * prob.f_ref * 1e-9
    try:
        cov = np.linalg.inv(J.T @ J) * rss / dof
        cov_out = T @ cov @ T.T
        sig = np.sqrt(np.clip(np.diag(cov_out), 0, None))
        sigma = dict(zip(_NAMES, map(float, sig)))
        qt = 1 / (1 / qi + 1 / qe)
        grad = np.zeros(7)
        grad[1] = qt * qt / qi  # d qt / d ln qi
        grad[2] = qt * qt / qe
        sigma["q_tot"] = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    except np.linalg.LinAlgError:
        sigma = {k: math.nan for k in _NAMES + ("q_tot",)}
    converged = bool(res.success and np.all(np.isfinite(p)))
    return ResonatorFit(
        f0, qi, qe, float(a), float(math.remainder(alpha, 2 * math.pi)), tau,
        float(math.remainder(phi, 2 * math.pi)), sigma, math.sqrt(rss), converged,
        trace.source,
    )


# ---------------------------------------------------------------------------
# populations

@dataclass(frozen=True)
class FitSummary:
    n_total: int
    n_used: int
    median: dict
    std: dict
    q_tot_from_medians: float
    table: tuple = ()

    @property
    def n_excluded(self) -> int:
        return self.n_total - self.n_used


def aggregate_fits(fits: Sequence[ResonatorFit]) -> FitSummary:
    """Medians and spreads over converged fits.

    ``q_tot_from_medians`` composes the median Q_int and Q_ext; the direct
    median of Q_tot is in ``median['q_tot']``. Unconverged fits are counted
    and excluded.
    """
    used = [f for f in fits if f.converged]
    if not used:
        raise DomainError("no converged fits to aggregate")
    cols = {
        "q_int": np.array([f.q_int for f in used]),
        "q_ext": np.array([f.q_ext for f in used]),
        "q_tot": np.array([f.q_tot for f in used]),
        "f0": np.array([f.f0 for f in used]),
    }
    med = {k: float(np.median(v)) for k, v in cols.items()}
    std = {k: float(np.std(v, ddof=1)) if v.size > 1 else 0.0 for k, v in cols.items()}
    table = tuple(sorted(((f.f0, f.q_int, f.q_ext, f.q_tot) for f in used)))
    q_comp = 1 / (1 / med["q_int"] + 1 / med["q_ext"])
    return FitSummary(len(fits), len(used), med, std, q_comp, table)


@dataclass(frozen=True)
class OverlayRow:
    source: str
    f0: float
    q_ext: float
    sim_freq: float
    sim_value: float


@dataclass(frozen=True)
class Overlay:
    offset_hz: float
    rows: tuple[OverlayRow, ...]

    @property
    def rank_correlation(self) -> float:
        q = [r.q_ext for r in self.rows if np.isfinite(r.sim_value)]
        v = [r.sim_value for r in self.rows if np.isfinite(r.sim_value)]
        if len(q) < 2:
            return math.nan
        return float(stats.spearmanr(q, v).statistic)


def overlay_with_simulation(
    fits: Iterable[ResonatorFit], curve: QCurve, offset_hz: float = 0.0
) -> Overlay:
    """Pair each measured Q_ext with the simulated curve shifted up by ``offset_hz``.

    The curve value for a resonator at f0 is read at f0 - offset. Fits that
    fall outside the shifted curve get NaN; if none overlap it is an error.
    """
    lo, hi = curve.hz[0] + offset_hz, curve.hz[-1] + offset_hz
    rows = []
    for ft in fits:
        fs = ft.f0 - offset_hz
        val = curve.value_at(2 * np.pi * fs) if lo <= ft.f0 <= hi else math.nan
        rows.append(OverlayRow(ft.source, ft.f0, ft.q_ext, fs, val))
    if rows and all(math.isnan(r.sim_value) for r in rows):
        raise DomainError("measured and simulated bands do not overlap")
    return Overlay(float(offset_hz), tuple(rows))


def estimate_offset(fits: Sequence[ResonatorFit], curve: QCurve) -> float:
    """Frequency shift (Hz) aligning the measured Q_ext minimum with the curve minimum.

    The measured minimum is the vertex of a parabola in log Q_ext through
    the lowest fit and its neighbours in frequency.
    """
    pts = sorted((f.f0, math.log(f.q_ext)) for f in fits if f.converged)
    if len(pts) < 3:
        raise DomainError("need at least three fits to locate a minimum")
    f = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    i = min(max(int(np.argmin(y)), 1), len(f) - 2)
    c2, c1, _ = np.polyfit(f[i - 1 : i + 2], y[i - 1 : i + 2], 2)
    f_meas = -c1 / (2 * c2) if c2 > 0 else f[i]
    w = curve.omega
    j = int(np.nanargmin(curve.values))
    return float(f_meas - w[j] / (2 * np.pi))
