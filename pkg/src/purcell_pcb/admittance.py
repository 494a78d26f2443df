"""Quality-factor curves from port admittance, and passband metrics on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .network import DomainError, FrequencyGrid, Netlist, admittance_sweep


class UndefinedQError(DomainError):
    """Re[Y] <= 0: the point is lossless (or non-passive) and has no Q."""


class NoPassbandError(ValueError):
    pass


def q_from_admittance(omega_r: float, C: float, Y: complex) -> float:
    """Q = omega_r * C / Re[Y] for a resonator of shunt capacitance C."""
    if not omega_r > 0 or not C > 0:
        raise DomainError("omega_r and C must be positive")
    g = complex(Y).real
    if not g > 0:
        raise UndefinedQError(f"Re[Y] = {g!r} S, Q undefined")
    return omega_r * C / g


@dataclass(frozen=True)
class QCurve:
    """Q(omega) or omega/Re[Y(omega)] on a grid; NaN where undefined.

    ``normalized`` means the values are omega/Re[Y] (ohm rad/s, i.e. Q/C)
    rather than absolute Q; ``min_normalized`` means they were further
    divided by their minimum.
    """

    omega: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    normalized: bool = True
    min_normalized: bool = False

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if w.shape != v.shape or w.ndim != 1:
            raise DomainError("omega and values must be 1-D and the same length")
        defined = np.isfinite(v)
        if np.any(v[defined] <= 0):
            raise DomainError("curve values must be positive where defined")
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "values", v)

    @property
    def hz(self) -> np.ndarray:
        return self.omega / (2 * np.pi)

    def value_at(self, omega: float) -> float:
        """Linear interpolation between samples; domain error off-grid."""
        lo, hi = self.omega[0], self.omega[-1]
        if not lo <= omega <= hi:
            raise DomainError(
                f"{omega / (2 * np.pi):.6g} Hz outside curve span "
                f"[{lo / (2 * np.pi):.6g}, {hi / (2 * np.pi):.6g}] Hz"
            )
        ok = np.isfinite(self.values)
        return float(np.interp(omega, self.omega[ok], self.values[ok]))


def q_curve(net: Netlist, port, grid: FrequencyGrid, C: float | None = None) -> QCurve:
    """omega/Re[Y] at ``port`` (or absolute Q if the shunt capacitance ``C`` is given)."""
    sw = admittance_sweep(net, port, grid.omega)
    g = sw.y.real
    vals = np.full(g.shape, np.nan)
    ok = (g > 0) & ~sw.poles
    vals[ok] = grid.omega[ok] / g[ok]
    if C is not None:
        vals = vals * C
    return QCurve(grid.omega, vals, normalized=C is None)


def normalized_q_curve(net: Netlist, port, grid: FrequencyGrid) -> QCurve:
    """omega/Re[Y(omega)] divided by its minimum over the grid."""
    raw = q_curve(net, port, grid)
    if not np.any(np.isfinite(raw.values)):
        raise UndefinedQError("every grid point is lossless; nothing to normalize")
    vals = raw.values / np.nanmin(raw.values)
    return QCurve(raw.omega, vals, normalized=True, min_normalized=True)


@dataclass(frozen=True)
class PassbandMetrics:
    """Passband center, 3 dB bandwidth (both rad/s) and filter Q.

    ``lower_found``/``upper_found`` report whether each 3 dB crossing lies on
    the grid; when either is missing the result is partial and
    ``bandwidth``/``q_filter`` are NaN.
    """

    center: float
    bandwidth: float
    q_filter: float
    minimum: float
    lower: float
    upper: float
    lower_found: bool = True
    upper_found: bool = True

    def __post_init__(self):
        for name in ("center", "bandwidth", "q_filter", "minimum", "lower", "upper"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def partial(self) -> bool:
        return not (self.lower_found and self.upper_found)

    @property
    def center_hz(self) -> float:
        return self.center / (2 * math.pi)

    @property
    def bandwidth_hz(self) -> float:
        return self.bandwidth / (2 * math.pi)


def _parabola_vertex(x, y):
    """Vertex of the parabola through three points (x need not be uniform)."""
    x0, x1, x2 = x
    y0, y1, y2 = y
    d = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / d
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / d
    c = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2) / d
    if a <= 0:
        return x1, y1
    xv = -b / (2 * a)
    xv = min(max(xv, x0), x2)
    return xv, c - b * b / (4 * a)


def _crossing(w, v, start, step, level):
    i = start  # last finite sample below the level
    j = start + step
    while 0 <= j < len(v):
        if np.isfinite(v[j]):
            if v[j] >= level:
                t = (level - v[i]) / (v[j] - v[i])
                return w[i] + t * (w[j] - w[i])
            i = j
        j += step
    return None


def passband_metrics(curve: QCurve) -> PassbandMetrics:
    """Center (quadratic-refined argmin), +3 dB bandwidth and Q = center/bandwidth.

    The 3 dB points are where the curve first reaches twice its minimum on
    either side of the center.
    """
    v = curve.values
    w = curve.omega
    if not np.any(np.isfinite(v)):
        raise NoPassbandError("curve has no defined values")
    i = int(np.nanargmin(v))
    vmin = v[i]
    if i == 0 or i == len(v) - 1 or not (np.isfinite(v[i - 1]) and np.isfinite(v[i + 1])):
        raise NoPassbandError("minimum sits at the grid edge; no interior passband")
    if np.nanmax(v) <= vmin * (1 + 1e-12):
        raise NoPassbandError("curve is flat")
    center, vref = _parabola_vertex(w[i - 1 : i + 2], v[i - 1 : i + 2])
    vref = min(vref, vmin)
    level = 2.0 * vref
    lo = _crossing(w, v, i, -1, level)
    hi = _crossing(w, v, i, +1, level)
    if lo is None or hi is None:
        return PassbandMetrics(
            center, math.nan, math.nan, vref,
            math.nan if lo is None else lo, math.nan if hi is None else hi,
            lo is not None, hi is not None,
        )
    bw = hi - lo
    return PassbandMetrics(center, bw, center / bw, vref, lo, hi)


def filtering_ratio(curve: QCurve, omega_stop: float, omega_pass: float) -> float:
    """10 log10(value(stop) / value(pass)) in dB, linearly interpolated."""
    a = curve.value_at(omega_stop)
    b = curve.value_at(omega_pass)
    # difference of logs keeps ratio(a, b) == -ratio(b, a) bit-exactly
    return 10.0 * (math.log10(a) - math.log10(b))


def single_pole_filtering_ratio(f_stop: float, f_pass: float, f0: float, q: float) -> float:
    """Filtering ratio (dB) of an ideal single-pole filter seen through a small Cc.

    Re[Y_in] ~ (omega Cc)^2 Re[Z_f] with Re[Z_f] = R / (1 + q^2 (u - 1/u)^2),
    u = omega / omega_0, so omega / Re[Y_in] ~ (1 + q^2 (u - 1/u)^2) / omega.
    """
    if not all(x > 0 for x in (f_stop, f_pass, f0, q)):
        raise DomainError("frequencies and q must be positive")

    def v(f):
        u = f / f0
        return (1 + q * q * (u - 1 / u) ** 2) / f

    return 10.0 * (math.log10(v(f_stop)) - math.log10(v(f_pass)))
