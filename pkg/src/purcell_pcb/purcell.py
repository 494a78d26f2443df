"""Closed-form readout-chain accounting: Purcell bound, radiative T1, coupling rates."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .network import DomainError


@dataclass(frozen=True)
class ReadoutChainParams:
    """Angular frequencies in rad/s, capacitances in F, z0 in ohm.

    ``kappa_at_qubit`` optionally supplies kappa_ext evaluated at the qubit
    frequency; without it kappa_ext is taken as omega_res / q_ext.
    """

    omega_qb: float
    omega_res: float
    g: float
    q_ext: float
    C: float = 0.0
    Cc: float = 0.0
    z0: float = 50.0
    kappa_at_qubit: float | None = None

    def __post_init__(self):
        if not (self.omega_qb > 0 and self.omega_res > 0 and self.q_ext > 0 and self.z0 > 0):
            raise DomainError("frequencies, q_ext and z0 must be positive")
        if self.g < 0 or self.C < 0 or self.Cc < 0:
            raise DomainError("g, C and Cc must be non-negative")


@dataclass(frozen=True)
class PurcellBound:
    gamma1: float
    kappa: float
    kappa_frequency: float  # rad/s at which kappa_ext was evaluated

    @property
    def t1_max(self) -> float:
        return math.inf if self.gamma1 == 0 else 1.0 / self.gamma1


def kappa_ext(omega_res: float, q_ext: float) -> float:
    """External coupling rate omega / Q_ext (rad/s)."""
    if not (omega_res > 0 and q_ext > 0):
        raise DomainError("omega_res and q_ext must be positive")
    return omega_res / q_ext


def purcell_bound(p: ReadoutChainParams) -> PurcellBound:
    """Lower bound (g / Delta)^2 kappa_ext on the qubit decay rate (1/s)."""
    delta = p.omega_qb - p.omega_res
    if delta == 0:
        raise DomainError("zero qubit-resonator detuning")
    if p.kappa_at_qubit is not None:
        kappa, at = p.kappa_at_qubit, p.omega_qb
    else:
        kappa, at = kappa_ext(p.omega_res, p.q_ext), p.omega_res
    return PurcellBound((p.g / delta) ** 2 * kappa, kappa, at)


def t1_radiative(q: float, omega: float) -> float:
    """Radiatively limited T1 = Q / omega (s)."""
    if not (q > 0 and omega > 0):
        raise DomainError("Q and omega must be positive")
    return q / omega


def q_from_t1(t1: float, omega: float) -> float:
    if not (t1 > 0 and omega > 0):
        raise DomainError("T1 and omega must be positive")
    return omega * t1


def direct_coupling_qext(C: float, Cc: float, z0: float, omega: float) -> float:
    """Q_ext ~ C / (z0 Cc^2 omega) of a resonator capacitively loaded by a line.

    Weak-coupling limit Cc << C.
    """
    if not (C > 0 and Cc > 0 and z0 > 0 and omega > 0):
        raise DomainError("C, Cc, z0 and omega must be positive")
    return C / (z0 * Cc**2 * omega)


def coupling_rate(Cg: float, C1: float, C2: float, omega1: float, omega2: float) -> float:
    """Capacitive coupling g (rad/s) between two LC modes, weak-coupling form."""
    return 0.5 * Cg / math.sqrt(C1 * C2) * math.sqrt(omega1 * omega2)


# ---------------------------------------------------------------------------
# coherence data

@dataclass(frozen=True)
class CoherenceSample:
    qubit: str
    t1: float
    t2_ramsey: float | None = None
    t2_echo: float | None = None

    def __post_init__(self):
        for name in ("t1", "t2_ramsey", "t2_echo"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DomainError(f"{self.qubit}: {name} must be positive")
        # T2 <= 2 T1, with 1% slack for independently averaged data
        for v in (self.t2_ramsey, self.t2_echo):
            if v is not None and v > 2 * self.t1 * 1.01:
                raise DomainError(f"{self.qubit}: T2 exceeds 2 T1")


@dataclass(frozen=True)
class T1Validation:
    limit: float
    above: int
    below_or_equal: int
    median_t1: float
    min_margin: float
    median_margin: float

    @property
    def count(self) -> int:
        return self.above + self.below_or_equal

    @property
    def all_above(self) -> bool:
        return self.below_or_equal == 0


def validate_t1_against_limit(samples: Sequence[CoherenceSample], limit: float) -> T1Validation:
    """Count measured T1 values strictly above a radiative limit.

    A T1 equal to the limit counts as not above. Margins are T1 / limit.
    """
    if not samples:
        raise DomainError("no coherence samples")
    if not limit > 0:
        raise DomainError("limit must be positive")
    t1 = np.array([s.t1 for s in samples])
    above = int(np.sum(t1 > limit))
    margin = t1 / limit
    return T1Validation(
        limit, above, len(t1) - above, float(np.median(t1)),
        float(margin.min()), float(np.median(margin)),
    )


def synthetic_t1_sample(n: int, median: float, sd: float) -> list[CoherenceSample]:
    """Deterministic sample with exactly the given median and standard deviation.

    Uses evenly spaced normal quantiles, rescaled so the sample SD (ddof=1)
    matches ``sd``.
    """
    if n < 2:
        raise DomainError("need at least two qubits")
    probs = (np.arange(n) + 0.5) / n
    z = np.array([statistics.NormalDist().inv_cdf(p) for p in probs])
    z = (z - np.median(z)) / np.std(z, ddof=1)
    t1 = median + sd * z
    if np.any(t1 <= 0):
        raise DomainError("requested spread produces non-positive T1 values")
    return [CoherenceSample(f"Q{k + 1}", float(v)) for k, v in enumerate(t1)]
