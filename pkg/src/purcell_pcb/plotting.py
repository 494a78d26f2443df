"""Report figures. Rendered headless with fixed metadata so files are reproducible."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .admittance import QCurve  # noqa: E402
from .eigen import SweepTrace  # noqa: E402

_RC = {"svg.hashsalt": "purcell-pcb", "svg.fonttype": "path", "figure.dpi": 100}


def _save(fig, path) -> Path:
    path = Path(path)
    meta = {"Date": None} if path.suffix == ".svg" else {}
    if path.suffix == ".png":
        meta = {"Software": None}
    fig.savefig(path, metadata=meta)
    plt.close(fig)
    return path


def plot_q_curve(curve: QCurve, path, title: str = "", marks_hz: Sequence[float] = ()) -> Path:
    """Semilog plot of a (normalized) Q curve against frequency in GHz."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.semilogy(curve.hz / 1e9, curve.values, lw=1.5)
        for f in marks_hz:
            ax.axvline(f / 1e9, color="0.6", ls="--", lw=0.8)
        ax.set_xlabel("frequency (GHz)")
        ax.set_ylabel("normalized Q" if curve.min_normalized else "omega / Re[Y]")
        if title:
            ax.set_title(title)
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        return _save(fig, path)


def plot_sweeps(traces: dict[str, SweepTrace], path, title: str = "", ylabel: str = "Q") -> Path:
    """Q of tracked modes versus their own frequency, one line per trace."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        for name, tr in traces.items():
            f, q = tr.freq_hz, tr.q
            ok = np.isfinite(f) & np.isfinite(q)
            ax.semilogy(f[ok] / 1e9, q[ok], marker=".", ms=3, lw=1.2, label=name)
        ax.set_xlabel("mode frequency (GHz)")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend(fontsize=8)
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        return _save(fig, path)


def plot_fit(freq_hz, data, model, path, title: str = "") -> Path:
    """|S11| and phase of a measured trace with its fitted model."""
    with plt.rc_context(_RC):
        fig, (a1, a2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
        f = np.asarray(freq_hz) / 1e9
        a1.plot(f, np.abs(data), ".", ms=2, label="data")
        a1.plot(f, np.abs(model), lw=1.2, label="fit")
        a1.set_ylabel("|S11|")
        a1.legend(fontsize=8)
        a2.plot(f, np.unwrap(np.angle(data)), ".", ms=2)
        a2.plot(f, np.unwrap(np.angle(model)), lw=1.2)
        a2.set_ylabel("arg S11 (rad)")
        a2.set_xlabel("frequency (GHz)")
        if title:
            a1.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_overlay(rows, curve: QCurve, offset_hz: float, path) -> Path:
    """Measured Q_ext per resonator next to the simulated curve shifted by offset_hz."""
    with plt.rc_context(_RC):
        fig, ax1 = plt.subplots(figsize=(6, 4))
        ax1.semilogy((curve.hz + offset_hz) / 1e9, curve.values, lw=1.2, color="C0")
        ax1.set_ylabel("simulated (normalized)", color="C0")
        ax2 = ax1.twinx()
        ax2.semilogy([r.f0 / 1e9 for r in rows], [r.q_ext for r in rows], "o", color="C1")
        ax2.set_ylabel("measured Q_ext", color="C1")
        ax1.set_xlabel("frequency (GHz)")
        ax1.set_title(f"offset {offset_hz / 1e6:+.0f} MHz")
        fig.tight_layout()
        return _save(fig, path)
