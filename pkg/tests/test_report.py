import math

import pytest

from purcell_pcb.cli import main
from purcell_pcb.report import build_report

FILES = [
    "q_curve.csv", "q_curve.svg", "qubit_sweep_filter.csv", "qubit_sweep_nofilter.csv",
    "qubit_sweep.svg", "resonator_sweep_filter.csv", "resonator_sweep_nofilter.csv",
    "resonator_sweep.svg", "summary.txt",
]


@pytest.fixture(scope="module")
def report(tmp_path_factory):
    out = tmp_path_factory.mktemp("report")
    return out, build_report(out, n_sweep=30)


def test_files_written(report):
    out, _ = report
    for name in FILES:
        assert (out / name).stat().st_size > 0, name


def test_summary_values(report):
    _, s = report
    assert s.center_hz == pytest.approx(9.8e9, rel=0.01)
    assert s.bandwidth_hz == pytest.approx(0.9e9, rel=0.1)
    assert 9 <= s.filter_mode_q <= 13
    # the circuit filtering ratio tracks the ideal single pole
    assert abs(s.filtering_ratio_db - s.filtering_ratio_single_pole_db) < 1.5
    assert 100 <= s.suppression_factor_at_stop <= 5000
    assert s.suppression_db_at_center <= 3
    assert s.t1_limit_filter_s > s.t1_limit_nofilter_s
    assert all(math.isfinite(v) for v in vars(s).values())


def test_deterministic(report, tmp_path):
    out, _ = report
    build_report(tmp_path, n_sweep=30)
    for name in FILES:
        assert (tmp_path / name).read_bytes() == (out / name).read_bytes(), name


def test_cli_png(tmp_path, capsys):
    assert main(["report", "--out", str(tmp_path), "--format", "png"]) == 0
    assert (tmp_path / "q_curve.png").read_bytes()[:4] == b"\x89PNG"
    assert "center_hz" in capsys.readouterr().out
