import numpy as np
import pytest

from purcell_pcb import formats
from purcell_pcb.cli import main
from purcell_pcb.spectro import ResonatorFit, synthesize_trace


@pytest.fixture(scope="module")
def cell_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "cell.net"
    assert main(["synth", "--n-res", "1", "-o", str(p)]) == 0
    return p


def test_patch_side(capsys):
    assert main(["synth", "--patch", "--eps", "2.2", "--n-res", "0"]) == 0
    assert "patch side a = 6.875 mm" in capsys.readouterr().out


def test_simulate_probe_center(cell_file, tmp_path, capsys):
    out = tmp_path / "q.csv"
    assert main(["simulate", str(cell_file), "--port", "Lr1", "-o", str(out)]) == 0
    text = capsys.readouterr().out
    center = float(text.split("center_hz = ")[1].split()[0])
    assert center == pytest.approx(9.8e9, rel=0.01)
    assert formats.read_qcurve_csv(out).min_normalized


def test_simulate_is_deterministic(cell_file, tmp_path):
    for name in ("a.csv", "b.csv"):
        assert main(["simulate", str(cell_file), "--port", "Lr1", "--grid", "8e9:12e9:101",
                     "-o", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_simulate_errors(cell_file, tmp_path, capsys):
    assert main(["simulate", str(cell_file), "--port", "nope"]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["simulate", str(tmp_path / "missing.net"), "--port", "Lr1"]) == 1
    bad = tmp_path / "bad.net"
    bad.write_text("[nodes]\ngnd a\n[elements]\nL1 l a gnd 1.8nHx\n")
    assert main(["simulate", str(bad), "--port", "L1"]) == 1
    assert "line 4" in capsys.readouterr().err


def test_eigen_sweep(cell_file, tmp_path):
    out = tmp_path / "sw.csv"
    assert main(["eigen", str(cell_file), "--sweep", "Lr1=0.5n:0.7n:5", "--track", "resonator1",
                 "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "swept_value_h,mode_freq_hz,q,identity,flags"
    assert len(lines) == 6


def test_eigen_modes(cell_file, tmp_path):
    out = tmp_path / "m.csv"
    assert main(["eigen", str(cell_file), "-o", str(out)]) == 0
    ids = {line.split(",")[3] for line in out.read_text().splitlines()[1:]}
    assert {"qubit1", "resonator1", "filter"} <= ids


def test_fit_requires_files():
    with pytest.raises(SystemExit) as exc:
        main(["fit"])
    assert exc.value.code != 0


def test_fit_and_compare_end_to_end(cell_file, tmp_path, capsys):
    files = []
    for k, f0 in enumerate(np.linspace(9.4e9, 10.2e9, 5)):
        fit = ResonatorFit(f0, 3e4, 6e3 + 500 * k, 0.9, 0.3, 30e-9, 0.05)
        half = 6 * f0 / fit.q_tot
        tr = synthesize_trace(fit, np.linspace(f0 - half, f0 + half, 201), 2e-3, seed=k)
        p = tmp_path / f"res{k}.s1p"
        formats.write_touchstone(p, tr)
        files.append(str(p))
    fits = tmp_path / "fits.csv"
    assert main(["fit", *files, "-o", str(fits)]) == 0
    assert "converged = 5" in capsys.readouterr().out
    got = formats.read_fits_csv(fits)
    assert [g.source for g in got] == [f"res{k}" for k in range(5)]
    assert got[2].q_ext == pytest.approx(7e3, rel=0.05)
    assert all(g.converged for g in got)

    sim = tmp_path / "q.csv"
    assert main(["simulate", str(cell_file), "--port", "Lr1", "-o", str(sim)]) == 0
    cmp_out = tmp_path / "cmp.csv"
    assert main(["compare", "--fits", str(fits), "--sim", str(sim), "--offset-hz", "0",
                 "-o", str(cmp_out), "--svg", str(tmp_path / "ov.svg")]) == 0
    assert "rank_correlation" in capsys.readouterr().out
    assert len(cmp_out.read_text().splitlines()) == 6
    assert (tmp_path / "ov.svg").stat().st_size > 0
    assert main(["compare", "--fits", str(fits), "--sim", str(sim), "--estimate-offset"]) == 0


def test_fit_bad_file(tmp_path, capsys):
    p = tmp_path / "empty.s1p"
    p.write_text("! nothing\n")
    assert main(["fit", str(p)]) == 1
    assert "no data" in capsys.readouterr().err
