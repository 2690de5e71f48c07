import json
import subprocess
import sys

import numpy as np
import pytest

from spinscope import cli
from spinscope.register import preset_path

TWO = str(preset_path("example_2spin"))
TWIN = str(preset_path("twin_spins"))


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_parse_grid():
    assert cli.parse_grid("0:1:0.25").tolist() == [0, 0.25, 0.5, 0.75, 1.0]
    assert cli.parse_grid("1e-6:3e-6:1e-6") == pytest.approx([1e-6, 2e-6, 3e-6])
    for bad in ("1:0:1", "0:1:0", "a:b:c", "0:1"):
        with pytest.raises(cli.ValidationError):
            cli.parse_grid(bad)


def test_thread_count(monkeypatch):
    monkeypatch.delenv("SPINSCOPE_THREADS", raising=False)
    assert cli.thread_count(None) == 1
    monkeypatch.setenv("SPINSCOPE_THREADS", "3")
    assert cli.thread_count(None) == 3
    assert cli.thread_count(2) == 2
    monkeypatch.setenv("SPINSCOPE_THREADS", "x")
    with pytest.raises(cli.ValidationError):
        cli.thread_count(None)


def test_simulate_outputs(tmp_path):
    assert run("simulate", "--register", TWO, "--protocol", "dd", "--grid", "1e-7:2e-6:1e-7",
               "--out", tmp_path, "--seed", 4) == 0
    trace = json.loads((tmp_path / "trace.json").read_text())
    assert len(trace["values"]) == 20 and trace["meta"]["noise"]["seed"] == 4
    csv_lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert csv_lines[0].startswith("# register_digest=") and csv_lines[1] == "# seed=4"
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["command"] == "simulate" and man["outputs"] == ["trace.json", "trace.csv"]
    assert man["kernel_backend"] in ("cython", "python")


def test_simulate_is_reproducible(tmp_path, monkeypatch):
    args = ["simulate", "--register", TWO, "--protocol", "hahn", "--grid", "0:5e-6:1e-7", "--seed", 9]
    assert run(*args, "--out", tmp_path / "a") == 0
    monkeypatch.setenv("SPINSCOPE_THREADS", "4")
    assert run(*args, "--out", tmp_path / "b") == 0
    for name in ("trace.json", "trace.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_noiseless_matches_library(tmp_path):
    from spinscope.protocols import Protocol
    from spinscope.register import load_register

    assert run("simulate", "--register", TWO, "--protocol", "ramsey", "--grid", "0:1e-6:1e-7",
               "--noiseless", "--out", tmp_path) == 0
    got = json.loads((tmp_path / "trace.json").read_text())["values"]
    want = (1 + Protocol("ramsey").evaluate(load_register(TWO), cli.parse_grid("0:1e-6:1e-7"))) / 2
    assert got == pytest.approx(want.tolist(), abs=1e-15)


def test_invalid_inputs_exit_1(tmp_path, capsys):
    assert run("simulate", "--register", TWO, "--protocol", "dd", "--pulses", 3, "--out", tmp_path) == 1
    assert "pulses_n" in capsys.readouterr().err
    assert run("simulate", "--register", TWO, "--protocol", "nope", "--out", tmp_path) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("register", "validate", bad) == 1


def test_missing_file_exit_3(tmp_path):
    assert run("register", "validate", tmp_path / "missing.json") == 3


def test_register_validate(capsys):
    assert run("register", "validate", TWO) == 0
    assert "valid register: 2 spins" in capsys.readouterr().out


def test_oracle_check_pass_and_fault(tmp_path, capsys):
    assert run("oracle-check", "--register", TWO, "--points", 40, "--out", tmp_path) == 0
    report = json.loads((tmp_path / "oracle_check.json").read_text())
    assert max(report["max_abs_error"].values()) <= 1e-9
    assert run("oracle-check", "--register", TWO, "--points", 40, "--inject-fault", "hahn") == 2
    assert "hahn" in capsys.readouterr().err


def test_oracle_check_rejects_large_register():
    assert run("oracle-check", "--register", str(preset_path("synthetic_23_s1"))) == 1


def test_fisher_twins_reports_null_direction(tmp_path, capsys):
    assert run("fisher", "--register", TWIN, "--protocol", "dd", "--grid", "5e-8:4e-6:2e-8",
               "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "null direction" in out and "detectable: 0/2" in out
    rows = (tmp_path / "detectability.csv").read_text().splitlines()
    assert rows[3].split(",")[0] == "label" and len(rows) == 6
    assert (tmp_path / "ellipses.csv").exists() and (tmp_path / "fisher.json").exists()


def test_fisher_single_spin(tmp_path, capsys):
    assert run("fisher", "--register", str(preset_path("example_1spin")), "--protocol", "dd",
               "--out", tmp_path) == 0
    assert "detectable: 1/1" in capsys.readouterr().out


def test_spectrum_command(tmp_path, capsys):
    assert run("spectrum", "--register", str(preset_path("example_3spin_s_half")),
               "--grid", "0:199.8e-6:0.2e-6", "--taus", "10e-6:100e-6:10e-6", "--out", tmp_path) == 0
    pairs = json.loads((tmp_path / "pairs.json").read_text())
    assert len(pairs["peaks"]) == 6 and len(pairs["pairs"]) == 3
    for name in ("spectra.csv", "mean_spectrum.csv", "correlation.csv", "manifest.json"):
        assert (tmp_path / name).exists()
    first = (tmp_path / "spectra.csv").read_bytes()
    assert run("spectrum", "--register", str(preset_path("example_3spin_s_half")),
               "--grid", "0:199.8e-6:0.2e-6", "--taus", "10e-6:100e-6:10e-6", "--out", tmp_path / "b") == 0
    assert (tmp_path / "b" / "spectra.csv").read_bytes() == first


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "spinscope.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("spinscope ")
