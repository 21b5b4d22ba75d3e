import subprocess
import sys

import pytest

from robust_imrt.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main

QUICK = "optimizer:\n  max_iterations: 20\n  seed: 1\n"


@pytest.fixture
def config_file(tmp_path):
    p = tmp_path / "cfg.yaml"
    p.write_text(QUICK)
    return p


def test_phantom(config_file, tmp_path):
    assert main(["phantom", "--config", str(config_file), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert (tmp_path / "o" / "phantom_labels.csv").is_file()


def test_optimize_then_dvh(config_file, tmp_path):
    out = tmp_path / "o"
    assert main(["optimize", "--config", str(config_file), "--algorithm", "bso", "--seed", "4", "--out", str(out)]) == 0
    report = (out / "report.txt").read_text()
    assert "algorithm=bso" in report and "seed=4" in report
    assert main(["dvh", "--config", str(config_file), "--weights", str(out / "weights.csv"), "--out", str(out / "d")]) == 0
    assert (out / "d" / "dvh.csv").read_bytes() == (out / "dvh_nominal.csv").read_bytes()


def test_missing_config(tmp_path):
    assert main(["optimize", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG


def test_schema_error(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("optimizer:\n  cso:\n    pa: 1.5\n")
    assert main(["optimize", "--config", str(p), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "optimizer.cso.pa" in capsys.readouterr().err


def test_bad_weights_file(config_file, tmp_path):
    w = tmp_path / "w.csv"
    w.write_text("beamlet_index,weight\n0,1.0\n")
    assert main(["dvh", "--config", str(config_file), "--weights", str(w), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_non_finite_fitness_is_runtime_error(tmp_path):
    p = tmp_path / "huge.yaml"
    p.write_text(QUICK + "goals:\n  w_under: 1.0e+308\n  w_over: 1.0e+308\n")
    assert main(["optimize", "--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_RUNTIME


def test_bad_seed(config_file):
    with pytest.raises(SystemExit) as info:
        main(["optimize", "--config", str(config_file), "--seed", "-1"])
    assert info.value.code == 2


def test_module_entry_point(config_file, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "robust_imrt", "phantom", "--config", str(config_file), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
