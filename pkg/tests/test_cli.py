import json
import subprocess
import sys

import pytest

from kerrqrc import experiments as ex
from kerrqrc.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_PARTIAL, main

FAST = ["--test-size", "20", "--n-reservoirs", "2", "--train-sizes", "5,10"]


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "--experiment", "model_comparison", "--models", "qrc,full_qrc,hvrc,crc",
                 "--out-dir", str(out)] + FAST)
    assert code == EXIT_OK
    names = {p.name for p in out.iterdir()}
    assert {"rows.csv", "aggregates.csv", "manifest.json"} <= names
    assert {"fig3_rms_vs_train_size.svg", "fig4_spread_vs_train_size.svg"} <= names
    assert "wrote" in capsys.readouterr().out


def test_config_file_with_overrides(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"experiment": "train_size_sweep", "dims": [2], "seed": 5, "test_size": 20,
                                "n_reservoirs": 1, "train_sizes": [5]}))
    out = tmp_path / "o"
    assert main(["run", "--config", str(conf), "--seed", "9", "--out-dir", str(out), "--no-charts"]) == EXIT_OK
    m = json.loads((out / "manifest.json").read_text())
    assert m["seed"] == 9 and m["config"]["dims"] == [2] and m["config"]["charts"] is False
    assert not list(out.glob("*.svg"))


def test_manifest_reproduces_run(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--experiment", "train_size_sweep", "--dims", "2", "--out-dir", str(a)] + FAST) == EXIT_OK
    assert main(["run", "--config", str(a / "manifest.json"), "--out-dir", str(b)]) == EXIT_OK
    assert (a / "rows.csv").read_bytes() == (b / "rows.csv").read_bytes()
    assert (a / "aggregates.csv").read_bytes() == (b / "aggregates.csv").read_bytes()


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--experiment", "bogus"],
        ["run", "--dims", "two"],
        ["run", "--models", "qrc"],
        ["validate-config", "--classical-form", "cubic"],
    ],
)
def test_config_errors_exit_1(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_bad_json_exit_1(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    assert main(["validate-config", str(p)]) == EXIT_CONFIG
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_validate_config_prints_resolved(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"experiment": "dimension_sweep"}))
    assert main(["validate-config", str(p)]) == EXIT_OK
    resolved = json.loads(capsys.readouterr().out)
    assert resolved["dims"] == list(range(2, 13)) and resolved["models"] == ["qrc"]


def test_io_error_exit_3(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = main(["run", "--experiment", "train_size_sweep", "--dims", "2", "--out-dir", str(blocker / "sub")] + FAST)
    assert code == EXIT_IO
    assert str(blocker) in capsys.readouterr().err


def test_partial_failure_exit_2(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise FloatingPointError("diverged")

    monkeypatch.setattr(ex, "crc_features", boom)
    code = main(["run", "--experiment", "train_size_sweep", "--dims", "2", "--out-dir", str(tmp_path)] + FAST)
    assert code == EXIT_PARTIAL
    assert "failed: FloatingPointError: diverged" in (tmp_path / "rows.csv").read_text()


def test_replot(tmp_path):
    assert main(["run", "--experiment", "train_size_sweep", "--dims", "2", "--no-charts",
                 "--out-dir", str(tmp_path)] + FAST) == EXIT_OK
    before = (tmp_path / "aggregates.csv").read_bytes()
    assert main(["replot", str(tmp_path / "rows.csv")]) == EXIT_OK
    assert (tmp_path / "aggregates.csv").read_bytes() == before
    assert (tmp_path / "fig1_rms_vs_train_size.svg").exists()
    assert main(["replot", str(tmp_path / "nope.csv")]) == EXIT_IO


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "kerrqrc.cli", "validate-config", "--experiment", "input_noise_sweep"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["test_size"] == 100
