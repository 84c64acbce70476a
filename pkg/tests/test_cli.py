"""simulate.py end to end on a tiny scenario."""
import csv

import pytest

import harness
from errors import SingularSystemError
from simulate import cli_main

TINY_CONF = "M=3\nN=2\nK=2\nD_x=4\nD_y=2\na=3\ngrid_L=64\n"


@pytest.fixture()
def conf(tmp_path):
    path = tmp_path / "tiny.conf"
    path.write_text(TINY_CONF)
    return path


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_single_mode_run(conf, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli_main(["--config", str(conf), "--mode", "dl-zf", "--seeds", "2", "--out", str(out)]) == 0
    assert len(_rows(out / "runs.csv")) == 2
    assert len(_rows(out / "aggregate.csv")) == 1
    assert not (out / "gains.csv").exists()
    assert "runs: 2  failed: 0" in capsys.readouterr().out


def test_sweep_gives_one_row_per_point(conf, tmp_path):
    out = tmp_path / "out"
    assert cli_main(["--config", str(conf), "--mode", "dl-zf", "--seeds", "1",
                     "--sweep", "power:-10,0,10", "--out", str(out)]) == 0
    assert [r["sweep_value"] for r in _rows(out / "aggregate.csv")] == ["-10.0", "0.0", "10.0"]


def test_modes_share_layouts_and_produce_gains(conf, tmp_path):
    out = tmp_path / "out"
    assert cli_main(["--config", str(conf), "--mode", "dl-zf,dl-baseline-mmimo",
                     "--seed-list", "3,5", "--out", str(out), "--trace"]) == 0
    runs = _rows(out / "runs.csv")
    assert {r["mode"] for r in runs} == {"dl-zf", "dl-baseline-mmimo"}
    gains = _rows(out / "gains.csv")
    assert len(gains) == 1 and gains[0]["n_pairs"] == "2"
    assert (out / "traces" / "dl-zf_3.csv").exists()


def test_config_errors_exit_2_and_write_nothing(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli_main(["--config", str(tmp_path / "missing.conf"), "--out", str(out)]) == 2
    assert cli_main(["--preset", "desk", "--mode", "dl-zf,dl-nope", "--out", str(out)]) == 2
    assert not out.exists()
    assert "error:" in capsys.readouterr().err


def test_unsupported_mode_still_exits_0(conf, tmp_path):
    out = tmp_path / "out"
    assert cli_main(["--config", str(conf), "--mode", "ul-baseline-hmimo", "--seeds", "1",
                     "--out", str(out)]) == 0
    assert _rows(out / "runs.csv")[0]["flags"] == "unsupported_algorithm"


def test_failures_exit_1(conf, tmp_path, monkeypatch):
    def boom(config, users, L0, record):
        raise SingularSystemError("synthetic")

    monkeypatch.setattr(harness, "_run_ul_mmse", boom)
    out = tmp_path / "out"
    assert cli_main(["--config", str(conf), "--mode", "ul-mmse", "--seeds", "1",
                     "--out", str(out), "--jobs", "1"]) == 1
    assert _rows(out / "runs.csv")[0]["flags"] == "error:SingularSystemError"
