import pytest

from maskperc.cli import main

CFG = """[experiment]
kind = emergence
[network]
mean = 5
n = 2000
[model]
m = 0.45
T11 = 0.126
T12 = 0.18
T21 = 0.42
T22 = 0.6
[sweep]
grid = 3,5
[sim]
trials = 10
"""


@pytest.fixture
def cfg(tmp_path):
    f = tmp_path / "c.ini"
    f.write_text(CFG)
    return f


def test_solve(cfg, capsys):
    assert main(["solve", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "emerge_mixed" in out and len(out.splitlines()) == 3


def test_sweep_writes_csv_and_png(cfg, tmp_path):
    out = tmp_path / "res" / "sweep.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--seed", "3"]) == 0
    assert out.exists() and out.with_suffix(".png").stat().st_size > 1000
    assert ",3," in out.read_text().splitlines()[1]  # master seed echoed in each row


def test_simulate_writes_trials(cfg, tmp_path, capsys):
    out = tmp_path / "trials.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--simple-graph"]) == 0
    assert len(out.read_text().splitlines()) == 11
    assert "emergence_freq" in capsys.readouterr().out


def test_threshold_and_compare(cfg, capsys):
    assert main(["threshold", "--config", str(cfg), "--axis", "mean", "--bracket", "0", "10"]) == 0
    assert "mean = 2.5859" in capsys.readouterr().out
    assert main(["compare-mutation", "--config", str(cfg), "--check"]) == 0


def test_exit_codes(cfg, tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text(CFG.replace("m = 0.45", "m = 1.2"))
    assert main(["solve", "--config", str(bad)]) == 1
    assert main(["threshold", "--config", str(cfg), "--bracket", "0", "1"]) == 1
    assert main(["solve", "--config", str(tmp_path / "missing.ini")]) == 3
    blocked = tmp_path / "file"
    blocked.write_text("")
    assert main(["sweep", "--config", str(cfg), "--out", str(blocked / "x.csv"), "--no-plot"]) == 3
    slow = tmp_path / "slow.ini"
    slow.write_text(CFG + "[solver]\nmax_iter = 2\n")
    assert main(["solve", "--config", str(slow)]) == 2
