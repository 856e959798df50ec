"""End-to-end command line runs."""
from __future__ import annotations

import os

import pytest

from plotviz import cli


def test_curves_command_with_partition(make_run, tmp_path, capsys):
    runs = [make_run("seed_0", [1.0, 2.0], [0.5, 0.5]),
            make_run("seed_1", [3.0, 4.0], [0.6, 0.6])]
    part = tmp_path / "part.txt"
    part.write_text("seed_0=success\nseed_1=failure\n", encoding="utf-8")
    out = str(tmp_path / "figs")
    code = cli.main(["curves", "--runs", *runs, "--out", out,
                     "--window", "2", "--partition", str(part)])
    assert code == 0
    assert "wrote" in capsys.readouterr().out
    for name in ("learning_curves.png", "decomposition.png",
                 "aggregated_success.csv", "aggregated_failure.csv"):
        assert os.path.exists(os.path.join(out, name)), name


def test_curves_command_missing_run_errors(tmp_path, capsys):
    code = cli.main(["curves", "--runs", str(tmp_path / "ghost"),
                     "--out", str(tmp_path / "figs")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_stiffness_command(make_trajectory, tmp_path, capsys):
    path = make_trajectory()
    out = str(tmp_path / "stiff.png")
    code = cli.main(["stiffness", "--runs", "ff=%s" % path, "--out", out,
                     "--failure-interval", "5:12"])
    assert code == 0
    assert os.path.exists(out)
    assert "wrote" in capsys.readouterr().out


def test_stiffness_bad_interval_is_a_usage_error(make_trajectory, tmp_path):
    path = make_trajectory()
    with pytest.raises(SystemExit) as exc:
        cli.main(["stiffness", "--runs", path,
                  "--out", str(tmp_path / "x.png"),
                  "--failure-interval", "oops"])
    assert exc.value.code == 2
