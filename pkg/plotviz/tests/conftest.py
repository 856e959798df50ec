"""Synthetic harness-output builders shared by the plotviz tests."""
from __future__ import annotations

import json
import os

import pytest

from plotviz.series import METRICS_COLUMNS

N_JOINTS = 8


@pytest.fixture
def make_run(tmp_path):
    """Write a run directory with a metrics.csv (and optional summary)."""

    def _make(name, scores, ws, success=None, extra=None):
        d = tmp_path / name
        d.mkdir(parents=True)
        with open(d / "metrics.csv", "w", encoding="utf-8") as fh:
            fh.write(",".join(METRICS_COLUMNS) + "\n")
            for ep, (score, w) in enumerate(zip(scores, ws)):
                row = {c: 0.0 for c in METRICS_COLUMNS}
                row.update(episode=ep, score=score, mean_w=w)
                for col, vals in (extra or {}).items():
                    row[col] = vals[ep]
                fh.write(",".join(str(row[c]) for c in METRICS_COLUMNS)
                         + "\n")
        if success is not None:
            with open(d / "summary.json", "w", encoding="utf-8") as fh:
                json.dump({"success": success}, fh)
        return str(d)

    return _make


@pytest.fixture
def make_trajectory(tmp_path):
    """Write a per-step trajectory CSV with constant stiffness traces."""

    def _make(name="trajectory.csv", steps=30, raw=None, drop=()):
        columns = ["step", "reward", "x", "y", "heading"]
        columns += ["raw_%d" % i for i in range(N_JOINTS)]
        columns += ["k_%d" % i for i in range(N_JOINTS)]
        columns = [c for c in columns if c not in drop]
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(columns) + "\n")
            for t in range(steps):
                row = {"step": t, "reward": 0.0, "x": 0.1 * t, "y": 0.0,
                       "heading": 0.0}
                for i in range(N_JOINTS):
                    row["raw_%d" % i] = (raw[i] if raw is not None
                                         else 0.1 * i)
                    row["k_%d" % i] = 0.5
                fh.write(",".join(str(row[c]) for c in columns) + "\n")
        return str(path)

    return _make
