"""Reading run series from harness output files and aggregating them."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

# the per-episode metrics schema, mirrored literally from the harness CSV;
# this package reads the files and knows nothing else about the producer
METRICS_COLUMNS = ["episode", "score", "mean_w", "mean_d", "mean_H_fb",
                   "mean_H_ff", "mean_delta", "loss_traj", "loss_value",
                   "loss_model_recon", "loss_model_kl", "loss_model_ce"]

CURVE_COLUMNS = ["score", "mean_w"]
DECOMP_COLUMNS = ["mean_d", "mean_H_fb", "mean_H_ff"]


@dataclass
class RunSeries:
    """One run's per-episode metrics plus an optional partition label."""
    name: str
    episodes: list[int]
    columns: dict[str, list[float]]
    label: str | None = None


def _read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return header, rows


def read_metrics(path: str) -> tuple[list[int], dict[str, list[float]]]:
    """Parse a metrics.csv; the header must match the schema exactly."""
    header, rows = _read_csv(path)
    if header != METRICS_COLUMNS:
        raise ValueError("unexpected metrics columns in %s: %r"
                         % (path, header))
    episodes = [int(r[0]) for r in rows]
    columns = {col: [float(r[i]) for r in rows]
               for i, col in enumerate(header) if col != "episode"}
    return episodes, columns


def read_run(run_dir: str, label: str | None = None) -> RunSeries:
    """Load one run directory; the default label comes from its summary
    (success/failure partition), or 'run' when none is present."""
    episodes, columns = read_metrics(os.path.join(run_dir, "metrics.csv"))
    if label is None:
        summary_path = os.path.join(run_dir, "summary.json")
        if os.path.exists(summary_path):
            with open(summary_path, "r", encoding="utf-8") as fh:
                label = "success" if json.load(fh).get("success") \
                    else "failure"
        else:
            label = "run"
    return RunSeries(os.path.basename(os.path.normpath(run_dir)),
                     episodes, columns, label)


def read_trajectory(path: str) -> dict[str, list[float]]:
    """Parse a per-step trajectory CSV into named float columns."""
    if os.path.isdir(path):
        path = os.path.join(path, "trajectory.csv")
    header, rows = _read_csv(path)
    return {col: [float(r[i]) for r in rows]
            for i, col in enumerate(header)}


def moving_average(xs: list[float], window: int) -> list[float]:
    """Trailing mean over the last `window` points (shorter at the head,
    so the series keeps its length); window 1 is the identity."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if window == 1:
        return [float(x) for x in xs]
    return [float(np.mean(xs[max(0, i - window + 1):i + 1]))
            for i in range(len(xs))]


def smoothed(series: RunSeries, window: int) -> RunSeries:
    return RunSeries(series.name, list(series.episodes),
                     {c: moving_average(v, window)
                      for c, v in series.columns.items()}, series.label)


def aggregate(series: list[RunSeries], columns: list[str]) -> list[dict]:
    """Per-episode 25/50/75% quantiles of the named columns across runs;
    a run past its end simply drops out of later episodes."""
    for s in series:
        for col in columns:
            if col not in s.columns:
                raise ValueError("run %s lacks column %r" % (s.name, col))
    if not series:
        return []
    horizon = max(len(s.episodes) for s in series)
    out = []
    for ep in range(horizon):
        alive = [s for s in series if len(s.episodes) > ep]
        row = {"episode": ep, "runs": len(alive)}
        for col in columns:
            vals = [s.columns[col][ep] for s in alive]
            q25, q50, q75 = np.percentile(vals, [25, 50, 75])
            row[col + "_q25"] = float(q25)
            row[col + "_q50"] = float(q50)
            row[col + "_q75"] = float(q75)
        out.append(row)
    return out


def group_by_label(series: list[RunSeries]) -> dict[str, list[RunSeries]]:
    groups: dict[str, list[RunSeries]] = {}
    for s in series:
        groups.setdefault(s.label or "run", []).append(s)
    return {label: groups[label] for label in sorted(groups)}


def load_partition(path: str) -> dict[str, str]:
    """Flat name=label lines; comments and blanks ignored."""
    mapping: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ValueError("line %d is not name=label: %r"
                                 % (lineno, line))
            name, label = body.split("=", 1)
            mapping[name.strip()] = label.strip()
    return mapping
