"""Figure construction and rendering; deterministic for fixed inputs."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .series import (CURVE_COLUMNS, DECOMP_COLUMNS, RunSeries, aggregate,
                     group_by_label, load_partition, read_run, read_trajectory,
                     smoothed)

N_TRACES = 8
_FIXED_COLORS = {"success": "tab:blue", "failure": "tab:red"}
_CYCLE = ["tab:green", "tab:orange", "tab:purple", "tab:brown", "tab:gray"]


def _color(label: str, fallback_index: int) -> str:
    return _FIXED_COLORS.get(label, _CYCLE[fallback_index % len(_CYCLE)])


def _plot_group(ax, rows: list[dict], column: str, label: str,
                color: str) -> None:
    eps = [r["episode"] for r in rows]
    ax.plot(eps, [r[column + "_q50"] for r in rows], color=color,
            lw=1.2, label=label)
    # a lone run has no spread; draw the band only when one exists
    if any(r["runs"] >= 2 for r in rows):
        ax.fill_between(eps, [r[column + "_q25"] for r in rows],
                        [r[column + "_q75"] for r in rows],
                        color=color, alpha=0.25, linewidth=0)


def build_curve_figures(groups: dict[str, list[RunSeries]], window: int):
    """(learning figure, decomposition figure, per-label quantile tables)."""
    tables = {}
    for label, runs in groups.items():
        smooth = [smoothed(s, window) for s in runs]
        tables[label] = aggregate(smooth, CURVE_COLUMNS + DECOMP_COLUMNS)

    fig_curves, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for i, (label, rows) in enumerate(tables.items()):
        for ax, column in zip(axes, CURVE_COLUMNS):
            _plot_group(ax, rows, column, label, _color(label, i))
    axes[0].set_ylabel("score")
    axes[1].set_ylabel("mixture ratio")
    axes[1].set_xlabel("episode")
    axes[0].legend(fontsize=8)

    fig_decomp, axes_d = plt.subplots(3, 1, figsize=(8, 8), sharex=True)
    for i, (label, rows) in enumerate(tables.items()):
        for ax, column in zip(axes_d, DECOMP_COLUMNS):
            _plot_group(ax, rows, column, label, _color(label, i))
    for ax, column in zip(axes_d, ("mean distance d", "H FB", "H FF")):
        ax.set_ylabel(column)
    axes_d[-1].set_xlabel("episode")
    axes_d[0].legend(fontsize=8)
    return fig_curves, fig_decomp, tables


def _write_table(path: str, rows: list[dict]) -> None:
    columns = list(rows[0].keys()) if rows else ["episode"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in columns) + "\n")


def plot_learning_curves(run_dirs: list[str], out_dir: str, window: int = 1,
                         partition: dict[str, str] | str | None = None
                         ) -> dict:
    """Render score/mixture and decomposition curves (median + quartile
    band per partition label) and write the aggregated tables."""
    if not run_dirs:
        raise ValueError("at least one run directory is required")
    if isinstance(partition, str):
        partition = load_partition(partition)
    if partition:
        names = {os.path.basename(os.path.normpath(d)) for d in run_dirs}
        unknown = sorted(set(partition) - names)
        if unknown:
            raise ValueError("partition names not among runs: %s" % unknown)
    series = []
    for d in run_dirs:
        name = os.path.basename(os.path.normpath(d))
        series.append(read_run(d, (partition or {}).get(name)))
    groups = group_by_label(series)
    fig_curves, fig_decomp, tables = build_curve_figures(groups, window)
    os.makedirs(out_dir, exist_ok=True)
    paths = {"curves": os.path.join(out_dir, "learning_curves.png"),
             "decomposition": os.path.join(out_dir, "decomposition.png"),
             "tables": {}}
    fig_curves.savefig(paths["curves"], dpi=100)
    fig_decomp.savefig(paths["decomposition"], dpi=100)
    plt.close(fig_curves)
    plt.close(fig_decomp)
    for label, rows in tables.items():
        p = os.path.join(out_dir, "aggregated_%s.csv" % label)
        _write_table(p, rows)
        paths["tables"][label] = p
    return paths


def build_stiffness_figure(sources: list[tuple[str, dict[str, list[float]]]],
                           failure_interval: tuple[float, float] | None):
    """Eight stacked raw-stiffness traces, optionally overlaid per source,
    with the failure interval shaded."""
    for label, traces in sources:
        missing = ["raw_%d" % i for i in range(N_TRACES)
                   if "raw_%d" % i not in traces]
        if missing:
            raise ValueError("source %r lacks stiffness columns %s"
                             % (label, missing))
    fig, axes = plt.subplots(N_TRACES, 1, figsize=(8, 12), sharex=True)
    for j, (label, traces) in enumerate(sources):
        steps = traces.get("step", list(range(len(traces["raw_0"]))))
        for i, ax in enumerate(axes):
            ax.plot(steps, traces["raw_%d" % i], lw=0.8,
                    color=_CYCLE[j % len(_CYCLE)],
                    label=label if i == 0 else None)
    for i, ax in enumerate(axes):
        ax.set_ylabel("raw k%d" % i, fontsize=7)
        if failure_interval is not None:
            ax.axvspan(failure_interval[0], failure_interval[1],
                       color="red", alpha=0.15)
    axes[-1].set_xlabel("step")
    if len(sources) > 1:
        axes[0].legend(fontsize=7)
    return fig


def plot_stiffness_trace(sources: list[tuple[str, str]], out_path: str,
                         failure_interval: tuple[float, float] | None = None
                         ) -> str:
    """Render stiffness traces from (label, trajectory csv or eval dir)."""
    loaded = [(label, read_trajectory(path)) for label, path in sources]
    fig = build_stiffness_figure(loaded, failure_interval)
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    fig.savefig(out_path, dpi=100)
    plt.close(fig)
    return out_path
