"""Plotting for harness run outputs; consumes only their CSV/JSON files."""
from .series import (METRICS_COLUMNS, RunSeries, aggregate, moving_average,
                     read_run, read_trajectory)
from .figures import plot_learning_curves, plot_stiffness_trace

__all__ = ["METRICS_COLUMNS", "RunSeries", "aggregate", "moving_average",
           "read_run", "read_trajectory", "plot_learning_curves",
           "plot_stiffness_trace"]
