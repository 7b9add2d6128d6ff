"""Rendering for drlqr experiment artifacts.

The experiment CLI writes three pinned CSV schemas (summary percentile
curves, final gain norms, raw per-step rows); this package turns a directory
of them into publication-style figure panels.  It never recomputes
statistics: every plotted value is read straight from the CSVs.
"""

from drlqr_plot.io import InputError, Series, load_inputs
from drlqr_plot.panels import PlotSpec, render

__all__ = ["InputError", "PlotSpec", "Series", "load_inputs", "render"]
