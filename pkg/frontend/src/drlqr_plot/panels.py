"""The three figure panels.

Each panel plots parsed CSV values directly; the only arithmetic here is
axis scaling and histogram binning.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from drlqr_plot.io import InputError, Inputs, Series, load_inputs

PANELS = ("traj", "zoom", "hist")


@dataclass(frozen=True)
class PlotSpec:
    input_dir: Path
    out: Path
    panels: tuple[str, ...] = PANELS
    log_y: bool = True

    def __post_init__(self):
        unknown = [p for p in self.panels if p not in PANELS]
        if unknown:
            raise InputError(f"unknown panel(s) {','.join(unknown)}; choose from {','.join(PANELS)}")
        if not self.panels:
            raise InputError("at least one panel is required")


def zoom_methods(labels) -> list[str]:
    """The headline comparison pair: the last dr-prefixed label against the
    sa-prefixed ones.  Falls back to all labels when the prefixes are absent.
    """
    labels = list(labels)
    dr = [l for l in labels if l.startswith("dr")]
    sa = [l for l in labels if l.startswith("sa")]
    if not dr or not sa:
        return labels
    return [dr[-1]] + sa


def _banded(ax, summary: dict[str, Series], methods, log_y: bool) -> None:
    for method in methods:
        s = summary[method]
        (line,) = ax.plot(s.steps, s.p50, label=method)
        ax.fill_between(s.steps, s.p25, s.p75, color=line.get_color(), alpha=0.25, linewidth=0)
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("cost estimate")
    ax.legend()


def traj_panel(summary: dict[str, Series], log_y: bool = True):
    """Median line with a p25-p75 band per method, over the full step range."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    _banded(ax, summary, list(summary), log_y)
    ax.set_title("cost percentiles by method")
    return fig, ax


def zoom_panel(summary: dict[str, Series], log_y: bool = True):
    """The dr-vs-sa pair over the second half of the step range."""
    methods = zoom_methods(summary)
    cropped: dict[str, Series] = {}
    for m in methods:
        s = summary[m]
        cut = len(s.steps) // 2
        cropped[m] = Series(steps=s.steps[cut:], p25=s.p25[cut:], p50=s.p50[cut:], p75=s.p75[cut:])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    _banded(ax, cropped, methods, log_y)
    ax.set_title("final-phase comparison")
    return fig, ax


def hist_panel(final_k: dict[str, list[float]], bins: int = 24):
    """Distribution of final gain norms on a log-scaled axis."""
    values = [v for vs in final_k.values() for v in vs if np.isfinite(v) and v > 0.0]
    if not values:
        raise InputError("final_k.csv: no positive finite gain norms to bin")
    lo, hi = min(values), max(values)
    if lo == hi:
        # degenerate spread still renders: pad to a visible bin
        lo, hi = lo * 0.99, hi * 1.01
    edges = np.geomspace(lo, hi, bins + 1)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for method, vs in final_k.items():
        kept = [v for v in vs if np.isfinite(v) and v > 0.0]
        ax.hist(kept, bins=edges, alpha=0.55, label=method)
    ax.set_xscale("log")
    ax.set_xlabel("final gain spectral norm")
    ax.set_ylabel("trials")
    ax.set_title("final gain norm distribution")
    ax.legend()
    return fig, ax


def render(spec: PlotSpec) -> list[Path]:
    """Write one image per requested panel; returns the paths."""
    inputs = load_inputs(spec.input_dir)
    written = []
    for panel in spec.panels:
        if panel == "traj":
            fig, _ = traj_panel(inputs.summary, spec.log_y)
        elif panel == "zoom":
            fig, _ = zoom_panel(inputs.summary, spec.log_y)
        else:
            fig, _ = hist_panel(inputs.final_k)
        path = Path(f"{spec.out}_{panel}.png")
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def traj_dump(inputs: Inputs) -> dict:
    """The exact data series the traj panel draws, for diffing against the
    summary CSV."""
    return {
        "traj": {
            method: {"steps": s.steps, "p25": s.p25, "p50": s.p50, "p75": s.p75}
            for method, s in inputs.summary.items()
        }
    }
