"""Multi-trial method comparison on the cart-pole randomization domain.

Produces the pinned CSV artifacts:

  raw.csv      method,trial,step,cost_estimate,grad_norm,k_norm,infeasible_events
  summary.csv  method,step,p25,p50,p75   (one column per requested percentile)
  final_k.csv  method,trial,k_norm

plus summary.json (percentile curves and the log-spaced final-gain
histogram), errors.csv (only when trials failed), config_echo.json, and
timing.json.  Floats are written with repr (shortest round-trip form) and
rows are fully ordered, so for a fixed config the CSV and JSON artifacts
are byte-identical across runs and worker counts; wall-clock measurements
live in timing.json only.
"""

from __future__ import annotations

import json
import math
import multiprocessing
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import lqr
from .anneal import discount_annealing
from .cartpole import CartpoleDomain, plant_for_length
from .config import ExperimentConfig, MethodSpec, config_to_dict
from .domains import scale_plant
from .errors import DrlqrError
from .optimizer import OptimizerConfig, RunRecord, run_mode

RAW_COLUMNS = ("method", "trial", "step", "cost_estimate", "grad_norm", "k_norm", "infeasible_events")
FINAL_K_COLUMNS = ("method", "trial", "k_norm")
ERROR_COLUMNS = ("method", "trial", "error")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def write_csv(path: Path, columns: tuple[str, ...], rows: list[tuple]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v for v in row))
    path.write_text("\n".join(lines) + "\n")


def percentile_column(p: float) -> str:
    return f"p{p:g}".replace(".", "_")


def resolve_init(cfg: ExperimentConfig) -> np.ndarray:
    """The shared initial gain; see InitSpec for the policies."""
    kind = cfg.init.kind
    n_x, n_u = 4, 1
    if kind == "zero":
        return np.zeros((n_u, n_x))
    if kind == "explicit":
        return np.asarray(cfg.init.K, dtype=float)
    if kind == "anneal":
        return discount_annealing(CartpoleDomain(cfg.domain), cfg.cost, cfg.anneal).K
    l_ref = cfg.init.l_ref
    if l_ref is None:
        l_ref = 0.5 * (cfg.domain.l_min + cfg.domain.l_max)
    nominal = plant_for_length(cfg.domain, l_ref)
    if kind == "dare_discounted":
        nominal = scale_plant(nominal, cfg.init.gamma)
    _, k_star = lqr.solve_dare(nominal, cfg.cost)
    return k_star


@dataclass
class TrialOutcome:
    method: str
    trial: int
    rows: list[tuple] = field(default_factory=list)
    k_final_norm: float = math.nan
    wall_time: float = 0.0
    error: str | None = None


def _run_trial(cfg: ExperimentConfig, method_idx: int, trial: int, k0: np.ndarray) -> TrialOutcome:
    ms = cfg.methods[method_idx]
    ocfg = OptimizerConfig(
        eta=cfg.optimizer.eta,
        steps=cfg.optimizer.steps,
        minibatch=ms.minibatch,
        mode=ms.method,
        eval_every=cfg.optimizer.eval_every,
        n_eval=cfg.optimizer.n_eval,
        seed=(cfg.seed, method_idx, trial),
        stop_on_infeasible=cfg.optimizer.stop_on_infeasible,
        grad_tol=cfg.optimizer.grad_tol,
        # Methods within a trial share evaluation draws (paired design), so
        # cross-method cost comparisons are not blurred by evaluation noise.
        eval_seed=(cfg.seed, trial),
    )
    domain = CartpoleDomain(cfg.domain)
    out = TrialOutcome(method=ms.label, trial=trial)
    try:
        record = run_mode(ms.method, k0, domain, cfg.cost, ocfg)
    except DrlqrError as exc:
        out.error = f"{type(exc).__name__}: {exc}"
        return out
    for i in range(len(record.steps)):
        out.rows.append((
            ms.label,
            trial,
            int(record.steps[i]),
            float(record.cost_estimate[i]),
            float(record.grad_norm[i]),
            float(record.k_norm[i]),
            int(record.infeasible_events[i]),
        ))
    out.k_final_norm = float(np.linalg.norm(record.K_final, 2))
    out.wall_time = record.wall_time
    return out


def _trial_star(args) -> TrialOutcome:
    return _run_trial(*args)


def summarize(raw_rows: list[tuple], percentiles: tuple[float, ...]) -> dict:
    """Percentile curves of cost_estimate over trials, per (method, step).

    Percentiles use linear interpolation between order statistics.  Rows and
    steps keep first-appearance order of the (already sorted) raw rows.
    """
    by_method: dict[str, dict[int, list[float]]] = {}
    for method, _trial, step, cost_est, *_ in raw_rows:
        by_method.setdefault(method, {}).setdefault(int(step), []).append(float(cost_est))
    out: dict = {"percentile_levels": list(percentiles), "methods": {}}
    for method, steps in by_method.items():
        step_keys = sorted(steps)
        curves = {
            percentile_column(p): [
                float(np.percentile(np.asarray(steps[s]), p)) for s in step_keys
            ]
            for p in percentiles
        }
        out["methods"][method] = {"steps": step_keys, **curves}
    return out


def log_spaced_histogram(values: list[float], bins: int) -> dict:
    """Histogram of positive finite values on log-spaced bin edges."""
    v = np.asarray([x for x in values if math.isfinite(x) and x > 0.0], dtype=float)
    if v.size == 0:
        return {"edges": [], "counts": []}
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo * (1.0 + 1e-12):
        lo, hi = lo * (1.0 - 1e-9), hi * (1.0 + 1e-9)
    edges = np.geomspace(lo, hi, bins + 1)
    counts, edges = np.histogram(v, bins=edges)
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


@dataclass
class ExperimentResult:
    out_dir: Path
    summary: dict
    errors: list[tuple]
    n_rows: int


def run_experiment(cfg: ExperimentConfig, threads: int = 0, out_dir: str | Path | None = None) -> ExperimentResult:
    """Run every (method, trial) pair, then write all artifacts.

    threads = 0 picks the CPU count; 1 runs serially.  A failed trial is
    recorded in errors.csv and excluded from the summaries; the run itself
    completes (the CLI maps a partial run to exit code 4).
    """
    t_start = time.perf_counter()
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    k0 = resolve_init(cfg)

    tasks = [(cfg, mi, trial, k0) for mi in range(len(cfg.methods)) for trial in range(cfg.trials)]
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    if workers > 1 and len(tasks) > 1:
        ctx = multiprocessing.get_context("spawn")
        with ctx.Pool(min(workers, len(tasks))) as pool:
            outcomes = pool.map(_trial_star, tasks, chunksize=1)
    else:
        outcomes = [_trial_star(t) for t in tasks]

    label_order = {m.label: i for i, m in enumerate(cfg.methods)}
    raw_rows: list[tuple] = []
    final_rows: list[tuple] = []
    error_rows: list[tuple] = []
    wall: dict[str, list[float]] = {m.label: [] for m in cfg.methods}
    for oc in outcomes:
        if oc.error is not None:
            error_rows.append((oc.method, oc.trial, oc.error.replace(",", ";")))
            continue
        raw_rows.extend(oc.rows)
        final_rows.append((oc.method, oc.trial, oc.k_final_norm))
        wall[oc.method].append(oc.wall_time)

    raw_rows.sort(key=lambda r: (label_order[r[0]], r[1], r[2]))
    final_rows.sort(key=lambda r: (label_order[r[0]], r[1]))
    error_rows.sort(key=lambda r: (label_order[r[0]], r[1]))

    summary = summarize(raw_rows, cfg.percentiles)
    for m in cfg.methods:
        finals = [r[2] for r in final_rows if r[0] == m.label]
        if m.label in summary["methods"]:
            summary["methods"][m.label]["final_k_hist"] = log_spaced_histogram(finals, cfg.hist_bins)

    write_csv(out / "raw.csv", RAW_COLUMNS, raw_rows)
    write_csv(out / "final_k.csv", FINAL_K_COLUMNS, final_rows)
    summary_cols = ("method", "step") + tuple(percentile_column(p) for p in cfg.percentiles)
    summary_rows = []
    for m in cfg.methods:
        entry = summary["methods"].get(m.label)
        if entry is None:
            continue
        for i, step in enumerate(entry["steps"]):
            summary_rows.append(
                (m.label, step) + tuple(entry[percentile_column(p)][i] for p in cfg.percentiles)
            )
    write_csv(out / "summary.csv", summary_cols, summary_rows)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    (out / "config_echo.json").write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")
    if error_rows:
        write_csv(out / "errors.csv", ERROR_COLUMNS, error_rows)
    timing = {
        "total_seconds": time.perf_counter() - t_start,
        "workers": workers,
        "per_method_mean_seconds": {
            label: (float(np.mean(ts)) if ts else None) for label, ts in wall.items()
        },
    }
    (out / "timing.json").write_text(json.dumps(timing, indent=2) + "\n")
    return ExperimentResult(out_dir=out, summary=summary, errors=error_rows, n_rows=len(raw_rows))
