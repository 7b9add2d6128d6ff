"""Experiment configuration: JSON in, validated dataclasses out.

Every field has a default; config_to_dict materializes them all so a saved
config re-loads to an identical experiment (round-trip stable).  Unknown
keys and malformed values raise ConfigError naming the offending field.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .anneal import AnnealConfig
from .cartpole import CartpoleParams, DomainSpec
from .errors import ConfigError
from .lqr import CostSpec
from .optimizer import MODES, OptimizerConfig

INIT_KINDS = ("zero", "dare_nominal", "dare_discounted", "anneal", "explicit")


@dataclass(frozen=True)
class MethodSpec:
    """One compared method: an optimizer mode at a given minibatch size."""

    method: str
    minibatch: int
    label: str

    def __post_init__(self):
        if self.method not in MODES:
            raise ConfigError(f"methods[].method must be one of {MODES}, got {self.method!r}")
        if self.minibatch < 1:
            raise ConfigError("methods[].minibatch must be >= 1")
        if not self.label:
            raise ConfigError("methods[].label must be nonempty")


@dataclass(frozen=True)
class InitSpec:
    """Initial-gain policy shared by all methods and trials.

    zero: K = 0 (valid only when every sampled plant is open-loop stable).
    dare_nominal: exact LQR gain of the reference-length plant.
    dare_discounted: exact LQR gain of the reference-length plant scaled by
      sqrt(gamma); gamma < 1 gives a weaker gain with a larger initial cost,
      and an off-center l_ref makes the ensemble members pull in genuinely
      different directions from the start.
    anneal: run discount annealing once and share the resulting gain.
    explicit: K given elementwise.

    l_ref defaults to the middle of the length range.
    """

    kind: str = "dare_nominal"
    gamma: float = 0.9
    l_ref: float | None = None
    K: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise ConfigError(f"init.kind must be one of {INIT_KINDS}, got {self.kind!r}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("init.gamma must lie in (0, 1]")
        if self.l_ref is not None and self.l_ref <= 0.0:
            raise ConfigError("init.l_ref must be positive when given")
        if self.kind == "explicit" and self.K is None:
            raise ConfigError("init.kind = explicit requires init.K")


@dataclass(frozen=True)
class TheoryConfig:
    """Inputs for assembling the theory constants from a sampled ensemble."""

    target_eps: float = 1.0
    delta: float = 0.05
    variant: str = "main"
    degraded: bool = True
    diam_grid: int = 100
    ensemble_size: int = 100

    def __post_init__(self):
        if self.target_eps <= 0.0 or not 0.0 < self.delta < 1.0:
            raise ConfigError("theory.target_eps must be > 0 and theory.delta in (0, 1)")
        if self.variant not in ("main", "appendix"):
            raise ConfigError("theory.variant must be 'main' or 'appendix'")
        if self.diam_grid < 2 or self.ensemble_size < 1:
            raise ConfigError("theory.diam_grid must be >= 2 and theory.ensemble_size >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    domain: DomainSpec
    cost: CostSpec
    optimizer: OptimizerConfig
    methods: tuple[MethodSpec, ...]
    init: InitSpec
    anneal: AnnealConfig
    theory: TheoryConfig
    seed: int = 0
    trials: int = 100
    percentiles: tuple[float, ...] = (25.0, 50.0, 75.0)
    hist_bins: int = 40
    output_dir: str = "out"

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.hist_bins < 1:
            raise ConfigError("hist_bins must be >= 1")
        if not self.percentiles or any(not 0.0 <= p <= 100.0 for p in self.percentiles):
            raise ConfigError("percentiles must be a nonempty list within [0, 100]")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ConfigError("methods[].label values must be unique")


def _require_keys(d: dict, allowed: set[str], where: str) -> None:
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(extra)}")


def _matrix(value: Any, shape: tuple[int, int], name: str) -> np.ndarray:
    if isinstance(value, str):
        if value == "identity":
            if shape[0] != shape[1]:
                raise ConfigError(f"{name}: identity needs a square shape, got {shape}")
            return np.eye(shape[0])
        if value == "zero":
            return np.zeros(shape)
        raise ConfigError(f"{name}: unknown matrix keyword {value!r}")
    if isinstance(value, (int, float)):
        if shape[0] != shape[1]:
            raise ConfigError(f"{name}: scalar fill needs a square shape, got {shape}")
        return float(value) * np.eye(shape[0])
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise ConfigError(f"{name}: expected shape {shape}, got {arr.shape}")
    return arr


def _build(cls, d: dict, where: str, **overrides):
    """Construct a (frozen) dataclass from a dict, rejecting unknown keys."""
    fields = {f.name: f for f in dataclasses.fields(cls)}
    _require_keys(d, set(fields) - set(overrides), where)
    try:
        return cls(**{**d, **overrides})
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _domain_from_dict(d: dict) -> DomainSpec:
    d = dict(d)
    kind = d.pop("kind", "cartpole")
    if kind != "cartpole":
        raise ConfigError(f"domain.kind must be 'cartpole', got {kind!r}")
    params = _build(CartpoleParams, dict(d.pop("params", {})), "domain.params")
    return _build(DomainSpec, d, "domain", base=params)


def _cost_from_dict(d: dict, n_x: int, n_u: int) -> CostSpec:
    _require_keys(d, {"Q", "R", "S", "Sigma_w"}, "cost")
    try:
        return CostSpec(
            Q=_matrix(d.get("Q", "identity"), (n_x, n_x), "cost.Q"),
            R=_matrix(d.get("R", "identity"), (n_u, n_u), "cost.R"),
            S=_matrix(d.get("S", "zero"), (n_x, n_u), "cost.S"),
            Sigma_w=_matrix(d.get("Sigma_w", "identity"), (n_x, n_x), "cost.Sigma_w"),
        )
    except ValueError as exc:
        raise ConfigError(f"cost: {exc}") from exc


def _init_from_dict(d: dict) -> InitSpec:
    d = dict(d)
    if d.get("K") is not None:
        d["K"] = tuple(tuple(float(x) for x in row) for row in d["K"])
    return _build(InitSpec, d, "init")


_TOP_KEYS = {
    "seed", "trials", "percentiles", "hist_bins", "output_dir",
    "domain", "cost", "optimizer", "methods", "init", "anneal", "theory",
}


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _require_keys(raw, _TOP_KEYS, "config")
    domain = _domain_from_dict(dict(raw.get("domain", {})))
    n_x, n_u = 4, 1
    cost = _cost_from_dict(dict(raw.get("cost", {})), n_x, n_u)
    opt_raw = dict(raw.get("optimizer", {}))
    opt_raw.setdefault("eta", 1e-3)
    opt_raw.setdefault("steps", 100)
    optimizer = _build(OptimizerConfig, opt_raw, "optimizer")
    methods_raw = raw.get("methods", None)
    if methods_raw is None:
        methods_raw = [{
            "method": optimizer.mode,
            "minibatch": optimizer.minibatch,
            "label": f"{optimizer.mode}_m{optimizer.minibatch}",
        }]
    methods = tuple(_build(MethodSpec, dict(m), f"methods[{i}]") for i, m in enumerate(methods_raw))
    return ExperimentConfig(
        domain=domain,
        cost=cost,
        optimizer=optimizer,
        methods=methods,
        init=_init_from_dict(dict(raw.get("init", {}))),
        anneal=_build(AnnealConfig, dict(raw.get("anneal", {})), "anneal"),
        theory=_build(TheoryConfig, dict(raw.get("theory", {})), "theory"),
        seed=int(raw.get("seed", 0)),
        trials=int(raw.get("trials", 100)),
        percentiles=tuple(float(p) for p in raw.get("percentiles", (25.0, 50.0, 75.0))),
        hist_bins=int(raw.get("hist_bins", 40)),
        output_dir=str(raw.get("output_dir", "out")),
    )


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Full echo with every default materialized (JSON-serializable)."""
    p = cfg.domain.base
    return {
        "seed": cfg.seed,
        "trials": cfg.trials,
        "percentiles": list(cfg.percentiles),
        "hist_bins": cfg.hist_bins,
        "output_dir": cfg.output_dir,
        "domain": {
            "kind": "cartpole",
            "l_min": cfg.domain.l_min,
            "l_max": cfg.domain.l_max,
            "dt": cfg.domain.dt,
            "seed": cfg.domain.seed,
            "params": {
                "m_c": p.m_c, "m_p": p.m_p, "l": p.l, "g": p.g,
                "mu_c": p.mu_c, "mu_p": p.mu_p, "l_hat_half": p.l_hat_half,
            },
        },
        "cost": {
            "Q": cfg.cost.Q.tolist(),
            "R": cfg.cost.R.tolist(),
            "S": cfg.cost.S.tolist(),
            "Sigma_w": cfg.cost.Sigma_w.tolist(),
        },
        "optimizer": {
            "eta": cfg.optimizer.eta,
            "steps": cfg.optimizer.steps,
            "minibatch": cfg.optimizer.minibatch,
            "mode": cfg.optimizer.mode,
            "eval_every": cfg.optimizer.eval_every,
            "n_eval": cfg.optimizer.n_eval,
            "seed": cfg.optimizer.seed if isinstance(cfg.optimizer.seed, int) else list(cfg.optimizer.seed),
            "stop_on_infeasible": cfg.optimizer.stop_on_infeasible,
            "grad_tol": cfg.optimizer.grad_tol,
            "eval_seed": (
                cfg.optimizer.eval_seed
                if cfg.optimizer.eval_seed is None or isinstance(cfg.optimizer.eval_seed, int)
                else list(cfg.optimizer.eval_seed)
            ),
        },
        "methods": [
            {"method": m.method, "minibatch": m.minibatch, "label": m.label}
            for m in cfg.methods
        ],
        "init": {
            "kind": cfg.init.kind,
            "gamma": cfg.init.gamma,
            "l_ref": cfg.init.l_ref,
            "K": None if cfg.init.K is None else [list(row) for row in cfg.init.K],
        },
        "anneal": {
            "gamma_tol": cfg.anneal.gamma_tol,
            "inner_budget": cfg.anneal.inner_budget,
            "inner_eps": cfg.anneal.inner_eps,
            "max_stages": cfg.anneal.max_stages,
            "ensemble_size": cfg.anneal.ensemble_size,
            "seed": cfg.anneal.seed if isinstance(cfg.anneal.seed, int) else list(cfg.anneal.seed),
            "inner_eta": cfg.anneal.inner_eta,
            "inner_minibatch": cfg.anneal.inner_minibatch,
            "stage_retries": cfg.anneal.stage_retries,
            "n_validate": cfg.anneal.n_validate,
        },
        "theory": {
            "target_eps": cfg.theory.target_eps,
            "delta": cfg.theory.delta,
            "variant": cfg.theory.variant,
            "degraded": cfg.theory.degraded,
            "diam_grid": cfg.theory.diam_grid,
            "ensemble_size": cfg.theory.ensemble_size,
        },
    }


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")
