"""Command-line entry point.

Subcommands:
  synth      run the configured optimizer mode for a single trial
  compare    run the full methods x trials comparison
  anneal     run discount annealing and report the gain and gamma schedule
  constants  assemble and print the theory constants for the config
  sample     draw plants from the randomization domain and dump them as JSON

Exit codes: 0 success; 2 bad flags or config; 3 numerical failure
(instability, Riccati divergence, annealing stall); 4 a comparison finished
but some trials failed (see errors.csv).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .anneal import discount_annealing
from .cartpole import CartpoleDomain, estimate_diam
from .config import ExperimentConfig, MethodSpec, config_to_dict, load_config
from .errors import ConfigError, DrlqrError
from .experiment import resolve_init, run_experiment
from .rng import make_rng
from .theory import assemble_constants

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.add_argument("--threads", type=int, default=0, help="worker processes; 0 = cpu count")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="csv writes the pinned CSV set; json adds raw.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drlqr", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("synth", "single-trial synthesis with the configured optimizer mode"),
        ("compare", "multi-trial method comparison"),
        ("anneal", "discount-annealing initializer"),
        ("constants", "closed-form theory constants"),
        ("sample", "draw plants from the randomization domain"),
    ):
        p = sub.add_parser(name, help=desc)
        _add_common(p)
        if name == "sample":
            p.add_argument("--n", type=int, default=10, help="number of draws")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
        cfg = dataclasses.replace(cfg, anneal=dataclasses.replace(cfg.anneal, seed=args.seed))
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.out)
    return cfg


def _emit(payload: dict, args) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if args.out is not None:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        if out.suffix != ".json":
            out.mkdir(parents=True, exist_ok=True)
            out = out / f"{args.command}.json"
        out.write_text(text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)


def _write_raw_json(cfg: ExperimentConfig, out_dir: Path) -> None:
    raw = (out_dir / "raw.csv").read_text().strip().splitlines()
    cols = raw[0].split(",")
    rows = []
    for line in raw[1:]:
        vals = line.split(",")
        rows.append({
            c: (vals[i] if c == "method" else (int(vals[i]) if c in ("trial", "step", "infeasible_events") else float(vals[i])))
            for i, c in enumerate(cols)
        })
    (out_dir / "raw.json").write_text(json.dumps(rows, indent=2) + "\n")


def _cmd_compare(cfg: ExperimentConfig, args, single: bool) -> int:
    if single:
        method = MethodSpec(
            method=cfg.optimizer.mode,
            minibatch=cfg.optimizer.minibatch,
            label=f"{cfg.optimizer.mode}_m{cfg.optimizer.minibatch}",
        )
        cfg = dataclasses.replace(cfg, trials=1, methods=(method,))
    result = run_experiment(cfg, threads=args.threads)
    if args.format == "json":
        _write_raw_json(cfg, result.out_dir)
    print(f"wrote {result.out_dir}/ ({result.n_rows} raw rows, {len(result.errors)} failed trials)")
    return EXIT_PARTIAL if result.errors else EXIT_OK


def _cmd_anneal(cfg: ExperimentConfig, args) -> int:
    result = discount_annealing(CartpoleDomain(cfg.domain), cfg.cost, cfg.anneal)
    payload = {
        "K": result.K.tolist(),
        "gamma_history": result.gamma_history,
        "stage_costs": result.stage_costs,
        "final_cost": result.final_cost,
        "stages": len(result.gamma_history),
    }
    _emit(payload, args)
    return EXIT_OK


def _cmd_constants(cfg: ExperimentConfig, args) -> int:
    domain = CartpoleDomain(cfg.domain)
    rng = make_rng(cfg.seed, 100)
    ensemble = [domain.sample(rng) for _ in range(cfg.theory.ensemble_size)]
    est = estimate_diam(cfg.domain, cfg.theory.diam_grid)
    constants = assemble_constants(
        ensemble,
        est.diam,
        est.theta_bar,
        resolve_init(cfg),
        cfg.cost,
        cfg.theory.target_eps,
        cfg.theory.delta,
        variant=cfg.theory.variant,
        degraded=cfg.theory.degraded,
    )
    _emit(constants.to_json_dict(), args)
    return EXIT_OK


def _cmd_sample(cfg: ExperimentConfig, args) -> int:
    domain = CartpoleDomain(cfg.domain)
    rng = make_rng(cfg.seed, 200)
    draws = []
    for _ in range(args.n):
        theta = domain.sample(rng)
        draws.append({"A": theta.A.tolist(), "B": theta.B.tolist()})
    _emit({"count": len(draws), "draws": draws}, args)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "synth":
            return _cmd_compare(cfg, args, single=True)
        if args.command == "compare":
            return _cmd_compare(cfg, args, single=False)
        if args.command == "anneal":
            return _cmd_anneal(cfg, args)
        if args.command == "constants":
            return _cmd_constants(cfg, args)
        if args.command == "sample":
            return _cmd_sample(cfg, args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DrlqrError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
