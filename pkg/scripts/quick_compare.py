#!/usr/bin/env python3
"""Seconds-scale smoke run of the method comparison on a narrow length range.

Useful while iterating: same pipeline and artifacts as the full experiment,
two trials per method, short traces.
"""

import argparse
import sys

from drlqr.config import config_from_dict
from drlqr.experiment import run_experiment

QUICK = {
    "seed": 7,
    "trials": 2,
    "domain": {"l_min": 0.45, "l_max": 0.55, "dt": 0.02},
    "optimizer": {"eta": 5e-8, "steps": 50, "eval_every": 10, "n_eval": 50},
    "methods": [
        {"method": "dr_sgd", "minibatch": 4, "label": "dr_sgd_m4"},
        {"method": "sa_fixed", "minibatch": 4, "label": "sa_fixed_m4"},
    ],
    "init": {"kind": "dare_nominal"},
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/quick_compare")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    raw = dict(QUICK)
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = config_from_dict(raw)
    result = run_experiment(cfg, threads=1, out_dir=args.out)
    print(f"wrote {result.n_rows} raw rows to {result.out_dir}")
    for label, entry in result.summary["methods"].items():
        print(f"  {label}: final p50 {entry['p50'][-1]:.3f}")
    return 1 if result.errors else 0


if __name__ == "__main__":
    sys.exit(main())
