#!/usr/bin/env python3
"""Run the reduced-scale cart-pole comparison and print the headline numbers.

Writes the CSV/JSON artifacts to the config's output_dir (or --out) and, when
the drlqr-plot package is installed, renders the three figure panels next to
them.  Serial runtime is a few minutes; pass --threads to parallelize.
"""

import argparse
import csv
import importlib.util
import subprocess
import sys
from pathlib import Path

from drlqr.config import load_config
from drlqr.experiment import run_experiment

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=ROOT / "configs" / "desk_scale.json")
    parser.add_argument("--out", default=None, help="output directory (default: config output_dir)")
    parser.add_argument("--threads", type=int, default=0, help="0 picks the CPU count")
    args = parser.parse_args(argv)

    cfg = load_config(args.config)
    result = run_experiment(cfg, threads=args.threads, out_dir=args.out)
    out = result.out_dir
    print(f"wrote {result.n_rows} raw rows to {out}")
    if result.errors:
        print(f"{len(result.errors)} trial(s) failed; see errors.csv", file=sys.stderr)

    with open(out / "summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    final_step = max(int(r["step"]) for r in rows)
    print(f"median cost estimate at step {final_step}:")
    for row in rows:
        if int(row["step"]) == final_step:
            print(f"  {row['method']:<14} {float(row['p50']):.3f}")

    if importlib.util.find_spec("drlqr_plot") is not None:
        prefix = out / "fig"
        subprocess.run(
            [sys.executable, "-m", "drlqr_plot", "--in", str(out), "--out", str(prefix)],
            check=True,
        )
    else:
        print("drlqr-plot not installed; skipping figures")
    return 1 if result.errors else 0


if __name__ == "__main__":
    sys.exit(main())
