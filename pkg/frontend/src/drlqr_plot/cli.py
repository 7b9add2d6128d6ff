"""Command-line entry point: drlqr-plot --in <dir> --out <prefix>."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from drlqr_plot.io import InputError, load_inputs
from drlqr_plot.panels import PANELS, PlotSpec, render, traj_dump

EXIT_OK = 0
EXIT_INPUT = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drlqr-plot",
        description="Render figure panels from a drlqr experiment output directory.",
    )
    parser.add_argument("--in", dest="input_dir", required=True, help="experiment output directory")
    parser.add_argument("--out", required=True, help="image path prefix")
    parser.add_argument(
        "--panels",
        default=",".join(PANELS),
        help=f"comma-separated subset of {{{','.join(PANELS)}}} (default: all)",
    )
    parser.add_argument(
        "--dump",
        default=None,
        help="also write the traj panel's data series to this JSON path",
    )
    parser.add_argument(
        "--linear-y",
        action="store_true",
        help="linear cost axis for traj/zoom (default: logarithmic)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    panels = tuple(p.strip() for p in args.panels.split(",") if p.strip())
    try:
        spec = PlotSpec(
            input_dir=Path(args.input_dir),
            out=Path(args.out),
            panels=panels,
            log_y=not args.linear_y,
        )
        written = render(spec)
        if args.dump is not None:
            dump_path = Path(args.dump)
            dump_path.write_text(json.dumps(traj_dump(load_inputs(spec.input_dir))))
            written.append(dump_path)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
