"""Readers for the pinned experiment CSV schemas."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

SUMMARY_COLUMNS = ("method", "step", "p25", "p50", "p75")
FINAL_K_COLUMNS = ("method", "trial", "k_norm")
RAW_COLUMNS = (
    "method",
    "trial",
    "step",
    "cost_estimate",
    "grad_norm",
    "k_norm",
    "infeasible_events",
)


class InputError(Exception):
    """A required CSV is missing or does not match its pinned schema."""


@dataclass
class Series:
    """One method's percentile curves, ordered by step."""

    steps: list[int] = field(default_factory=list)
    p25: list[float] = field(default_factory=list)
    p50: list[float] = field(default_factory=list)
    p75: list[float] = field(default_factory=list)


@dataclass
class Inputs:
    """Parsed plot inputs; method order follows first appearance in the CSV."""

    summary: dict[str, Series]
    final_k: dict[str, list[float]]


def _open_reader(path: Path) -> list[list[str]]:
    if not path.is_file():
        raise InputError(f"{path}: file not found")
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _check_header(path: Path, rows: list[list[str]], want: tuple[str, ...]) -> None:
    got = tuple(rows[0]) if rows else ()
    if got != want:
        raise InputError(f"{path}: expected header {','.join(want)}, got {','.join(got)}")


def _parse(path: Path, value: str, kind, column: str):
    try:
        return kind(value)
    except ValueError:
        raise InputError(f"{path}: bad {column} value {value!r}") from None


def read_summary(input_dir: Path) -> dict[str, Series]:
    path = Path(input_dir) / "summary.csv"
    rows = _open_reader(path)
    _check_header(path, rows, SUMMARY_COLUMNS)
    out: dict[str, Series] = {}
    for row in rows[1:]:
        if len(row) != len(SUMMARY_COLUMNS):
            raise InputError(f"{path}: row has {len(row)} fields, expected {len(SUMMARY_COLUMNS)}")
        s = out.setdefault(row[0], Series())
        s.steps.append(_parse(path, row[1], int, "step"))
        s.p25.append(_parse(path, row[2], float, "p25"))
        s.p50.append(_parse(path, row[3], float, "p50"))
        s.p75.append(_parse(path, row[4], float, "p75"))
    for s in out.values():
        order = sorted(range(len(s.steps)), key=s.steps.__getitem__)
        s.steps = [s.steps[i] for i in order]
        s.p25 = [s.p25[i] for i in order]
        s.p50 = [s.p50[i] for i in order]
        s.p75 = [s.p75[i] for i in order]
    return out


def read_final_k(input_dir: Path) -> dict[str, list[float]]:
    path = Path(input_dir) / "final_k.csv"
    rows = _open_reader(path)
    _check_header(path, rows, FINAL_K_COLUMNS)
    out: dict[str, list[float]] = {}
    for row in rows[1:]:
        if len(row) != len(FINAL_K_COLUMNS):
            raise InputError(f"{path}: row has {len(row)} fields, expected {len(FINAL_K_COLUMNS)}")
        out.setdefault(row[0], []).append(_parse(path, row[2], float, "k_norm"))
    return out


def check_raw_header(input_dir: Path) -> None:
    # raw.csv can be large; only its schema is validated
    path = Path(input_dir) / "raw.csv"
    if not path.is_file():
        raise InputError(f"{path}: file not found")
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), [])
    _check_header(path, [header], RAW_COLUMNS)


def load_inputs(input_dir: Path) -> Inputs:
    """Validate all three schemas and parse the two the panels draw from."""
    input_dir = Path(input_dir)
    check_raw_header(input_dir)
    return Inputs(summary=read_summary(input_dir), final_k=read_final_k(input_dir))
