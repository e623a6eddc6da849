"""Charts from evolution metrics CSVs.

A pure CSV consumer: reads one metrics file per trial
(generation,best_fitness,child_fitness,num_entities,termination), plots the
across-trial mean with a shaded min/max band, and writes a PNG.  It never
imports or invokes the simulator.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

EXPECTED_HEADER = ["generation", "best_fitness", "child_fitness", "num_entities", "termination"]


class MetricsError(ValueError):
    pass


@dataclass
class TrialSeries:
    trial: str
    generations: list[int]
    columns: dict[str, list[str]]

    def floats(self, column: str) -> list[float]:
        return [float(v) for v in self.columns[column]]


def load_trial(path: Path) -> TrialSeries:
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or rows[0] != EXPECTED_HEADER:
        raise MetricsError(f"{path}: expected header {','.join(EXPECTED_HEADER)}")
    body = rows[1:]
    if not body:
        raise MetricsError(f"{path}: no data rows")
    generations = [int(r[0]) for r in body]
    if generations != list(range(len(body))):
        raise MetricsError(f"{path}: generations must run consecutively from 0")
    columns = {name: [r[i] for r in body] for i, name in enumerate(EXPECTED_HEADER)}
    return TrialSeries(path.stem, generations, columns)


def load_trials(paths: list[Path]) -> list[TrialSeries]:
    trials = [load_trial(Path(p)) for p in paths]
    lengths = {len(t.generations) for t in trials}
    if len(lengths) > 1:
        raise MetricsError(f"trials disagree on row count: {sorted(lengths)}")
    return trials


def aggregate(trials: list[TrialSeries], column: str) -> tuple[list[float], list[float], list[float]]:
    """Per-generation (mean, min, max) of a numeric column across trials."""
    series = [t.floats(column) for t in trials]
    mean, lo, hi = [], [], []
    for values in zip(*series):
        mean.append(sum(values) / len(values))
        lo.append(min(values))
        hi.append(max(values))
    return mean, lo, hi


def _plot_bands(trials: list[TrialSeries], columns: list[str], ylabel: str, out_path: Path) -> None:
    generations = trials[0].generations
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for column in columns:
        mean, lo, hi = aggregate(trials, column)
        (line,) = ax.plot(generations, mean, label=column)
        ax.fill_between(generations, lo, hi, color=line.get_color(), alpha=0.2)
    ax.set_xlabel("generation")
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def plot_fitness(csv_paths: list[Path], out_path: Path) -> None:
    """Mean best and child fitness with min/max bands across trials."""
    _plot_bands(load_trials(csv_paths), ["best_fitness", "child_fitness"],
                "best_fitness / child_fitness", Path(out_path))


def plot_entities(csv_paths: list[Path], out_path: Path) -> None:
    """Mean entity count with a min/max band across trials."""
    _plot_bands(load_trials(csv_paths), ["num_entities"], "num_entities", Path(out_path))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fortress-plot",
                                     description="plot evolution metrics CSVs")
    parser.add_argument("--csv", action="append", required=True,
                        help="metrics CSV (repeat once per trial)")
    parser.add_argument("--out", required=True, help="output PNG path")
    parser.add_argument("--kind", choices=["fitness", "entities"], required=True)
    args = parser.parse_args(argv)
    try:
        if args.kind == "fitness":
            plot_fitness([Path(p) for p in args.csv], Path(args.out))
        else:
            plot_entities([Path(p) for p in args.csv], Path(args.out))
    except (MetricsError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
