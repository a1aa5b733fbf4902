"""Run records and their CSV/JSON persistence."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

TRAJECTORY_HEADER = ("t", "coalition", "player", "action")
SWEEP_HEADER = ("t", "alpha", "seed", "nash_gap", "tracking_error")


@dataclass
class StepRecord:
    t: int
    x: np.ndarray
    tracking_error: float
    consensus_errors: tuple[float, ...]
    conservation_residual: float
    nash_gap: Optional[float] = None


@dataclass
class RunRecord:
    """Recorded trajectory of one seeker run.

    ``series`` is strictly increasing in ``t``; ``summary`` is filled in by
    the seeker when the run ends.
    """

    metadata: dict
    series: list[StepRecord] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def append(self, rec: StepRecord) -> None:
        if self.series and rec.t <= self.series[-1].t:
            raise ValueError(f"record times must increase: {rec.t} after {self.series[-1].t}")
        self.series.append(rec)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.series])

    @property
    def actions(self) -> np.ndarray:
        return np.array([r.x for r in self.series])

    @property
    def gaps(self) -> np.ndarray:
        return np.array([np.nan if r.nash_gap is None else r.nash_gap for r in self.series])

    @property
    def tracking_errors(self) -> np.ndarray:
        return np.array([r.tracking_error for r in self.series])

    @property
    def conservation_residuals(self) -> np.ndarray:
        return np.array([r.conservation_residual for r in self.series])

    def write_trajectory_csv(self, path, coordinates) -> None:
        """Long-format action trajectory.

        ``coordinates`` lists ``(coalition, player)`` for every global
        coordinate, in order.
        """
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRAJECTORY_HEADER)
            for rec in self.series:
                for (i, j), v in zip(coordinates, rec.x):
                    w.writerow((rec.t, i, j, repr(float(v))))

    def write_summary_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary, indent=2, sort_keys=True) + "\n")


def read_trajectory_csv(path) -> list[tuple[int, int, int, float]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = tuple(next(r))
        if header != TRAJECTORY_HEADER:
            raise ValueError(f"unexpected trajectory header {header}")
        return [(int(t), int(i), int(j), float(v)) for t, i, j, v in r]


def write_sweep_csv(path, rows) -> None:
    """``rows`` are ``(t, alpha, seed, nash_gap, tracking_error)`` tuples."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_HEADER)
        for t, alpha, seed, gap, terr in rows:
            w.writerow((t, repr(float(alpha)), seed, repr(float(gap)), repr(float(terr))))


def read_sweep_csv(path) -> list[tuple[int, float, int, float, float]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = tuple(next(r))
        if header != SWEEP_HEADER:
            raise ValueError(f"unexpected sweep header {header}")
        return [(int(t), float(a), int(s), float(g), float(e)) for t, a, s, g, e in r]
