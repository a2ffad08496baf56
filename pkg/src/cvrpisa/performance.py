"""Primal gap, primal integral and "good performance" labels."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class TrajectoryError(ValueError):
    pass


def primal_gap(value: float | None, bks: float) -> float:
    """Scale-free gap of an incumbent to the best known solution, in [0, 1]."""
    if not math.isfinite(bks):
        raise ValueError("bks must be finite")
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return 1.0
    if value == bks == 0:
        return 0.0
    if value * bks < 0:
        return 1.0
    return abs(value - bks) / max(abs(value), abs(bks))


@dataclass(frozen=True)
class Trajectory:
    """Incumbent values over time for one (instance, algorithm) run.

    ``times`` strictly increase within [0, time_limit]; ``values`` never
    increase (minimization).
    """

    times: tuple[float, ...]
    values: tuple[float, ...]
    time_limit: float
    bks: float

    def __post_init__(self):
        t = tuple(float(x) for x in self.times)
        v = tuple(float(x) for x in self.values)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if len(t) != len(v):
            raise TrajectoryError("times and values differ in length")
        if not self.time_limit > 0:
            raise TrajectoryError("time limit must be positive")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise TrajectoryError("times must be strictly increasing")
        if t and (t[0] < 0 or t[-1] > self.time_limit):
            raise TrajectoryError("times must lie within [0, time_limit]")
        if any(b > a for a, b in zip(v, v[1:])):
            raise TrajectoryError("incumbent values must not increase")


def primal_integral(traj: Trajectory) -> float:
    """Time-normalized integral of the primal gap step function.

    The gap is 1 until the first incumbent; the last incumbent holds until the
    time limit. An empty trajectory scores 1.
    """
    if not traj.times:
        return 1.0
    T = traj.time_limit
    total = traj.times[0] * 1.0
    ends = traj.times[1:] + (T,)
    for t0, t1, v in zip(traj.times, ends, traj.values):
        total += primal_gap(v, traj.bks) * (t1 - t0)
    return total / T


def label_good(y, epsilon: float, maximize: bool = False) -> np.ndarray:
    """Boolean matrix of "good" entries; the threshold itself counts as good."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    y = np.asarray(y, dtype=float)
    return y >= epsilon if maximize else y <= epsilon


def read_trajectory(path: str | Path, bks: float, time_limit: float) -> Trajectory:
    """Read a ``t,value`` CSV into a trajectory."""
    times, values = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"t", "value"} <= set(reader.fieldnames):
            raise TrajectoryError(f"{path}: header must contain t,value")
        for row in reader:
            try:
                times.append(float(row["t"]))
                values.append(float(row["value"]))
            except (TypeError, ValueError):
                raise TrajectoryError(f"{path}: bad row {row}") from None
    return Trajectory(tuple(times), tuple(values), time_limit, bks)
