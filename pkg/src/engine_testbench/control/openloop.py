"""Piecewise-linear valve schedules."""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError


@dataclass
class Schedule:
    knots: np.ndarray   # (k,) times, non-decreasing
    values: np.ndarray  # (k, 3) valve positions

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float).ravel()
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.knots.size == 0 or self.values.shape[0] != self.knots.size:
            raise ConfigError("schedule needs one value row per knot")
        if np.any(np.diff(self.knots) < 0):
            raise ConfigError("schedule knots must be sorted")
        if np.any(self.values < 0) or np.any(self.values > 1):
            raise ConfigError("scheduled valve positions must lie in [0, 1]")

    def to_dict(self):
        return {"knots": self.knots.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["knots"], d["values"])


def open_loop(schedule, t):
    """Interpolated command at time ``t``; constant outside the knot range."""
    return np.array([np.interp(t, schedule.knots, schedule.values[:, j])
                     for j in range(schedule.values.shape[1])])


def ramp_schedule(scenario):
    """Baseline: at each reference change move linearly to the next nominal
    positions over ``scenario.ramp_time`` seconds.

    From rest the first ramp starts at closed valves.
    """
    if scenario.nominal_valves is None:
        raise ConfigError(f"scenario {scenario.name!r} defines no nominal valve positions")
    rows = scenario.nominal_valves
    if scenario.initial == "rest":
        knots, values = [0.0], [[0.0, 0.0, 0.0]]
    else:
        knots, values = [0.0], [list(scenario.initial)]
    for seg, row in zip(scenario.segments, rows):
        knots += [seg.t, seg.t + scenario.ramp_time]
        values += [values[-1], row]
    return Schedule(knots, values)
