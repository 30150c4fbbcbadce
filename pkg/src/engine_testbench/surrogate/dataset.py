"""Latin-hypercube datasets and their CSV form.

CSV layout: a first comment line ``# {json header}`` holding preset, seed
and feature names, then a header row of feature names plus ``target``.
"""

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .oracles import oracle


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    preset: str
    seed: int
    names: tuple

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] < 1 or self.y.shape != (self.X.shape[0],):
            raise ConfigError(f"dataset needs N >= 1 rows with matching targets, got {self.X.shape}, {self.y.shape}")

    @property
    def x_min(self):
        return self.X.min(axis=0)

    @property
    def x_max(self):
        return self.X.max(axis=0)

    def __len__(self):
        return self.X.shape[0]


def latin_hypercube(n, lower, upper, rng):
    """One uniform point per stratum in each dimension, strata paired by random permutation."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    d = lower.size
    u = np.empty((n, d))
    for j in range(d):
        u[:, j] = (rng.permutation(n) + rng.uniform(size=n)) / n
    return lower + u * (upper - lower)


def gen_dataset(spec, n, seed=0):
    if isinstance(spec, str):
        spec = oracle(spec)
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    X = latin_hypercube(n, spec.lower, spec.upper, np.random.default_rng(seed))
    y = np.array([spec(x) for x in X])
    return Dataset(X, y, spec.preset, int(seed), spec.names)


def format_dataset(ds):
    buf = io.StringIO()
    buf.write("# " + json.dumps({"preset": ds.preset, "seed": ds.seed, "names": list(ds.names)}, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(ds.names) + ["target"])
    for row, t in zip(ds.X, ds.y):
        w.writerow([repr(float(v)) for v in row] + [repr(float(t))])
    return buf.getvalue()


def read_dataset(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read dataset {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ConfigError(f"{path}: missing dataset header line")
    meta = json.loads(lines[0][2:])
    rows = list(csv.reader(lines[1:]))
    if rows[0] != list(meta["names"]) + ["target"]:
        raise ConfigError(f"{path}: column header does not match metadata")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r])
    return Dataset(data[:, :-1], data[:, -1], meta["preset"], int(meta["seed"]), tuple(meta["names"]))
