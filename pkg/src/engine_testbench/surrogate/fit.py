"""Surrogate training and guarded prediction."""

import time
from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from ..nn import TrainHyper, forward, train_regression
from ..nn.train import split_indices

DEFAULT_HIDDEN = (64, 64, 64, 64)


@dataclass
class GuardedPrediction:
    value: float
    flags: np.ndarray  # per-feature out-of-range booleans

    @property
    def extrapolating(self):
        return bool(self.flags.any())


def default_hyper(seed=0):
    return TrainHyper(epochs=40, batch_size=64, lr=2e-3, lr_final=5e-5, val_split=0.2, seed=seed)


def fit_surrogate(ds, hidden=DEFAULT_HIDDEN, hyper=None):
    """Train an MLP on ``ds``. Returns ``(params, report)``; ``report`` is a
    dict with the training summary, holdout MAE and mean per-point latency."""
    hyper = hyper or default_hyper()
    params, rep = train_regression(ds.X, ds.y, hidden, hyper)
    _, va = split_indices(len(ds), hyper.val_split, hyper.seed)
    pred = forward(params, ds.X[va])[:, 0]
    report = rep.to_dict()
    report["holdout_mae"] = float(np.mean(np.abs(pred - ds.y[va])))
    report["latency_s"] = point_latency(params, ds.X[va][:200])
    return params, report


def point_latency(params, X):
    """Mean wall time of single-point forward passes."""
    t0 = time.perf_counter()
    for x in X:
        forward(params, x)
    return (time.perf_counter() - t0) / max(len(X), 1)


def range_flags(x_min, x_max, x):
    x = np.asarray(x, dtype=float)
    if x.shape != np.shape(x_min):
        raise ShapeError(f"expected {np.shape(x_min)[0]} features, got shape {x.shape}")
    return (x < x_min) | (x > x_max)


def predict_guarded(params, x_min, x_max, x):
    """Forward pass plus closed-interval range flags against training extrema."""
    flags = range_flags(np.asarray(x_min, dtype=float), np.asarray(x_max, dtype=float), x)
    return GuardedPrediction(float(forward(params, np.asarray(x, dtype=float))[0]), flags)


def beyond_box(spec, n, frac=0.2, seed=0):
    """Points inside the box except one random coordinate, pushed above its
    upper bound by up to ``frac`` of the range (the upper side keeps every
    oracle input physical)."""
    rng = np.random.default_rng(seed)
    lo, hi = np.array(spec.lower), np.array(spec.upper)
    X = lo + rng.uniform(size=(n, spec.dim)) * (hi - lo)
    j = rng.integers(0, spec.dim, size=n)
    X[np.arange(n), j] = hi[j] + rng.uniform(0.05, 1.0, size=n) * frac * (hi - lo)[j]
    return X


def extrapolation_mae(params, spec, n=2000, frac=0.2, seed=0):
    X = beyond_box(spec, n, frac, seed)
    y = np.array([spec(x, strict=False) for x in X])
    return float(np.mean(np.abs(forward(params, X)[:, 0] - y)))
