"""Linear soft-margin SVM trained by deterministic subgradient descent."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingError, ConfigError, ShapeError


@dataclass
class SvmModel:
    w: np.ndarray
    b: float
    lam: float
    shift: np.ndarray
    scale: np.ndarray
    objective_history: list = field(default_factory=list, compare=False)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.shift = np.asarray(self.shift, dtype=float)
        self.scale = np.asarray(self.scale, dtype=float)
        if not np.all(np.isfinite(self.w)) or np.any(self.scale <= 0):
            raise ConfigError("SVM weights must be finite and scales positive")

    def to_dict(self):
        return {"w": self.w.tolist(), "b": float(self.b), "lambda": float(self.lam),
                "shift": self.shift.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["w"], d["b"], d["lambda"], d["shift"], d["scale"])


def objective(w, b, Xn, y, lam):
    return float(lam * w @ w + np.mean(np.maximum(0.0, 1.0 - y * (Xn @ w + b))))


def best_bias(scores, y):
    """Exact minimizer of ``mean(max(0, 1 - y*(scores + b)))`` over ``b``.

    The loss is convex and piecewise linear with kinks at ``y - scores``;
    the midpoint of the minimizing interval is returned, so flipping every
    label (and score) flips the result.
    """
    pos = np.sort(1.0 - scores[y > 0])   # positive i is active for b < pos_i
    neg = np.sort(-1.0 - scores[y < 0])  # negative i is active for b > neg_i
    kinks = np.sort(np.concatenate((pos, neg)))
    # slope just right / just left of each kink (up to the factor 1/n)
    right = np.searchsorted(neg, kinks, "right") - (pos.size - np.searchsorted(pos, kinks, "right"))
    left = np.searchsorted(neg, kinks, "left") - (pos.size - np.searchsorted(pos, kinks, "left"))
    lo = kinks[np.argmax(right >= 0)]
    hi = kinks[kinks.size - 1 - np.argmax((left <= 0)[::-1])]
    return 0.5 * (lo + hi)


def svm_train(X, y, lam=1e-3, epochs=500, seed=0, batch_size=None):
    """Minimize ``lam*|w|^2 + mean hinge`` by subgradient steps of size
    ``1/(lam*t)`` on ``w``.

    The unregularized bias is set to its exact minimizer after every step.
    Features are standardized with statistics stored in the model. Each
    epoch runs over mini-batches in a seeded order (one full batch by
    default). The returned model is the Polyak average of the ``w``
    iterates with its optimal bias, taken at the epoch whose average had
    the lowest objective; the objective history is therefore
    non-increasing.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ShapeError(f"X {X.shape} and y {y.shape} do not match")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise TrainingError("labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise TrainingError("training data contains a single class")
    if not lam > 0:
        raise ConfigError("lambda must be positive")
    shift = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale <= 0] = 1.0
    Xn = (X - shift) / scale
    n, d = Xn.shape
    bs = n if batch_size is None else min(int(batch_size), n)
    rng = np.random.default_rng(seed)
    radius = 1.0 / np.sqrt(lam)  # the optimum satisfies lam*|w|^2 <= 1

    w, b = np.zeros(d), 0.0
    w_sum, t = np.zeros(d), 0
    best = (np.zeros(d), 0.0, objective(np.zeros(d), 0.0, Xn, y, lam))
    history = []
    for _ in range(epochs):
        order = rng.permutation(n) if bs < n else np.arange(n)
        for k in range(0, n, bs):
            idx = order[k:k + bs]
            t += 1
            eta = 1.0 / (lam * t)
            xb, yb = Xn[idx], y[idx]
            viol = yb * (xb @ w + b) < 1.0
            gw = 2.0 * lam * w - (yb[viol, None] * xb[viol]).sum(axis=0) / len(idx)
            w = w - eta * gw
            norm = np.sqrt(w @ w)
            if norm > radius:
                w = w * (radius / norm)
            b = best_bias(xb @ w, yb)
            w_sum += w
        w_avg = w_sum / t
        b_avg = best_bias(Xn @ w_avg, y)
        j = objective(w_avg, b_avg, Xn, y, lam)
        if j <= best[2]:
            best = (w_avg.copy(), float(b_avg), j)
        history.append(best[2])
    return SvmModel(best[0], best[1], lam, shift, scale, history)


def svm_score(model, X):
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != model.w.size:
        raise ShapeError(f"expected {model.w.size} features, got {X.shape[-1]}")
    return ((X - model.shift) / model.scale) @ model.w + model.b


def svm_predict(model, x):
    """Returns ``(score, label)``; a zero score is labeled +1."""
    s = svm_score(model, x)
    return s, np.where(s >= 0.0, 1, -1)
