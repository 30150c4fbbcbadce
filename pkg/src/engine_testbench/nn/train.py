"""Mini-batch regression training."""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingError, ConfigError
from .mlp import init_mlp, gradient, forward
from .optim import adam_init, adam_update


@dataclass
class TrainHyper:
    epochs: int = 200
    batch_size: int = 64
    lr: float = 1e-3
    lr_final: float = None  # cosine decay from lr to lr_final when set
    val_split: float = 0.2
    seed: int = 0
    hidden_activation: str = "tanh"
    output_activation: str = "identity"


@dataclass
class TrainReport:
    epochs: int
    train_loss: float
    val_loss: float
    holdout_mpe: float  # percent
    epoch_seconds: float = field(default=0.0, compare=False)

    def to_dict(self):
        return {"epochs": self.epochs, "train_loss": self.train_loss, "val_loss": self.val_loss,
                "holdout_mpe": self.holdout_mpe, "epoch_seconds": self.epoch_seconds}


def mean_percentage_error(pred, target):
    pred = np.asarray(pred, dtype=float).ravel()
    target = np.asarray(target, dtype=float).ravel()
    return float(100.0 * np.mean(np.abs(pred - target) / np.maximum(np.abs(target), 1e-12)))


def _norm_stats(A):
    shift = A.mean(axis=0)
    scale = A.std(axis=0)
    scale[scale <= 0] = 1.0
    return shift, scale


def split_indices(n, val_split, seed):
    if not 0.0 < val_split < 1.0:
        raise ConfigError(f"validation split must lie in (0, 1), got {val_split}")
    perm = np.random.default_rng(seed).permutation(n)
    n_val = max(1, int(round(n * val_split)))
    return perm[n_val:], perm[:n_val]


def train_regression(X, Y, hidden=(64, 64), hyper=None, params=None):
    """Fit an MLP to ``(X, Y)`` by Adam on the mean-squared error.

    Returns ``(params, report)``. Deterministic for a fixed ``hyper.seed``.
    Pass ``params`` to continue from existing weights (their normalization
    is kept).
    """
    hyper = hyper or TrainHyper()
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise TrainingError(f"inconsistent dataset shapes {X.shape} and {Y.shape}")
    if X.shape[0] < 10:
        raise TrainingError(f"need at least 10 samples, got {X.shape[0]}")
    tr, va = split_indices(X.shape[0], hyper.val_split, hyper.seed)
    Xtr, Ytr, Xva, Yva = X[tr], Y[tr], X[va], Y[va]

    if params is None:
        params = init_mlp(
            [X.shape[1], *hidden, Y.shape[1]], seed=hyper.seed,
            hidden_activation=hyper.hidden_activation, output_activation=hyper.output_activation,
            input_norm=_norm_stats(Xtr), output_norm=_norm_stats(Ytr),
        )
    opt = adam_init(params)
    rng = np.random.default_rng(hyper.seed + 1)
    n = Xtr.shape[0]
    bs = min(hyper.batch_size, n)
    # the loss is taken on standardized targets so the learning rate is scale-free
    out_scale2 = params.output_scale**2
    t0 = time.perf_counter()
    steps_per_epoch = math.ceil(n / bs)
    total = hyper.epochs * steps_per_epoch
    step = 0
    for _ in range(hyper.epochs):
        perm = rng.permutation(n)
        for k in range(0, n, bs):
            idx = perm[k:k + bs]
            loss, g = gradient(params, Xtr[idx], Ytr[idx])
            if not math.isfinite(loss):
                raise TrainingError("non-finite training loss")
            g = type(g)(tuple(w / out_scale2.mean() for w in g.weights),
                        tuple(b / out_scale2.mean() for b in g.biases))
            lr = hyper.lr
            if hyper.lr_final is not None:
                lr = hyper.lr_final + 0.5 * (hyper.lr - hyper.lr_final) * (1 + math.cos(math.pi * step / total))
            params, opt = adam_update(params, g, opt, lr)
            step += 1
    elapsed = time.perf_counter() - t0

    pred_tr = forward(params, Xtr)
    pred_va = forward(params, Xva)
    train_loss = float(np.mean((pred_tr - Ytr) ** 2))
    val_loss = float(np.mean((pred_va - Yva) ** 2))
    if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
        raise TrainingError("non-finite loss after training")
    report = TrainReport(
        epochs=hyper.epochs, train_loss=train_loss, val_loss=val_loss,
        holdout_mpe=mean_percentage_error(pred_va, Yva),
        epoch_seconds=elapsed / max(hyper.epochs, 1),
    )
    return params, report
