"""Fully connected feedforward network with reverse-mode gradients.

Batches are row-major: ``X`` has shape ``(batch, n_in)`` and each layer
computes ``act(X @ W + b)``. Normalization is part of the model: inputs are
standardized with ``(x - input_shift) / input_scale`` and outputs mapped
back with ``y_hat * output_scale + output_shift``.
"""

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from ..errors import ConfigError, ShapeError

HIDDEN_ACTIVATIONS = ("tanh", "relu")
OUTPUT_ACTIVATIONS = ("identity", "tanh")


@dataclass(frozen=True, eq=False)
class MlpParams:
    layer_sizes: tuple
    weights: tuple
    biases: tuple
    hidden_activation: str = "tanh"
    output_activation: str = "identity"
    input_shift: np.ndarray = field(default=None)
    input_scale: np.ndarray = field(default=None)
    output_shift: np.ndarray = field(default=None)
    output_scale: np.ndarray = field(default=None)

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ConfigError(f"layer_sizes must list at least two positive sizes, got {sizes}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ConfigError(f"hidden_activation must be one of {HIDDEN_ACTIVATIONS}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ConfigError(f"output_activation must be one of {OUTPUT_ACTIVATIONS}")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ShapeError("one weight matrix and bias vector per layer required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
                raise ShapeError(
                    f"layer {i}: expected W{(sizes[i], sizes[i + 1])}, b{(sizes[i + 1],)}, "
                    f"got W{w.shape}, b{b.shape}"
                )
        defaults = {
            "input_shift": np.zeros(sizes[0]), "input_scale": np.ones(sizes[0]),
            "output_shift": np.zeros(sizes[-1]), "output_scale": np.ones(sizes[-1]),
        }
        for name, default in defaults.items():
            value = getattr(self, name)
            value = default if value is None else np.asarray(value, dtype=float).copy()
            if value.shape != default.shape:
                raise ShapeError(f"{name} must have shape {default.shape}")
            object.__setattr__(self, name, value)
        if np.any(self.input_scale <= 0) or np.any(self.output_scale <= 0):
            raise ConfigError("normalization scales must be strictly positive")

    @property
    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def with_layers(self, weights, biases):
        return replace(self, weights=tuple(weights), biases=tuple(biases))


class Grads(NamedTuple):
    weights: tuple
    biases: tuple


def expected_param_count(layer_sizes):
    return sum((n_in + 1) * n_out for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]))


def init_mlp(layer_sizes, seed=0, hidden_activation="tanh", output_activation="identity",
             input_norm=None, output_norm=None, output_gain=1.0):
    """Glorot-uniform weights, zero biases.

    ``input_norm``/``output_norm`` are ``(shift, scale)`` pairs.
    ``output_gain`` rescales the last layer (small values give near-zero
    initial outputs, useful for policies).
    """
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    sizes = list(layer_sizes)
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        limit = np.sqrt(6.0 / (n_in + n_out))
        w = rng.uniform(-limit, limit, size=(n_in, n_out))
        if i == len(sizes) - 2:
            w = w * output_gain
        weights.append(w)
        biases.append(np.zeros(n_out))
    in_shift, in_scale = input_norm if input_norm is not None else (None, None)
    out_shift, out_scale = output_norm if output_norm is not None else (None, None)
    return MlpParams(
        tuple(sizes), tuple(weights), tuple(biases), hidden_activation, output_activation,
        in_shift, in_scale, out_shift, out_scale,
    )


def _act(name, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    return z


def _act_grad(name, z, a):
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0.0).astype(float)
    return np.ones_like(z)


def _as_batch(params, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != params.layer_sizes[0]:
        raise ShapeError(f"input must have {params.layer_sizes[0]} features, got shape {x.shape}")
    return X, single


def forward(params, x):
    """Evaluate the network on one input vector or a batch of rows."""
    X, single = _as_batch(params, x)
    a = (X - params.input_shift) / params.input_scale
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = _act(params.output_activation if i == last else params.hidden_activation, a @ w + b)
    y = a * params.output_scale + params.output_shift
    return y[0] if single else y


def forward_cache(params, X):
    X, _ = _as_batch(params, X)
    a = (X - params.input_shift) / params.input_scale
    cache = []
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        act = params.output_activation if i == last else params.hidden_activation
        a_next = _act(act, z)
        cache.append((a, z, a_next, act))
        a = a_next
    return a * params.output_scale + params.output_shift, cache


def backward(params, cache, dY):
    """Backpropagate ``dY = dL/dy`` (batch x n_out) through a cached pass.

    Returns parameter gradients and the gradient with respect to the raw
    (unnormalized) input.
    """
    delta = np.asarray(dY, dtype=float) * params.output_scale
    dws = [None] * len(cache)
    dbs = [None] * len(cache)
    for i in range(len(cache) - 1, -1, -1):
        a_prev, z, a, act = cache[i]
        delta = delta * _act_grad(act, z, a)
        dws[i] = a_prev.T @ delta
        dbs[i] = delta.sum(axis=0)
        delta = delta @ params.weights[i].T
    return Grads(tuple(dws), tuple(dbs)), delta / params.input_scale


def mse_loss(params, X, Y):
    pred = forward(params, X)
    return float(np.mean((pred - np.asarray(Y, dtype=float).reshape(pred.shape)) ** 2))


def gradient(params, X, Y, loss="mse"):
    """Mean-squared-error loss over batch and outputs, and its exact gradient."""
    if loss != "mse":
        raise ConfigError(f"unsupported loss {loss!r}")
    X, _ = _as_batch(params, X)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y.reshape(-1, params.layer_sizes[-1])
    if X.shape[0] == 0 or Y.shape != (X.shape[0], params.layer_sizes[-1]):
        raise ShapeError(f"targets of shape {Y.shape} do not match batch {X.shape}")
    pred, cache = forward_cache(params, X)
    resid = pred - Y
    grads, _ = backward(params, cache, 2.0 * resid / resid.size)
    return float(np.mean(resid**2)), grads


def flatten(params_or_grads):
    ws, bs = (params_or_grads.weights, params_or_grads.biases)
    return np.concatenate([np.concatenate((w.ravel(), b.ravel())) for w, b in zip(ws, bs)])


def unflatten(params, vec):
    vec = np.asarray(vec, dtype=float)
    if vec.size != params.n_params:
        raise ShapeError(f"expected {params.n_params} parameters, got {vec.size}")
    ws, bs, k = [], [], 0
    for w, b in zip(params.weights, params.biases):
        ws.append(vec[k:k + w.size].reshape(w.shape))
        k += w.size
        bs.append(vec[k:k + b.size].copy())
        k += b.size
    return params.with_layers(ws, bs)


def normalize_outputs(params, y):
    return (np.asarray(y, dtype=float) - params.output_shift) / params.output_scale


def denormalize_outputs(params, y_hat):
    return np.asarray(y_hat, dtype=float) * params.output_scale + params.output_shift
