"""First-order optimizers returning new parameter versions."""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError


def _check_lr(lr):
    if not lr > 0:
        raise ConfigError(f"learning rate must be positive, got {lr}")


def sgd_update(params, grads, lr):
    _check_lr(lr)
    ws = [w - lr * g for w, g in zip(params.weights, grads.weights)]
    bs = [b - lr * g for b, g in zip(params.biases, grads.biases)]
    return params.with_layers(ws, bs)


@dataclass(frozen=True)
class AdamState:
    m_w: tuple
    m_b: tuple
    v_w: tuple
    v_b: tuple
    t: int = 0


def adam_init(params):
    zw = tuple(np.zeros_like(w) for w in params.weights)
    zb = tuple(np.zeros_like(b) for b in params.biases)
    return AdamState(zw, zb, zw, zb, 0)


def adam_update(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam step; returns ``(params, state)``."""
    _check_lr(lr)
    t = state.t + 1
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t

    def step(p, g, m, v):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        return p - lr * (m / c1) / (np.sqrt(v / c2) + eps), m, v

    ws, mws, vws = zip(*(step(*a) for a in zip(params.weights, grads.weights, state.m_w, state.v_w)))
    bs, mbs, vbs = zip(*(step(*a) for a in zip(params.biases, grads.biases, state.m_b, state.v_b)))
    return params.with_layers(ws, bs), AdamState(mws, mbs, vws, vbs, t)


def clip_grads(grads, max_norm):
    """Scale gradients down to a global L2 norm of at most ``max_norm``."""
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.weights + grads.biases))
    if norm <= max_norm or norm == 0.0:
        return grads
    f = max_norm / norm
    return type(grads)(tuple(g * f for g in grads.weights), tuple(g * f for g in grads.biases))
