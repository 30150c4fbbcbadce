"""Noise-driven Van der Pol oscillator crossing a Hopf bifurcation.

    x'' - mu(t) (1 - x^2) x' + omega0^2 x = sigma xi(t)

mu ramps linearly from ``mu_start < 0`` to ``mu_end > 0``; the onset of
the instability is the instant mu crosses zero. The integrator is the
semi-implicit (symplectic) Euler-Maruyama scheme: velocity first, then
position with the new velocity. The explicit scheme adds energy at every
step at this frequency-to-sample-rate ratio.
"""

import csv
import io
import math
from dataclasses import dataclass, asdict

import numpy as np
from numba import njit

from ..errors import ConfigError


@dataclass
class SignalConfig:
    sample_rate: float = 10_000.0
    duration: float = 3.5
    omega0: float = 2 * math.pi * 800.0
    mu_start: float = -2000.0  # 1/s; ramps at 800 1/s, crossing zero at 2.5 s
    mu_end: float = 400.0
    ramp_start: float = 0.0
    ramp_end: float = 3.0
    sigma: float = 1000.0
    seed: int = 0
    x0: float = 0.0
    v0: float = 0.0

    def __post_init__(self):
        if not self.sample_rate > 0 or not self.duration > 0:
            raise ConfigError("sample_rate and duration must be positive")
        if not self.ramp_end > self.ramp_start:
            raise ConfigError("ramp_end must be after ramp_start")
        if self.sigma < 0:
            raise ConfigError("sigma must be non-negative")

    def mu(self, t):
        frac = np.clip((np.asarray(t, dtype=float) - self.ramp_start) / (self.ramp_end - self.ramp_start), 0.0, 1.0)
        return self.mu_start + frac * (self.mu_end - self.mu_start)

    def onset_time(self):
        """First t with mu(t) >= 0, or +inf if mu stays negative."""
        if self.mu_start >= 0:
            return 0.0
        if self.mu_end < 0:
            return math.inf
        return self.ramp_start + (self.ramp_end - self.ramp_start) * (-self.mu_start) / (self.mu_end - self.mu_start)

    def to_dict(self):
        return asdict(self)


@njit(cache=True)
def _integrate(mu, omega0, sigma, dt, x0, v0, noise):
    n = mu.size
    out = np.empty(n)
    x, v = x0, v0
    sq = math.sqrt(dt)
    w2 = omega0 * omega0
    for i in range(n):
        out[i] = x
        v = v + dt * (mu[i] * (1.0 - x * x) * v - w2 * x) + sigma * sq * noise[i]
        x = x + dt * v
    return out


def gen_signal(cfg):
    """Returns ``(t, x, onset_time)`` sampled at ``cfg.sample_rate``."""
    n = int(round(cfg.duration * cfg.sample_rate))
    dt = 1.0 / cfg.sample_rate
    t = np.arange(n) * dt
    noise = np.random.default_rng(cfg.seed).standard_normal(n)
    x = _integrate(cfg.mu(t), cfg.omega0, cfg.sigma, dt, cfg.x0, cfg.v0, noise)
    if not np.all(np.isfinite(x)):
        raise ConfigError("signal integration overflowed; reduce mu_end or sigma")
    return t, x, cfg.onset_time()


def format_signal(t, x):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t", "x"))
    for a, b in zip(t, x):
        w.writerow((repr(float(a)), repr(float(b))))
    return buf.getvalue()


def read_signal(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]
