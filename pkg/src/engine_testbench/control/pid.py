"""Three-channel PID with conditional-integration anti-windup."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError


def _vec3(v):
    return np.broadcast_to(np.asarray(v, dtype=float), (3,)).copy()


@dataclass
class PidConfig:
    kp: object = (0.0, 0.0, 0.0)
    ki: object = (0.0, 0.0, 0.0)
    kd: object = (0.0, 0.0, 0.0)
    bias: object = (0.5, 0.5, 0.5)
    out_min: object = (0.0, 0.0, 0.0)
    out_max: object = (1.0, 1.0, 1.0)
    i_limit: object = (np.inf, np.inf, np.inf)  # clamp on the integrator state

    def __post_init__(self):
        for name in ("kp", "ki", "kd", "bias", "out_min", "out_max", "i_limit"):
            setattr(self, name, _vec3(getattr(self, name)))
        if np.any(self.out_min < 0) or np.any(self.out_max > 1) or np.any(self.out_min > self.out_max):
            raise ConfigError("PID output limits must satisfy 0 <= min <= max <= 1")
        if np.any(self.i_limit < 0):
            raise ConfigError("integrator clamp must be non-negative")

    def to_dict(self):
        return {k: [float(x) for x in getattr(self, k)]
                for k in ("kp", "ki", "kd", "bias", "out_min", "out_max", "i_limit")}


@dataclass
class PidState:
    integral: np.ndarray = field(default_factory=lambda: np.zeros(3))
    prev_error: np.ndarray = None


def pid_step(errors, dt, cfg, state):
    """One PID update; returns ``(command, new_state)``.

    The integrator is frozen on channels whose unclamped output is saturated
    and whose error would drive it further into saturation.
    """
    if not dt > 0:
        raise ConfigError("dt must be positive")
    e = _vec3(errors)
    deriv = np.zeros(3) if state.prev_error is None else (e - state.prev_error) / dt
    integral = state.integral.copy()
    candidate = np.clip(integral + e * dt, -cfg.i_limit, cfg.i_limit)
    u_try = cfg.bias + cfg.kp * e + cfg.ki * candidate + cfg.kd * deriv
    push_high = (u_try > cfg.out_max) & (cfg.ki * e > 0)
    push_low = (u_try < cfg.out_min) & (cfg.ki * e < 0)
    frozen = push_high | push_low
    integral = np.where(frozen, integral, candidate)
    u = cfg.bias + cfg.kp * e + cfg.ki * integral + cfg.kd * deriv
    return np.clip(u, cfg.out_min, cfg.out_max), PidState(integral, e)
