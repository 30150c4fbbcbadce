"""Episode environment around the engine simulator."""

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, NumericalFault
from ..sim import Simulator, CONTROL_DT, DT_PHYSICS, observe
from ..sim.observe import N_MEASURED, tracking_scales
from .reward import RewardWeights, reward, soft_violations, hard_violation
from .scenario import initial_state

ERROR_GAIN = 10.0  # policy sees tracking errors at 10x their reward scale
ERROR_CLIP = 3.0
N_FEATURES = N_MEASURED + 3 + 3 + 1


@dataclass
class Transition:
    observation: object
    action: np.ndarray
    reward: float
    next_observation: object
    done: bool
    info: dict = field(default_factory=dict)


def check_action(action):
    a = np.asarray(action, dtype=float).ravel()
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise ConfigError(f"action must be three finite numbers, got {action!r}")
    return np.clip(a, 0.0, 1.0)


class EngineEnv:
    """One engine instance driven through a scenario.

    ``reset(seed)`` samples the turbine-efficiency degradation and returns
    the first observation; ``step(action)`` holds the three valve commands
    for one control interval.
    """

    action_dim = 3
    obs_dim = N_FEATURES
    action_low = np.zeros(3)
    action_high = np.ones(3)

    def __init__(self, scenario, cfg=None, weights=RewardWeights(), control_dt=CONTROL_DT, dt=DT_PHYSICS):
        scenario.validate()
        self.scenario = scenario
        self.base_cfg = cfg if cfg is not None else scenario.config()
        self.weights = weights
        self.control_dt = control_dt
        self.dt = dt
        self.n_steps = int(round(scenario.episode_length / control_dt))
        self.scales = tracking_scales(self.base_cfg)
        self.sim = None
        self.obs = None

    def reset(self, seed=0):
        lo, hi = self.scenario.eta_range
        rng = np.random.default_rng(seed)
        self.eta = lo if lo == hi else float(rng.uniform(lo, hi))
        self.cfg = self.base_cfg.with_turbine_efficiency(self.eta)
        if self.scenario.initial != "rest":
            # a running engine does not fire its starter
            self.cfg = dataclasses.replace(self.cfg, t_start=0.0)
        self.sim = Simulator(self.cfg, initial_state(self.scenario, self.eta), dt=self.dt)
        self.k = 0
        self.done = False
        # from rest the start sequence (starter, fixed valves) is armed by the
        # first non-zero command; the simulator clock counts from ignition
        self.ignited = self.scenario.initial != "rest"
        self.obs = self._observe()
        return self.obs

    @property
    def t(self):
        return self.k * self.control_dt

    def _observe(self):
        ref = self.scenario.reference_at(self.t)
        return observe(self.sim.x, self.cfg, ref, prm=self.sim._prm)

    def controlled_positions(self):
        return self.sim.x[4:][self.cfg.controlled_index].copy()

    def step(self, action):
        if self.sim is None:
            raise ConfigError("call reset() before step()")
        if self.done:
            raise ConfigError("episode finished; call reset()")
        a = check_action(action)
        prev = self.obs
        crash_by = None
        self.ignited = self.ignited or bool(np.any(a > 0.0))
        try:
            if self.ignited:
                self.sim.advance(a, self.control_dt)
                crash_by = hard_violation(self.sim.peaks, self.cfg.limits)
        except NumericalFault as exc:
            crash_by = f"numerical:{exc.component}"
        self.k += 1
        crashed = crash_by is not None
        if crashed and crash_by.startswith("numerical"):
            nxt = prev
        else:
            nxt = self._observe()
        r, n_viol = reward(nxt, self.cfg.limits, self.weights, self.scales, crash=crashed)
        time_limit = self.k >= self.n_steps
        self.done = crashed or time_limit
        self.obs = nxt
        info = {
            "t": self.t, "eta": self.eta, "violations": soft_violations(nxt, self.cfg.limits),
            "n_violations": n_viol, "crash": crash_by, "time_limit": time_limit and not crashed,
        }
        return Transition(prev, a, r, nxt, self.done, info)

    def features(self, obs=None):
        """Policy input for ``obs`` (default: the current observation) at the current time."""
        starter_on = self.ignited and self.sim.t < self.cfg.t_start
        return features(self.obs if obs is None else obs, self.scales, starter_on)


def features(obs, scales, starter_on):
    """Normalized measurements and reference, amplified tracking errors, and
    a flag that is 1 while the turbine starter fires."""
    err = (obs.reference.vector() - obs.tracked()) / scales
    starter = 1.0 if starter_on else 0.0
    return np.concatenate((
        obs.normalized, np.clip(ERROR_GAIN * err, -ERROR_CLIP, ERROR_CLIP), [starter],
    ))
