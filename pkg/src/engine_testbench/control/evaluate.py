"""Closed-loop evaluation of policies and baselines on a scenario."""

import time

import numpy as np

from ..errors import ConfigError
from ..sim import P_AMB
from ..sim.trajectory import trajectory_row
from .agent import act
from .env import EngineEnv
from .openloop import open_loop, ramp_schedule
from .pid import PidConfig, PidState, pid_step

SETTLING_BAND = 0.02
TIMING_KEYS = ("mean_inference_s",)


class PolicyController:
    kind = "policy"

    def __init__(self, actor):
        self.actor = actor

    def reset(self, env):
        pass

    def __call__(self, env):
        return act(self.actor, env, env.features())


class PidController:
    kind = "pid"

    def __init__(self, cfg):
        self.cfg = cfg
        self.state = PidState()

    def reset(self, env):
        self.state = PidState()

    def __call__(self, env):
        obs = env.obs
        err = (obs.reference.vector() - obs.tracked()) / env.scales
        u, self.state = pid_step(err, env.control_dt, self.cfg, self.state)
        return u


class OpenLoopController:
    kind = "open_loop"

    def __init__(self, schedule):
        self.schedule = schedule

    def reset(self, env):
        pass

    def __call__(self, env):
        return open_loop(self.schedule, env.t)


def default_pid(preset):
    """Hand-tuned gains on errors normalized by the tracking scales."""
    if preset == "gas_generator":
        return PidConfig(kp=(2.0, 0.5, 0.5), ki=(1.0, 0.3, 0.3), bias=(0.63, 0.63, 0.6), i_limit=(1.0, 1.0, 1.0))
    if preset == "expander_bleed":
        return PidConfig(kp=(3.0, 0.5, 0.5), ki=(1.0, 0.3, 0.3), bias=(0.6, 0.6, 0.6), i_limit=(1.0, 1.0, 1.0))
    raise ConfigError(f"no PID defaults for preset {preset!r}")


def make_controller(kind, scenario, actor=None, pid=None, schedule=None):
    if kind == "policy":
        if actor is None:
            raise ConfigError("policy controller needs a trained actor")
        return PolicyController(actor)
    if kind == "pid":
        return PidController(pid or default_pid(scenario.preset))
    if kind == "open_loop":
        return OpenLoopController(schedule or ramp_schedule(scenario))
    raise ConfigError(f"unknown controller {kind!r}; choose policy, pid or open_loop")


def settling_time(times, values, target, t_event, t_end, band=SETTLING_BAND):
    """Time from ``t_event`` until ``values`` enter and stay within the band
    up to ``t_end`` (exclusive); ``None`` if still outside at the end."""
    times = np.asarray(times)
    values = np.asarray(values)
    m = (times >= t_event - 1e-9) & (times < t_end - 1e-9)
    ts, vs = times[m], values[m]
    if ts.size == 0:
        return None
    inside = np.abs(vs - target) <= band * abs(target)
    if not inside[-1]:
        return None
    outside = np.flatnonzero(~inside)
    if outside.size == 0:
        return 0.0
    return float(ts[outside[-1] + 1] - t_event)


def overshoot_pct(times, values, start, target, t_event, t_end):
    """Largest excursion past ``target`` in percent of the step size."""
    step = target - start
    if abs(step) <= SETTLING_BAND * abs(target):
        return 0.0
    times = np.asarray(times)
    m = (times >= t_event - 1e-9) & (times < t_end - 1e-9)
    excess = np.sign(step) * (np.asarray(values)[m] - target)
    return float(max(0.0, excess.max(initial=0.0)) / abs(step) * 100.0)


def episode_metrics(rows, refs, scenario, env_eta, dt, violations, crash):
    rows = np.asarray(rows)
    t, p = rows[:, 0], rows[:, 1]
    tracked = rows[:, [1, 3, 4]]
    refs = np.asarray(refs)
    t_end = scenario.episode_length + dt
    events = []
    segs = scenario.segments
    for i, seg in enumerate(segs):
        if i == 0 and scenario.initial != "rest":
            continue
        nxt = segs[i + 1].t if i + 1 < len(segs) else t_end
        k0 = int(np.searchsorted(t, seg.t - 1e-9))
        start = P_AMB if (i == 0) else float(p[min(k0, len(p) - 1)])
        events.append({
            "t": seg.t,
            "from_p_cc": float(segs[i - 1].p_cc) if i > 0 else P_AMB,
            "to_p_cc": float(seg.p_cc),
            "settling_time": settling_time(t, p, seg.p_cc, seg.t, nxt),
            "overshoot_pct": overshoot_pct(t, p, start, seg.p_cc, seg.t, nxt),
        })
    final_ref = refs[-1, 0]
    err = np.abs(tracked - refs)
    scales = np.maximum(np.abs(refs), 1e-12)
    return {
        "events": events,
        "iae_p_cc": float(np.sum(err[1:, 0]) * dt),
        "iae_relative": [float(v) for v in np.sum(err[1:] / scales[1:], axis=0) * dt],
        "violations": int(violations),
        "crashed": crash is not None,
        "crash_reason": crash,
        "final_p_cc": float(p[-1]),
        "final_error_pct": float(abs(p[-1] - final_ref) / final_ref * 100.0),
        "in_band_at_end": bool(abs(p[-1] - final_ref) <= SETTLING_BAND * final_ref),
        "return": float(np.sum(rows[:, -1])),
        "eta": float(env_eta),
        "duration": float(t[-1]),
    }


def evaluate(controller, scenario, seed=0, cfg=None, env=None):
    """Run one episode; returns ``(trajectory rows, metrics)``.

    Metrics hold one entry per reference change (plus the start from rest)
    with settling time and overshoot, integrated absolute errors, soft-limit
    violation count and the mean wall time per controller call.
    """
    env = env or EngineEnv(scenario, cfg=cfg)
    obs = env.reset(seed)
    controller.reset(env)
    rows = [trajectory_row(0.0, obs, env.controlled_positions(), 0.0)]
    refs = [obs.reference.vector()]
    n_viol, crash, spent = 0, None, 0.0
    while not env.done:
        t0 = time.perf_counter()
        u = controller(env)
        spent += time.perf_counter() - t0
        u = np.asarray(u, dtype=float)
        if u.shape != (3,) or np.any(u < 0) or np.any(u > 1) or not np.all(np.isfinite(u)):
            raise ConfigError(f"controller emitted an invalid action {u!r}")
        tr = env.step(u)
        n_viol += tr.info["n_violations"]
        crash = crash or tr.info["crash"]
        rows.append(trajectory_row(env.t, tr.next_observation, env.controlled_positions(), tr.reward))
        refs.append(tr.next_observation.reference.vector())
    metrics = episode_metrics(rows, refs, scenario, env.eta, env.control_dt, n_viol, crash)
    metrics.update(controller=controller.kind, scenario=scenario.name, seed=int(seed))
    metrics["mean_inference_s"] = spent / max(len(rows) - 1, 1)
    return rows, metrics


def deterministic_part(metrics):
    """Metrics without wall-clock fields."""
    return {k: v for k, v in metrics.items() if k not in TIMING_KEYS}
