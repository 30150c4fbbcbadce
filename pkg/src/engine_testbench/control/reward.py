"""Tracking reward with soft- and hard-limit penalties."""

from dataclasses import dataclass

import numpy as np

from ..sim.observe import tracking_scales

CRASH_FACTOR = 1.2


@dataclass(frozen=True)
class RewardWeights:
    w: tuple = (1.0, 0.5, 0.5)  # p_cc, mr_gg, mr_glob
    c_lim: float = 1.0
    c_crash: float = 100.0


def soft_violations(obs, limits):
    """Per-quantity flags for exceeding the configured limits.

    Mixture-ratio bounds apply only while the ratio is defined (sentinel 0
    means no fuel flow).
    """
    mr = obs.mr_gg
    return {
        "p_cc": obs.p_cc > limits.p_cc_max,
        "p_gg": obs.p_gg > limits.p_gg_max,
        "omega_h": obs.omega_h > limits.omega_h_max,
        "omega_o": obs.omega_o > limits.omega_o_max,
        "mr": mr > 0.0 and not (limits.mr_min <= mr <= limits.mr_max),
    }


def hard_violation(peaks, limits):
    """Name of the first quantity whose interval peak exceeds 1.2x its limit, else None.

    ``peaks`` holds the maxima of (p_cc, p_gg, omega_h, omega_o) over the interval.
    """
    caps = (limits.p_cc_max, limits.p_gg_max, limits.omega_h_max, limits.omega_o_max)
    for name, peak, cap in zip(("p_cc", "p_gg", "omega_h", "omega_o"), peaks, caps):
        if peak > CRASH_FACTOR * cap:
            return name
    return None


def tracking_term(obs, scales, w):
    err = np.abs(obs.tracked() - obs.reference.vector()) / np.asarray(scales, dtype=float)
    return float(np.dot(w, err))


def reward(obs, limits, weights=RewardWeights(), scales=None, crash=False, cfg=None):
    """Reward for one control interval and the number of soft-limit violations.

    ``scales`` defaults to the tracking scales of ``cfg``; one of the two is
    required.
    """
    if scales is None:
        scales = tracking_scales(cfg)
    n_viol = sum(bool(v) for v in soft_violations(obs, limits).values())
    r = -tracking_term(obs, scales, weights.w) - weights.c_lim * n_viol
    if crash:
        r -= weights.c_crash
    return r, n_viol
