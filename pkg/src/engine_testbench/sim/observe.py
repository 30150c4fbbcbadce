"""Measured quantities, references, and their normalization."""

from dataclasses import dataclass, field

import numpy as np

from .config import N_VALVES
from .model import auxiliaries, EngineState, _as_vector, IX_VALVES

# p_cc, p_gg, mr_gg, mr_glob, omega_h, omega_o, five valves
N_MEASURED = 6 + N_VALVES
N_OBS = N_MEASURED + 3


@dataclass(frozen=True)
class Reference:
    p_cc: float
    mr_gg: float
    mr_glob: float

    def vector(self):
        return np.array([self.p_cc, self.mr_gg, self.mr_glob])


@dataclass
class Observation:
    """Measured engine outputs plus the active reference.

    ``mr_gg`` is the gas-generator mixture ratio for the GG preset and the
    main-chamber mixture ratio for the expander-bleed preset (its turbine
    branch carries fuel only).
    """

    p_cc: float
    p_gg: float
    mr_gg: float
    mr_glob: float
    omega_h: float
    omega_o: float
    valves: np.ndarray
    reference: Reference
    normalized: np.ndarray = field(default=None, repr=False)

    def raw(self):
        return np.concatenate((
            [self.p_cc, self.p_gg, self.mr_gg, self.mr_glob, self.omega_h, self.omega_o],
            self.valves, self.reference.vector(),
        ))

    def tracked(self):
        """Controlled variables in reference order."""
        return np.array([self.p_cc, self.mr_gg, self.mr_glob])


def observation_scales(cfg):
    lim = cfg.limits
    mr_glob_scale = cfg.cstar_fit.mr_range[1]
    meas = [lim.p_cc_max, lim.p_gg_max, lim.mr_max, mr_glob_scale, lim.omega_h_max, lim.omega_o_max]
    return np.array(meas + [1.0] * N_VALVES + [lim.p_cc_max, lim.mr_max, mr_glob_scale])


def tracking_scales(cfg):
    return observation_scales(cfg)[N_MEASURED:]


def normalize(obs, cfg):
    return obs.raw() / observation_scales(cfg)


def denormalize(vec, cfg):
    raw = np.asarray(vec, dtype=float) * observation_scales(cfg)
    ref = Reference(*raw[N_MEASURED:].tolist())
    obs = Observation(*raw[:6].tolist(), raw[6:N_MEASURED].copy(), ref)
    obs.normalized = np.asarray(vec, dtype=float).copy()
    return obs


def observe(state, cfg, reference, prm=None):
    x = _as_vector(state)
    t = state.t if isinstance(state, EngineState) else 0.0
    a = auxiliaries(x, cfg, t=t, prm=prm)
    mr_gg = a["mr_cc"] if cfg.cycle_kind == "expander_bleed" else a["mr_hot"]
    obs = Observation(
        p_cc=float(x[0]), p_gg=float(x[1]), mr_gg=mr_gg, mr_glob=a["mr_glob"],
        omega_h=float(x[2]), omega_o=float(x[3]), valves=x[IX_VALVES].copy(),
        reference=reference,
    )
    obs.normalized = normalize(obs, cfg)
    return obs
