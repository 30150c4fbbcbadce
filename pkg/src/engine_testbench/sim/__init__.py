"""Lumped-parameter engine cycle model."""

from .components import (
    P_AMB, OMEGA_FLOOR, valve_step, valve_flow, pump_head, turbine_torque, mixture_ratio,
)
from .config import EngineConfig, Limits, ValveSpec, Fit, gas_generator, expander_bleed, preset
from .model import (
    CONTROL_DT, DT_PHYSICS, STATE_NAMES, EngineState, Simulator, derivatives, auxiliaries,
    rk4_step, clamp_state, steady_state, balance_residuals, state_scales,
)
from .observe import Observation, Reference, observe, normalize, denormalize, observation_scales
from .trajectory import TRAJECTORY_HEADER, write_trajectory, read_trajectory, format_trajectory
