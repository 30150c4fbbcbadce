"""Episode environment, reward, actor-critic training and baseline controllers."""

from .scenario import Scenario, Segment, scenario, startup, startup_degraded, setpoint, SCENARIOS, initial_state
from .reward import RewardWeights, reward, soft_violations, hard_violation
from .env import EngineEnv, Transition
from .pid import PidConfig, PidState, pid_step
from .openloop import Schedule, open_loop, ramp_schedule
from .replay import ReplayBuffer
from .agent import RlHyper, train_policy, act, run_episode
from .evaluate import (
    evaluate, make_controller, PolicyController, PidController, OpenLoopController,
    settling_time, overshoot_pct, default_pid, deterministic_part,
)
from .toy import DoubleIntegratorEnv, lqr_gain, rollout_return
