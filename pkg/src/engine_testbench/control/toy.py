"""Double-integrator regulation task with a discounted LQR reference solution."""

import numpy as np
from scipy.linalg import solve_discrete_are

from .env import Transition


class DoubleIntegratorEnv:
    """x'' = u, exact zero-order-hold discretization, quadratic cost.

    Reward is ``-(x'Qx + u'Ru)``; start states are uniform in ``[-1, 1]^2``.
    Leaving the box ``|x|, |v| <= bound`` ends the episode with
    ``exit_penalty``; the LQR optimum from the start box never gets there, so
    it stays optimal for the bounded task.
    """

    action_dim = 1
    obs_dim = 2

    def __init__(self, dt=0.1, horizon=60, u_max=5.0, q=(1.0, 0.1), r=0.5, bound=3.0, exit_penalty=100.0):
        self.dt = dt
        self.n_steps = horizon
        self.A = np.array([[1.0, dt], [0.0, 1.0]])
        self.B = np.array([[0.5 * dt * dt], [dt]])
        self.Q = np.diag(q)
        self.R = np.array([[r]])
        self.action_low = np.array([-u_max])
        self.action_high = np.array([u_max])
        self.bound = bound
        self.exit_penalty = exit_penalty
        self.x = None
        self.done = True

    def reset(self, seed=0):
        self.x = np.random.default_rng(seed).uniform(-1.0, 1.0, 2)
        self.k = 0
        self.done = False
        return self.x.copy()

    def features(self, obs=None):
        return self.x.copy() if obs is None else np.asarray(obs, dtype=float)

    def step(self, action):
        u = np.clip(np.asarray(action, dtype=float).ravel(), self.action_low, self.action_high)
        x = self.x
        r = -float(x @ self.Q @ x + u @ self.R @ u)
        self.x = self.A @ x + (self.B @ u)
        self.k += 1
        escaped = bool(np.any(np.abs(self.x) > self.bound))
        if escaped:
            r -= self.exit_penalty
        time_limit = self.k >= self.n_steps and not escaped
        self.done = escaped or time_limit
        return Transition(x.copy(), u, r, self.x.copy(), self.done, {"time_limit": time_limit})


def lqr_gain(env, gamma=1.0):
    """Optimal feedback ``u = -K x`` for the discounted infinite-horizon cost."""
    g = np.sqrt(gamma)
    A, B = g * env.A, g * env.B
    P = solve_discrete_are(A, B, env.Q, env.R)
    return np.linalg.solve(env.R + B.T @ P @ B, B.T @ P @ A)


def rollout_return(env, controller, seed):
    x = env.reset(seed)
    total = 0.0
    while not env.done:
        tr = env.step(controller(x))
        total += tr.reward
        x = tr.next_observation
    return total
