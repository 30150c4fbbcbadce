"""Deterministic actor-critic with replay and target networks.

Twin critics, target-policy smoothing and delayed actor updates are on by
default (``twin=False`` gives the single-critic variant). Actions live in
``[-1, 1]`` inside the agent and are mapped affinely onto each
environment's action box.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from ..errors import TrainingError, ConfigError
from ..nn import init_mlp, forward, forward_cache, backward, adam_init, adam_update
from ..nn.mlp import MlpParams
from .replay import ReplayBuffer

DIVERGENCE_LIMIT = 1e6


@dataclass
class RlHyper:
    total_steps: int = 60_000
    buffer_capacity: int = 200_000
    batch_size: int = 128
    gamma: float = 0.98
    tau: float = 0.005
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    noise_start: float = 0.3
    noise_end: float = 0.05
    warmup_steps: int = 2_000
    hidden: tuple = (64, 64)
    policy_delay: int = 2
    target_noise: float = 0.2
    target_clip: float = 0.5
    twin: bool = True
    critic_activation: str = "relu"
    reward_scale: float = 1.0
    preact_penalty: float = 0.0  # keeps the actor's tanh output out of saturation
    eval_every: int = 10  # episodes between greedy evaluations; 0 keeps the last actor
    eval_seeds: tuple = (0,)
    seed: int = 0

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        self.eval_seeds = tuple(int(s) for s in self.eval_seeds)
        if self.total_steps < 0 or self.batch_size < 1 or self.buffer_capacity < 1:
            raise ConfigError("total_steps >= 0, batch_size >= 1 and buffer_capacity >= 1 required")
        if not (0 <= self.gamma < 1 and 0 < self.tau <= 1):
            raise ConfigError("need 0 <= gamma < 1 and 0 < tau <= 1")

    def to_dict(self):
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        d["eval_seeds"] = list(self.eval_seeds)
        return d


def to_env_action(env, a):
    lo, hi = env.action_low, env.action_high
    return lo + 0.5 * (np.clip(a, -1.0, 1.0) + 1.0) * (hi - lo)


def act(actor, env, feat):
    """Greedy action in environment units."""
    return to_env_action(env, forward(actor, feat))


def init_actor(obs_dim, act_dim, hidden, seed):
    return init_mlp([obs_dim, *hidden, act_dim], seed=seed, hidden_activation="tanh",
                    output_activation="tanh", output_gain=0.1)


def init_critic(obs_dim, act_dim, hidden, seed, activation="relu"):
    return init_mlp([obs_dim + act_dim, *hidden, 1], seed=seed, hidden_activation=activation)


def _soft_update(target, source, tau):
    ws = [(1 - tau) * t + tau * s for t, s in zip(target.weights, source.weights)]
    bs = [(1 - tau) * t + tau * s for t, s in zip(target.biases, source.biases)]
    return target.with_layers(ws, bs)


def run_episode(actor, env, seed, noise=0.0, rng=None):
    """Greedy (or noisy) rollout; returns ``(episode_return, transitions)``."""
    env.reset(seed)
    feats = env.features()
    total, out = 0.0, []
    while not env.done:
        a = forward(actor, feats)
        if noise > 0:
            a = np.clip(a + noise * rng.standard_normal(a.shape), -1.0, 1.0)
        tr = env.step(to_env_action(env, a))
        nf = env.features()
        out.append((feats, a, tr, nf))
        total += tr.reward
        feats = nf
    return total, out


class _Learner:
    def __init__(self, obs_dim, act_dim, hyper):
        h = hyper
        self.h = h
        self.act_dim = act_dim
        self.actor = init_actor(obs_dim, act_dim, h.hidden, h.seed)
        n_critics = 2 if h.twin else 1
        self.critics = [init_critic(obs_dim, act_dim, h.hidden, h.seed + 101 + i, h.critic_activation) for i in range(n_critics)]
        self.actor_t = self.actor
        self.critics_t = list(self.critics)
        self.actor_opt = adam_init(self.actor)
        self.critic_opts = [adam_init(c) for c in self.critics]
        self.rng = np.random.default_rng(h.seed + 7)
        self.n_updates = 0

    def update(self, batch):
        h = self.h
        s, a, r, s2, term = batch
        r = h.reward_scale * r
        a2 = forward(self.actor_t, s2)
        if h.twin:
            eps = np.clip(h.target_noise * self.rng.standard_normal(a2.shape), -h.target_clip, h.target_clip)
            a2 = np.clip(a2 + eps, -1.0, 1.0)
        x2 = np.hstack((s2, a2))
        q2 = np.min([forward(c, x2)[:, 0] for c in self.critics_t], axis=0)
        y = r + h.gamma * (1.0 - term) * q2
        x = np.hstack((s, a))
        losses = []
        for i, c in enumerate(self.critics):
            q, cache = forward_cache(c, x)
            resid = q[:, 0] - y
            loss = float(np.mean(resid**2))
            losses.append(loss)
            if not math.isfinite(loss) or loss > DIVERGENCE_LIMIT:
                raise TrainingError(
                    f"critic {i} diverged: loss {loss:.3e} after {self.n_updates} updates "
                    f"(mean target {float(np.mean(y)):.3e}, mean reward {float(np.mean(r)):.3e})"
                )
            g, _ = backward(c, cache, (2.0 / len(y)) * resid[:, None])
            self.critics[i], self.critic_opts[i] = adam_update(c, g, self.critic_opts[i], h.critic_lr)
        self.n_updates += 1
        if self.n_updates % (h.policy_delay if h.twin else 1) == 0:
            pa, acache = forward_cache(self.actor, s)
            q, ccache = forward_cache(self.critics[0], np.hstack((s, pa)))
            _, dx = backward(self.critics[0], ccache, -np.ones_like(q) / len(q))
            dpa = dx[:, -self.act_dim:]
            if h.preact_penalty > 0:
                # d/da of penalty * mean(atanh(a)^2), expressed through the tanh output
                z = acache[-1][1]
                dpa = dpa + h.preact_penalty * 2.0 * z / (len(z) * np.maximum(1.0 - pa * pa, 1e-6))
            ga, _ = backward(self.actor, acache, dpa)
            self.actor, self.actor_opt = adam_update(self.actor, ga, self.actor_opt, h.actor_lr)
            self.actor_t = _soft_update(self.actor_t, self.actor, h.tau)
            self.critics_t = [_soft_update(t, c, h.tau) for t, c in zip(self.critics_t, self.critics)]
        return float(np.mean(losses))


def _evaluate_greedy(actor, env, seeds):
    return float(np.mean([run_episode(actor, env, s)[0] for s in seeds]))


def train_policy(env_factory, hyper=None, workers=1, progress=None):
    """Train on environments built by ``env_factory()``.

    Returns ``(actor, critic, log)``. With ``workers == 1`` the result is a
    pure function of ``hyper.seed``. With more workers, rollouts of several
    environments run in threads and append to a shared buffer.
    """
    h = hyper or RlHyper()
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    envs = [env_factory() for _ in range(workers)]
    eval_env = env_factory()
    obs_dim, act_dim = envs[0].obs_dim, envs[0].action_dim
    learner = _Learner(obs_dim, act_dim, h)
    buf = ReplayBuffer(h.buffer_capacity, obs_dim, act_dim, seed=h.seed + 3)
    explore = np.random.default_rng(h.seed + 5)
    log = {"episode_returns": [], "episode_lengths": [], "critic_loss": [], "eval_returns": [],
           "best_eval_return": None, "steps": 0}
    best_actor, best_eval = learner.actor, -np.inf

    ep_count = 0
    states = []
    for env in envs:
        env.reset(h.seed * 100_003 + ep_count)
        states.append({"feat": env.features(), "ret": 0.0, "len": 0})
        ep_count += 1
    loss_acc = []
    pool = ThreadPoolExecutor(workers) if workers > 1 else None

    def env_step(i, a_unit):
        env = envs[i]
        tr = env.step(to_env_action(env, a_unit))
        nf = env.features()
        terminal = tr.done and not tr.info.get("time_limit", False)
        buf.append(states[i]["feat"], a_unit, tr.reward, nf, terminal)
        return tr, nf

    step = 0
    while step < h.total_steps:
        frac = min(step / max(h.total_steps, 1), 1.0)
        sigma = h.noise_start + (h.noise_end - h.noise_start) * frac
        actions = []
        for i in range(workers):
            if step + i < h.warmup_steps:
                a = explore.uniform(-1.0, 1.0, act_dim)
            else:
                a = forward(learner.actor, states[i]["feat"])
                a = np.clip(a + sigma * explore.standard_normal(act_dim), -1.0, 1.0)
            actions.append(a)
        if pool is None:
            results = [env_step(0, actions[0])]
        else:
            results = list(pool.map(env_step, range(workers), actions))
        for i, (tr, nf) in enumerate(results):
            st = states[i]
            st["ret"] += tr.reward
            st["len"] += 1
            st["feat"] = nf
            if tr.done:
                log["episode_returns"].append(st["ret"])
                log["episode_lengths"].append(st["len"])
                log["critic_loss"].append(float(np.mean(loss_acc)) if loss_acc else None)
                loss_acc = []
                if h.eval_every and len(log["episode_returns"]) % h.eval_every == 0:
                    ev = _evaluate_greedy(learner.actor, eval_env, h.eval_seeds)
                    log["eval_returns"].append([step + 1, ev])
                    if ev > best_eval:
                        best_actor, best_eval = learner.actor, ev
                if progress is not None:
                    progress(len(log["episode_returns"]), st["ret"], step + 1)
                envs[i].reset(h.seed * 100_003 + ep_count)
                ep_count += 1
                states[i] = {"feat": envs[i].features(), "ret": 0.0, "len": 0}
        step += workers
        if step >= h.warmup_steps and len(buf) >= h.batch_size:
            for _ in range(workers):
                loss_acc.append(learner.update(buf.sample(h.batch_size)))
    if pool is not None:
        pool.shutdown()

    actor = learner.actor
    if h.eval_every and h.total_steps > 0:
        ev = _evaluate_greedy(learner.actor, eval_env, h.eval_seeds)
        log["eval_returns"].append([step, ev])
        if ev > best_eval:
            best_actor, best_eval = learner.actor, ev
        actor = best_actor
        log["best_eval_return"] = best_eval
    log["steps"] = step
    return actor, learner.critics[0], log
