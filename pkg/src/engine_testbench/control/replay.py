"""Fixed-capacity ring buffer of transitions."""

import threading

import numpy as np

from ..errors import ConfigError


class ReplayBuffer:
    """Appends from any thread; ``sample`` draws uniformly with its own RNG.

    Concurrent appends are serialized by a lock, so the stored order is the
    order in which appenders acquired it.
    """

    def __init__(self, capacity, obs_dim, act_dim, seed=0):
        if capacity < 1:
            raise ConfigError("replay capacity must be positive")
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.terminal = np.zeros(capacity)
        self._next = 0
        self._size = 0
        self._lock = threading.Lock()
        self._rng = np.random.default_rng(seed)

    def __len__(self):
        return self._size

    def append(self, obs, act, rew, next_obs, terminal):
        with self._lock:
            i = self._next
            self.obs[i] = obs
            self.act[i] = act
            self.rew[i] = rew
            self.next_obs[i] = next_obs
            self.terminal[i] = float(terminal)
            self._next = (i + 1) % self.capacity
            self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size):
        with self._lock:
            if self._size == 0:
                raise ConfigError("cannot sample from an empty buffer")
            idx = self._rng.integers(0, self._size, size=batch_size)
            return (self.obs[idx], self.act[idx], self.rew[idx], self.next_obs[idx], self.terminal[idx])
