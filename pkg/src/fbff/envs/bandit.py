"""One-state quadratic bandit: the smallest end-to-end learning check."""
from __future__ import annotations

import numpy as np


class QuadraticBandit:
    """Constant observation, one-step episodes, reward -a^2; the optimal
    policy mean is 0."""

    state_dim = 1
    action_dim = 1

    def __init__(self, seed: int, max_steps: int = 1):
        del seed
        self.max_steps = max_steps
        self.steps = 0
        self.truncated = False

    def reset(self) -> np.ndarray:
        self.steps = 0
        return np.ones(1)

    def step(self, action: np.ndarray):
        self.steps += 1
        r = -float(action[0]) ** 2
        return np.ones(1), r, self.steps >= self.max_steps
