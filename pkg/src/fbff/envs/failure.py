"""Sensing-failure wrapper: freezes pose entries of the observation while
a predicate over the true pose holds."""
from __future__ import annotations

import numpy as np

from .snake import OBS_X_INDEX, OBS_Y_INDEX


class FailureWrapper:
    """While the true head x is below the threshold, the observed (x, y)
    stay at their last pre-failure values; everything else passes through.
    The true simulation state is never touched, only the observation."""

    def __init__(self, env, threshold: float = 2.0,
                 x_index: int = OBS_X_INDEX, y_index: int = OBS_Y_INDEX,
                 predicate=None):
        self.env = env
        self.threshold = threshold
        self.x_index = x_index
        self.y_index = y_index
        self.predicate = predicate
        self.frozen = np.zeros(2)

    @property
    def state_dim(self) -> int:
        return self.env.state_dim

    @property
    def action_dim(self) -> int:
        return self.env.action_dim

    @property
    def truncated(self) -> bool:
        return self.env.truncated

    def _failing(self) -> bool:
        if self.predicate is not None:
            return bool(self.predicate(self.env.x, self.env.y))
        return self.env.x < self.threshold

    def _apply(self, obs: np.ndarray) -> np.ndarray:
        if self._failing():
            obs = obs.copy()
            obs[self.x_index] = self.frozen[0]
            obs[self.y_index] = self.frozen[1]
        else:
            self.frozen[0] = obs[self.x_index]
            self.frozen[1] = obs[self.y_index]
        return obs

    def reset(self) -> np.ndarray:
        obs = self.env.reset()
        self.frozen = np.array([obs[self.x_index], obs[self.y_index]])
        return self._apply(obs)

    def step(self, action: np.ndarray):
        obs, reward, done = self.env.step(action)
        return self._apply(obs), reward, done
