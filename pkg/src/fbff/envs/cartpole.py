"""Cart-pole balancer with the classic benchmark's dynamics and limits."""
from __future__ import annotations

import numpy as np

GRAVITY = 9.81
CART_MASS = 1.0
POLE_MASS = 0.1
POLE_HALF_LENGTH = 0.5
FORCE_SCALE = 10.0
DT = 0.02
ANGLE_LIMIT = 0.2
POSITION_LIMIT = 2.4
# small quadratic effort cost: the tanh force map is flat for |action| > 2,
# so without this the reward carries no gradient back toward the usable range
# once a policy mean wanders into saturation
EFFORT_COEFF = 0.02
# observations are the state divided by its operational range so every
# component is O(1); the raw angle spans +/-0.2 rad against positions of
# +/-2.4 m, which buries the one signal that matters under fan-in scaling
OBS_SCALE = np.array([POSITION_LIMIT, 2.0, ANGLE_LIMIT, 2.0])


def dynamics(state: np.ndarray, force: float) -> tuple[float, float]:
    """Accelerations (x_ddot, theta_ddot) for the pole-on-cart."""
    _, v, theta, omega = state
    sin, cos = np.sin(theta), np.cos(theta)
    total = CART_MASS + POLE_MASS
    tmp = (force + POLE_MASS * POLE_HALF_LENGTH * omega * omega * sin) / total
    theta_dd = (GRAVITY * sin - cos * tmp) / (
        POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / total))
    x_dd = tmp - POLE_MASS * POLE_HALF_LENGTH * theta_dd * cos / total
    return x_dd, theta_dd


def energy(state: np.ndarray) -> float:
    """Total mechanical energy; conserved by the true zero-force dynamics
    (integration oracle)."""
    x, v, theta, omega = state
    kinetic = (0.5 * (CART_MASS + POLE_MASS) * v * v
               + POLE_MASS * POLE_HALF_LENGTH * v * omega * np.cos(theta)
               + (2.0 / 3.0) * POLE_MASS * POLE_HALF_LENGTH ** 2
               * omega * omega)
    potential = POLE_MASS * GRAVITY * POLE_HALF_LENGTH * np.cos(theta)
    return float(kinetic + potential)


def step_state(state: np.ndarray, force: float, dt: float = DT) -> np.ndarray:
    """One semi-implicit Euler step: velocities first, positions with the
    fresh velocities."""
    x_dd, theta_dd = dynamics(state, force)
    x, v, theta, omega = state
    v = v + dt * x_dd
    omega = omega + dt * theta_dd
    x = x + dt * v
    theta = theta + dt * omega
    return np.array([x, v, theta, omega])


class CartPole:
    """Reward 1 per surviving step minus a small effort cost; terminates on
    |angle| > 0.2 rad, |position| > 2.4 m, or the step cap. Observations
    are unit-scaled (state / OBS_SCALE)."""

    state_dim = 4
    action_dim = 1

    def __init__(self, seed: int, max_steps: int = 500):
        self.rng = np.random.default_rng(np.random.SeedSequence(seed))
        self.max_steps = max_steps
        self.state = np.zeros(4)
        self.steps = 0
        self.truncated = False

    def reset(self) -> np.ndarray:
        self.state = self.rng.uniform(-0.05, 0.05, 4)
        self.steps = 0
        self.truncated = False
        return self.state / OBS_SCALE

    def step(self, action: np.ndarray):
        force = FORCE_SCALE * np.tanh(float(action[0]))
        self.state = step_state(self.state, force)
        self.steps += 1
        fell = (abs(self.state[2]) > ANGLE_LIMIT
                or abs(self.state[0]) > POSITION_LIMIT)
        done = fell or self.steps >= self.max_steps
        # the step cap truncates rather than terminates: the value target
        # should still bootstrap there
        self.truncated = done and not fell
        alive = 0.0 if fell else 1.0
        reward = alive - EFFORT_COEFF * float(action[0]) ** 2
        return self.state / OBS_SCALE, reward, done
