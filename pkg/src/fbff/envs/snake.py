"""Planar snake driven by a chain of phase oscillators, with per-joint
stiffness actions and a quasi-static resistive locomotion model."""
from __future__ import annotations

import numpy as np
from scipy.special import expit

N_JOINTS = 8
N_LINKS = N_JOINTS + 1
ALPHA = 2.0
U_RATE = 10.0
U_BIAS = 1.0
U_AMP = np.pi / 4.0
DT = 0.02
KAPPA_S = 25.0
LINK_LENGTH = 0.12
DRAG_RATIO = 20.0
FIELD_LENGTH = 4.0
FIELD_WIDTH = 2.0
MAX_STEPS = 2000

OBS_DIM = 4 * N_JOINTS + 2
OBS_X_INDEX = 4 * N_JOINTS
OBS_Y_INDEX = 4 * N_JOINTS + 1


class CPG:
    """Coupled phase oscillators emitting joint reference angles
    theta_i = u_amp sin(zeta_i).

    The default coupling is a descending chain (each oscillator follows its
    head-side neighbor with per-edge weight 2 alpha), which locks to a
    head-to-tail traveling wave with lag u_bias per joint. Symmetric and
    all-to-all couplings are available for comparison; the symmetric chain
    settles into counter-running half-waves that produce no net motion.
    """

    def __init__(self, alpha: float = ALPHA, u_rate: float = U_RATE,
                 u_bias: float = U_BIAS, u_amp: float = U_AMP,
                 dt: float = DT, n: int = N_JOINTS,
                 coupling: str = "descending"):
        if coupling not in ("descending", "symmetric", "all_to_all"):
            raise ValueError("unknown coupling: %r" % (coupling,))
        self.alpha = alpha
        self.u_rate = u_rate
        self.u_bias = u_bias
        self.u_amp = u_amp
        self.dt = dt
        self.n = n
        self.coupling = coupling
        self.zeta = self.initial_phases()

    def initial_phases(self) -> np.ndarray:
        # theta = u_amp sin(zeta) = 0 pins zeta to multiples of pi; the
        # alternating profile launches as a zigzag whose lateral forces
        # cancel while the chain relaxes to its traveling wave
        return -np.arange(self.n) * np.pi

    def reset(self) -> None:
        self.zeta = self.initial_phases()

    def step(self) -> np.ndarray:
        z = self.zeta
        drift = np.full(self.n, self.u_rate)
        if self.coupling == "descending":
            drift[1:] += 2.0 * self.alpha * (z[:-1] - z[1:] - self.u_bias)
        elif self.coupling == "symmetric":
            drift[1:] += self.alpha * (z[:-1] - z[1:] - self.u_bias)
            drift[:-1] += self.alpha * (z[1:] - z[:-1] - self.u_bias)
        else:
            diff = z[None, :] - z[:, None] - self.u_bias
            np.fill_diagonal(diff, 0.0)
            drift += self.alpha * diff.sum(axis=1)
        self.zeta = z + drift * self.dt
        return self.references()

    def references(self) -> np.ndarray:
        return self.u_amp * np.sin(self.zeta)


def link_headings(heading: float, joints: np.ndarray) -> np.ndarray:
    return heading + np.concatenate([[0.0], np.cumsum(joints)])


def body_velocity(heading: float, joints: np.ndarray,
                  joint_rates: np.ndarray, link_length: float,
                  drag_ratio: float) -> np.ndarray:
    """Head velocity (x_dot, y_dot, heading_dot) from quasi-static force
    balance under anisotropic viscous drag.

    Minimizing the total dissipation over the three unknowns is the force
    and torque balance for linear drag; only the lateral/longitudinal drag
    ratio enters the solution. The normal matrix gets +1e-6 on its diagonal
    against the degenerate straight configuration.
    """
    phis = link_headings(heading, joints)
    u = np.stack([np.cos(phis), np.sin(phis)], axis=1)
    nrm = np.stack([-np.sin(phis), np.cos(phis)], axis=1)
    cum = np.concatenate([[0.0], np.cumsum(joint_rates)])
    ln = link_length

    # velocity of link midpoints: v_m = (x_dot, y_dot) + a_m q2 + b_m where
    # q2 is the heading rate and b_m collects the prescribed joint rates
    steps_a = -ln * nrm
    steps_b = -ln * cum[:, None] * nrm
    a = np.concatenate([[[0.0, 0.0]], np.cumsum(steps_a[:-1], axis=0)]) \
        - 0.5 * ln * nrm
    b = np.concatenate([[[0.0, 0.0]], np.cumsum(steps_b[:-1], axis=0)]) \
        - 0.5 * ln * cum[:, None] * nrm

    c_lon, c_lat = 1.0, drag_ratio
    normal = np.zeros((3, 3))
    rhs = np.zeros(3)
    for c, d in ((c_lon, u), (c_lat, nrm)):
        j = np.column_stack([d[:, 0], d[:, 1], (a * d).sum(axis=1)])
        k = (b * d).sum(axis=1)
        normal += c * ln * (j.T @ j)
        rhs -= c * ln * (j.T @ k)
    # distributed lateral drag of a rotating link
    rot = c_lat * ln ** 3 / 12.0
    normal[2, 2] += rot * len(phis)
    rhs[2] -= rot * cum.sum()
    normal += 1e-6 * np.eye(3)
    return np.linalg.solve(normal, rhs)


class Snake:
    """Eight joints track the oscillator references with stiffness-scaled
    first-order dynamics; reward is -|y|; the episode ends outside the
    field or at the step cap.

    Observation (34): references theta, reference rates, torque proxies
    k (theta - tracked), stiffness k, head x, head y.
    """

    state_dim = OBS_DIM
    action_dim = N_JOINTS

    def __init__(self, seed: int, max_steps: int = MAX_STEPS,
                 field_length: float = FIELD_LENGTH,
                 field_width: float = FIELD_WIDTH,
                 link_length: float = LINK_LENGTH,
                 drag_ratio: float = DRAG_RATIO,
                 kappa_s: float = KAPPA_S, coupling: str = "descending",
                 u_amp: float = U_AMP):
        del seed  # reset is deterministic; signature matches the other envs
        self.max_steps = max_steps
        self.field_length = field_length
        self.field_width = field_width
        self.link_length = link_length
        self.drag_ratio = drag_ratio
        self.kappa_s = kappa_s
        self.cpg = CPG(coupling=coupling, u_amp=u_amp)
        self.reset()

    def reset(self) -> np.ndarray:
        self.cpg.reset()
        self.theta_ref = self.cpg.references()
        self.theta_ref_prev = self.theta_ref.copy()
        self.tracked = np.zeros(N_JOINTS)
        self.k = np.full(N_JOINTS, 0.5)
        self.x = 0.0
        self.y = 0.0
        self.heading = 0.0
        self.steps = 0
        self.truncated = False
        return self._obs()

    def _obs(self) -> np.ndarray:
        rate = (self.theta_ref - self.theta_ref_prev) / self.cpg.dt
        torque = self.k * (self.theta_ref - self.tracked)
        return np.concatenate([self.theta_ref, rate, torque, self.k,
                               [self.x, self.y]])

    def step(self, action: np.ndarray):
        self.k = expit(np.asarray(action, dtype=np.float64))
        self.theta_ref_prev = self.theta_ref
        self.theta_ref = self.cpg.step()
        rates = self.kappa_s * self.k * (self.theta_ref - self.tracked)
        vel = body_velocity(self.heading, self.tracked, rates,
                            self.link_length, self.drag_ratio)
        dt = self.cpg.dt
        self.x += vel[0] * dt
        self.y += vel[1] * dt
        self.heading += vel[2] * dt
        self.tracked = self.tracked + rates * dt
        self.steps += 1
        reward = -abs(self.y)
        out = (abs(self.x) > self.field_length
               or abs(self.y) > self.field_width)
        done = out or self.steps >= self.max_steps
        self.truncated = done and not out
        return self._obs(), reward, done
