"""Cart-pole, phase-oscillator snake, quadratic bandit, failure wrapper."""
from __future__ import annotations

import numpy as np
import pytest
from scipy.special import expit

from fbff.envs.bandit import QuadraticBandit
from fbff.envs import cartpole
from fbff.envs.cartpole import (ANGLE_LIMIT, POSITION_LIMIT, CartPole,
                                energy, step_state)
from fbff.envs.failure import FailureWrapper
from fbff.envs.snake import (CPG, N_JOINTS, OBS_DIM, OBS_X_INDEX,
                             OBS_Y_INDEX, U_AMP, Snake, body_velocity)


# -- cart-pole ----------------------------------------------------------------

def test_cartpole_upright_equilibrium_is_fixed_point():
    out = step_state(np.zeros(4), 0.0)
    assert np.array_equal(out, np.zeros(4))


def test_cartpole_small_tilt_grows_and_matches_fine_integration():
    start = np.array([0.0, 0.0, 0.01, 0.0])
    coarse = step_state(start, 0.0)
    fine = start
    for _ in range(2000):
        fine = step_state(fine, 0.0, dt=1e-5)
    assert coarse[2] > 0.01
    assert fine[2] > 0.01
    assert abs(coarse[2] - fine[2]) < 1e-4


def test_cartpole_energy_drift_scales_with_dt():
    start = np.array([0.0, 0.0, 0.1, 0.0])
    e0 = energy(start)

    def drift(dt, steps):
        s = start
        for _ in range(steps):
            s = step_state(s, 0.0, dt=dt)
        return abs(energy(s) - e0)

    coarse = drift(0.02, 100)
    fine = drift(1e-4, 20000)
    assert coarse < 0.05
    assert fine < coarse / 50.0


def test_cartpole_reset_bounds_and_seeding():
    a, b = CartPole(5), CartPole(5)
    for _ in range(3):
        oa, ob = a.reset(), b.reset()
        assert np.array_equal(oa, ob)
        assert np.all(np.abs(a.state) <= 0.05)
        assert oa == pytest.approx(a.state / cartpole.OBS_SCALE)
    assert not np.array_equal(CartPole(6).reset(), CartPole(7).reset())


def test_cartpole_observation_components_are_unit_scaled():
    # the limits themselves map to exactly 1 in observation space
    env = CartPole(0)
    env.reset()
    env.state = np.array([POSITION_LIMIT, 2.0, ANGLE_LIMIT, 2.0])
    assert env.state / cartpole.OBS_SCALE == pytest.approx(np.ones(4))


def test_cartpole_fall_ends_episode_without_reward():
    env = CartPole(0)
    env.reset()
    env.state = np.array([0.0, 0.0, 0.21, 0.0])
    _, reward, done = env.step(np.zeros(1))
    assert done and reward == 0.0 and not env.truncated


def test_cartpole_step_cap_truncates_with_reward():
    env = CartPole(0, max_steps=3)
    env.reset()
    env.state = np.zeros(4)
    for i in range(3):
        _, reward, done = env.step(np.zeros(1))
        assert reward == 1.0
        assert done == (i == 2)
    assert env.truncated


def test_cartpole_perfect_balance_scores_the_cap():
    env = CartPole(0)
    env.reset()
    env.state = np.zeros(4)
    score = 0.0
    done = False
    while not done:
        _, reward, done = env.step(np.zeros(1))
        score += reward
    assert score == 500.0 and env.truncated


def test_cartpole_replay_is_bitwise():
    def run(seed):
        env = CartPole(seed)
        obs = [env.reset()]
        for i in range(50):
            o, _, done = env.step(np.array([np.sin(0.1 * i)]))
            obs.append(o)
            if done:
                break
        return obs

    for oa, ob in zip(run(11), run(11)):
        assert np.array_equal(oa, ob)


# -- phase oscillators ----------------------------------------------------------

def test_cpg_decoupled_rate():
    cpg = CPG(alpha=0.0)
    before = cpg.zeta.copy()
    cpg.step()
    assert cpg.zeta - before == pytest.approx(np.full(N_JOINTS, 0.2),
                                              abs=1e-12)


def test_cpg_worked_update_from_zero_phases():
    # at zeta = 0: interior drift = 10 + 2*2*(0 - 0 - 1) = 6, so
    # delta zeta = 0.12; the head joint is uncoupled and moves 0.2
    cpg = CPG()
    cpg.zeta = np.zeros(N_JOINTS)
    cpg.step()
    assert cpg.zeta[0] == pytest.approx(0.2, abs=1e-12)
    assert cpg.zeta[1:] == pytest.approx(np.full(N_JOINTS - 1, 0.12),
                                         abs=1e-12)


def test_cpg_references_bounded_by_amplitude():
    cpg = CPG()
    for _ in range(10_000):
        theta = cpg.step()
        assert np.max(np.abs(theta)) <= U_AMP


def test_cpg_descending_chain_locks_to_traveling_wave():
    cpg = CPG()
    for _ in range(2000):
        cpg.step()
    lags = cpg.zeta[:-1] - cpg.zeta[1:]
    assert lags == pytest.approx(np.full(N_JOINTS - 1, 1.0), abs=1e-6)


def test_cpg_reset_restores_launch_phases():
    cpg = CPG()
    for _ in range(5):
        cpg.step()
    cpg.reset()
    assert np.array_equal(cpg.zeta, -np.arange(N_JOINTS) * np.pi)


def test_cpg_rejects_unknown_coupling():
    with pytest.raises(ValueError):
        CPG(coupling="ring")


# -- locomotion model ------------------------------------------------------------

def test_body_velocity_mirror_antisymmetry():
    rng = np.random.default_rng(2)
    for _ in range(20):
        heading = rng.uniform(-np.pi, np.pi)
        joints = rng.uniform(-0.7, 0.7, N_JOINTS)
        rates = rng.normal(size=N_JOINTS)
        v = body_velocity(heading, joints, rates, 0.12, 20.0)
        m = body_velocity(-heading, -joints, -rates, 0.12, 20.0)
        assert m[0] == pytest.approx(v[0], rel=1e-9, abs=1e-12)
        assert m[1] == pytest.approx(-v[1], rel=1e-9, abs=1e-12)
        assert m[2] == pytest.approx(-v[2], rel=1e-9, abs=1e-12)


def test_body_velocity_straight_body_at_rest_is_zero():
    v = body_velocity(0.3, np.zeros(N_JOINTS), np.zeros(N_JOINTS),
                      0.12, 20.0)
    assert v == pytest.approx(np.zeros(3), abs=1e-12)


# -- snake ------------------------------------------------------------------------

def test_snake_observation_layout():
    env = Snake(0)
    obs = env.reset()
    assert obs.shape == (OBS_DIM,)
    assert OBS_DIM == 34
    assert (OBS_X_INDEX, OBS_Y_INDEX) == (32, 33)
    assert (Snake.state_dim, Snake.action_dim) == (34, 8)
    # launch phases are multiples of pi, so references start at numerical 0
    assert np.max(np.abs(obs[0:8])) < 1e-13    # references
    assert np.array_equal(obs[8:16], np.zeros(8))   # rates
    assert np.max(np.abs(obs[16:24])) < 1e-13  # torque proxies
    assert np.array_equal(obs[24:32], np.full(8, 0.5))  # stiffness
    assert obs[32] == 0.0 and obs[33] == 0.0


def test_snake_stiffness_is_sigmoid_of_action():
    env = Snake(0)
    env.reset()
    action = np.linspace(-3, 3, N_JOINTS)
    obs, _, _ = env.step(action)
    assert np.array_equal(obs[24:32], expit(action))
    assert np.all(obs[24:32] > 0) and np.all(obs[24:32] < 1)


def test_snake_reward_is_negative_abs_lateral():
    env = Snake(0)
    env.reset()
    for _ in range(10):
        _, reward, _ = env.step(np.zeros(N_JOINTS))
        assert reward == -abs(env.y)
        assert reward <= 0.0


def test_snake_straight_body_stays_on_axis():
    # zero amplitude keeps the configuration mirror-symmetric forever
    env = Snake(0, u_amp=0.0)
    env.reset()
    for _ in range(200):
        env.step(np.zeros(N_JOINTS))
    assert abs(env.y) < 1e-9


def test_snake_default_gait_moves_forward():
    env = Snake(0)
    env.reset()
    for _ in range(300):
        _, _, done = env.step(np.zeros(N_JOINTS))
        assert abs(env.y) < 0.3
        if done:
            break
    assert env.x > 1.0


def test_snake_field_exit_terminates():
    env = Snake(0, field_length=0.05)
    env.reset()
    done = False
    for _ in range(2000):
        _, _, done = env.step(np.zeros(N_JOINTS))
        if done:
            break
    assert done and abs(env.x) > 0.05 and not env.truncated


def test_snake_step_cap_truncates():
    env = Snake(0, max_steps=5)
    env.reset()
    for i in range(5):
        _, _, done = env.step(np.zeros(N_JOINTS))
        assert done == (i == 4)
    assert env.truncated


def test_snake_replay_is_bitwise():
    def run():
        env = Snake(0)
        obs = [env.reset()]
        rng = np.random.default_rng(3)
        for _ in range(50):
            o, _, _ = env.step(rng.normal(size=N_JOINTS))
            obs.append(o)
        return obs

    for oa, ob in zip(run(), run()):
        assert np.array_equal(oa, ob)


# -- failure wrapper ---------------------------------------------------------------

def test_failure_wrapper_identity_when_predicate_false():
    bare = Snake(0)
    wrapped = FailureWrapper(Snake(0), predicate=lambda x, y: False)
    ob, ow = bare.reset(), wrapped.reset()
    assert np.array_equal(ob, ow)
    for _ in range(20):
        a = np.full(N_JOINTS, 0.1)
        ob = bare.step(a)[0]
        ow = wrapped.step(a)[0]
        assert np.array_equal(ob, ow)


def test_failure_wrapper_freezes_pose_when_predicate_true():
    wrapped = FailureWrapper(Snake(0), predicate=lambda x, y: True)
    wrapped.reset()
    for _ in range(100):
        obs, _, _ = wrapped.step(np.zeros(N_JOINTS))
        assert obs[OBS_X_INDEX] == 0.0 and obs[OBS_Y_INDEX] == 0.0
    assert wrapped.env.x > 0.2  # the true simulation kept moving


def test_failure_wrapper_freeze_holds_last_healthy_pose():
    flag = [False]
    wrapped = FailureWrapper(Snake(0), predicate=lambda x, y: flag[0])
    wrapped.reset()
    for _ in range(50):
        obs, _, _ = wrapped.step(np.zeros(N_JOINTS))
    healthy = (obs[OBS_X_INDEX], obs[OBS_Y_INDEX])
    assert healthy[0] == wrapped.env.x
    flag[0] = True
    for _ in range(30):
        obs, _, _ = wrapped.step(np.zeros(N_JOINTS))
        assert (obs[OBS_X_INDEX], obs[OBS_Y_INDEX]) == healthy
    flag[0] = False
    obs, _, _ = wrapped.step(np.zeros(N_JOINTS))
    assert obs[OBS_X_INDEX] == wrapped.env.x != healthy[0]


def test_failure_wrapper_default_predicate_unfreezes_past_threshold():
    wrapped = FailureWrapper(Snake(0), threshold=0.5)
    wrapped.reset()
    released = False
    for _ in range(2000):
        obs, _, done = wrapped.step(np.zeros(N_JOINTS))
        if wrapped.env.x < 0.5:
            assert obs[OBS_X_INDEX] == 0.0
        else:
            released = True
            assert obs[OBS_X_INDEX] == wrapped.env.x
        if done:
            break
    assert released


def test_failure_wrapper_never_touches_the_simulation():
    bare = Snake(0)
    wrapped = FailureWrapper(Snake(0), predicate=lambda x, y: True)
    bare.reset()
    wrapped.reset()
    for _ in range(50):
        a = np.full(N_JOINTS, -0.2)
        bare.step(a)
        wrapped.step(a)
    assert (bare.x, bare.y, bare.heading) == (wrapped.env.x, wrapped.env.y,
                                              wrapped.env.heading)


def test_failure_wrapper_delegates_dims_and_truncation():
    env = Snake(0, max_steps=2)
    wrapped = FailureWrapper(env)
    wrapped.reset()
    assert (wrapped.state_dim, wrapped.action_dim) == (34, 8)
    wrapped.step(np.zeros(N_JOINTS))
    wrapped.step(np.zeros(N_JOINTS))
    assert wrapped.truncated == env.truncated


# -- bandit -----------------------------------------------------------------------

def test_bandit_one_step_episode():
    env = QuadraticBandit(0)
    assert np.array_equal(env.reset(), np.ones(1))
    obs, reward, done = env.step(np.array([0.3]))
    assert np.array_equal(obs, np.ones(1))
    assert reward == -0.3 ** 2
    assert done and not env.truncated
    assert (QuadraticBandit.state_dim, QuadraticBandit.action_dim) == (1, 1)


def test_bandit_reward_peaks_at_zero_action():
    env = QuadraticBandit(0)
    env.reset()
    assert env.step(np.zeros(1))[1] == 0.0
