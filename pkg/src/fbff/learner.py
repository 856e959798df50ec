"""Optimality-weighted losses, TD machinery, optimizer, target networks,
eligibility traces, and the per-step training update."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import distributions as dist
from . import policy as pol
from .autodiff import Node, Registry
from .networks import EchoState, ValueHead
from .world_model import WorldModel

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class Hyperparams:
    """Run-level constants; serialized with every run."""
    gamma: float = 0.99
    learning_rate: float = 3e-4
    beta_t: float = 10.0
    beta_z: float = 1e-2
    beta_a: float = 1e-4
    eta: float = 1e-4
    z_dim: int = 6
    rho: float = 0.5
    target_rate: float = 0.05
    trace_decay: float = 0.95
    tau_opt: float = 1.0
    grad_clip: float = 100.0

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.tau_opt <= 0.0:
            raise ValueError("tau_opt must be positive")
        if self.grad_clip < 0.0:
            raise ValueError("grad_clip must be nonnegative (0 disables)")


@dataclass
class Transition:
    """One environment step as consumed by the update."""
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    done: bool
    behavior_logpdf: float
    fb_selected: bool
    h_s: np.ndarray
    h_a: np.ndarray


class NanAbort(RuntimeError):
    """Raised when a loss or TD quantity goes non-finite; carries a
    diagnostic snapshot for the failure record."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


def td_error(r: float, v_s: float, v_next: float, done: bool,
             gamma: float) -> float:
    """delta = r + gamma V(s') (1 - done) - V(s); a detached coefficient."""
    return r + gamma * v_next * (0.0 if done else 1.0) - v_s


def optimality_coeff(delta: float, tau_opt: float) -> float:
    """g = tau (exp(delta/tau) - 1): unit slope at delta = 0, bounded below
    by -tau, unbounded above (optimistic weighting)."""
    return tau_opt * (np.exp(min(delta / tau_opt, ad.EXP_CLAMP)) - 1.0)


def trajectory_loss(g: float, model_loss: Node, log_pi: Node) -> Node:
    """-g (-L_model + log pi): descent raises the log-density of actions
    whose transition beat the value baseline and improves the model where
    it helped."""
    return ad.mul(ad.constant(-g),
                  ad.add(ad.neg(model_loss), log_pi))


def value_loss(g: float, v: Node) -> Node:
    """-g V: gradient wrt the value output is exactly -g."""
    return ad.mul(ad.constant(-g), v)


def total_loss(traj: Node, value: Node, model: Node, tau_opt: float) -> Node:
    """L_all = L_traj + L_value + tau L_model (exact sum)."""
    return ad.add(ad.add(traj, value),
                  ad.mul(ad.constant(tau_opt), model))


class AmsGrad:
    """Adaptive-moment optimizer with a non-decreasing second moment."""

    def __init__(self, lr: float, beta1: float = ADAM_BETA1,
                 beta2: float = ADAM_BETA2, eps: float = ADAM_EPS):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0

    def step(self, reg: Registry, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p in reg:
            g = grads.get(p.name)
            if g is None:
                continue
            p.m *= self.beta1
            p.m += (1.0 - self.beta1) * g
            p.v *= self.beta2
            p.v += (1.0 - self.beta2) * g * g
            np.maximum(p.vhat, p.v, out=p.vhat)
            p.node.value = p.node.value - self.lr * (p.m / bc1) / (
                np.sqrt(p.vhat / bc2) + self.eps)


def target_update(reg: Registry, target: dict[str, np.ndarray],
                  rate: float) -> None:
    """Exponential moving average toward the current parameters.

    Convex-combination form so rate 1 is an exact copy and rate 0 an
    exact no-op.
    """
    for p in reg:
        t = target[p.name]
        t *= 1.0 - rate
        t += rate * p.node.value


class EligibilityTraces:
    """Accumulating TD(lambda) traces over named gradients."""

    def __init__(self, decay: float):
        self.decay = decay
        self.e: dict[str, np.ndarray] = {}

    def reset(self) -> None:
        self.e.clear()

    def update(self, grads: dict[str, np.ndarray]) -> None:
        for name, arr in self.e.items():
            arr *= self.decay
        for name, g in grads.items():
            if name in self.e:
                self.e[name] += g
            else:
                self.e[name] = g.copy()


class Learner:
    """One parameter set, one environment: builds every head, owns the
    histories, and runs the per-step update."""

    def __init__(self, state_dim: int, action_dim: int, hp: Hyperparams,
                 seed: int, esn_layers: int = 3, esn_units: int = 100,
                 esn_leak: float = 1.0, value_init: float = 0.0):
        self.hp = hp
        self.state_dim = state_dim
        self.action_dim = action_dim
        ss = np.random.SeedSequence(seed)
        init_seed, esn_s_seed, esn_a_seed, run_seed = ss.spawn(4)
        init_rng = np.random.default_rng(init_seed)
        self.rng = np.random.default_rng(run_seed)

        self.esn_s = EchoState(state_dim, np.random.default_rng(esn_s_seed),
                               esn_layers, esn_units, hp.rho, esn_leak)
        self.esn_a = EchoState(action_dim, np.random.default_rng(esn_a_seed),
                               esn_layers, esn_units, hp.rho, esn_leak)

        self.reg = Registry()
        self.policy = pol.PolicyHeads(self.reg, state_dim, action_dim,
                                      self.esn_a.feature_dim, init_rng)
        self.value = ValueHead(self.reg, "value", state_dim, init_rng)
        # optimistic start for survival-style rewards: with the output bias
        # at r/(1-gamma), surviving transitions begin at delta ~ 0 instead
        # of feeding the exponential optimality weight a growing value gap
        self.reg["value/b3"].node.value[0] += value_init
        self.model = WorldModel(self.reg, state_dim, action_dim,
                                self.esn_s.feature_dim, hp.z_dim, init_rng)

        self.target = self.reg.values_map()
        self.opt = AmsGrad(hp.learning_rate)
        self.trace_pi = EligibilityTraces(hp.gamma * hp.trace_decay)
        self.trace_v = EligibilityTraces(hp.gamma * hp.trace_decay)

    # -- rollout side ------------------------------------------------------
    def begin_episode(self) -> None:
        self.esn_s.reset()
        self.esn_a.reset()
        self.trace_pi.reset()
        self.trace_v.reset()

    def act_train(self, s: np.ndarray):
        """Sample from the behavior policy b: the target-network composed
        policy. Returns (action, mixture log-density, fb_selected)."""
        p_fb, p_ff, _, _, _, w = self.policy.pair_values(
            s, self.esn_a.feature(), self.hp.beta_t, self.target)
        return pol.compose_and_sample(p_fb, p_ff, w, self.rng)

    def act_eval(self, s: np.ndarray, mode: str) -> np.ndarray:
        """Deterministic action from the current parameters."""
        p_fb, p_ff, _, _, _, w = self.policy.pair_values(
            s, self.esn_a.feature(), self.hp.beta_t)
        return pol.eval_action(p_fb, p_ff, w, mode)

    def advance_history(self, s: np.ndarray, a: np.ndarray) -> None:
        """Feed the histories after the transition: h_s consumes the
        observation, h_a only the executed action (so h_a survives state
        corruption untouched)."""
        self.esn_s.step(s)
        self.esn_a.step(a)

    # -- update side -------------------------------------------------------
    def _collect_grads(self) -> dict[str, np.ndarray]:
        out = {}
        for p in self.reg:
            if p.node.grad is not None:
                out[p.name] = p.node.grad
                p.node.grad = None
        return out

    def _reexpress_action(self, pair: pol.PolicyPair, a: np.ndarray,
                          fb_selected: bool) -> Node:
        """Put the executed action back on the current policy graph:
        a = mu + sigma t* with t* detached, through the head that the
        behavior draw selected. Value-identical to a up to rounding, and
        the model loss can reach the policy only through this node (then
        attenuated by the graph cut)."""
        head = pair.fb if fb_selected else pair.ff
        t_star = (a - head.mu.value) / head.sigma.value
        return ad.add(head.mu, ad.mul(head.sigma, ad.constant(t_star)))

    def train_step(self, tr: Transition) -> dict:
        hp = self.hp
        self.reg.zero_grad()

        pair = self.policy.pair(tr.s, tr.h_a, hp.beta_t)
        v_node = self.value.forward(ad.constant(tr.s))
        a_model = self._reexpress_action(pair, tr.a, tr.fb_selected)
        parts = self.model.loss(tr.s, tr.h_s, tr.s_next, a_model, pair,
                                hp.beta_z, hp.beta_a, hp.eta, self.rng)
        l_model = parts.total()
        log_pi = dist.mixture_logpdf(pair.fb, pair.ff, pair.w, tr.a)

        v_s = float(v_node.value)
        v_next = 0.0 if tr.done else self.value.forward_values(
            tr.s_next, self.target)
        delta = td_error(tr.r, v_s, v_next, tr.done, hp.gamma)
        g = optimality_coeff(delta, hp.tau_opt)

        scalars = {
            "delta": delta, "g": g, "w": pair.w, "d": pair.d,
            "h_fb": pair.h_fb, "h_ff": pair.h_ff,
            "log_pi": float(log_pi.value), "v": v_s,
            "loss_model_recon": float(parts.recon.value),
            "loss_model_kl": float(parts.kl_z.value),
            "loss_model_ce": float(parts.ce_policy.value),
        }
        scalars["loss_model"] = float(l_model.value)
        scalars["loss_traj"] = -g * (-scalars["loss_model"]
                                     + scalars["log_pi"])
        scalars["loss_value"] = -g * v_s
        if not all(np.isfinite(v) for v in scalars.values()):
            raise NanAbort("non-finite training quantity", scalars)

        # L_all = (g + tau) L_model - g log_pi - g V; the policy and value
        # gradients run through accumulating TD(lambda) traces, the model
        # term is applied directly (its coefficient g + tau is nonnegative
        # since g >= -tau)
        ad.backward(l_model)
        g_model = self._collect_grads()
        ad.backward(log_pi)
        g_pi = self._collect_grads()
        ad.backward(v_node)
        g_v = self._collect_grads()

        self.trace_pi.update(g_pi)
        self.trace_v.update(g_v)

        total: dict[str, np.ndarray] = {}
        coeff_model = g + hp.tau_opt
        for name, arr in g_model.items():
            total[name] = coeff_model * arr
        for trace in (self.trace_pi, self.trace_v):
            for name, arr in trace.e.items():
                contrib = (-g) * arr
                if name in total:
                    total[name] = total[name] + contrib
                else:
                    total[name] = contrib

        # global-norm cap: exponential optimality weights make rare large
        # deltas produce gradient spikes, and the max-corrected second
        # moment would remember them forever
        if hp.grad_clip > 0.0:
            norm = np.sqrt(sum(float((arr * arr).sum())
                               for arr in total.values()))
            if norm > hp.grad_clip:
                scale = hp.grad_clip / norm
                for name in total:
                    total[name] = total[name] * scale

        self.opt.step(self.reg, total)
        target_update(self.reg, self.target, hp.target_rate)
        return scalars

    # -- persistence -------------------------------------------------------
    def state_arrays(self) -> dict[str, np.ndarray]:
        out = self.reg.values_map()
        for name, arr in self.target.items():
            out["target/" + name] = arr.copy()
        out.update(self.esn_s.weights_map("esn_s"))
        out.update(self.esn_a.weights_map("esn_a"))
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        self.reg.load_values({n: arrays[n] for n in self.reg.names()})
        for name in self.target:
            self.target[name] = arrays["target/" + name].copy()
        self.esn_s.load_weights("esn_s", arrays)
        self.esn_a.load_weights("esn_a", arrays)
