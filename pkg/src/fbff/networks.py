"""Function approximators: 3-layer MLP heads and fixed deep echo state
networks for the state/action histories."""
from __future__ import annotations

import numpy as np
from scipy import special as _special

from . import autodiff as ad
from .autodiff import Node, Registry
from .distributions import StudentTDiag

HIDDEN = 100
# hard exploration floor for the policy heads: sigma = floor + softplus(raw)
# so a head can never collapse to a near-deterministic policy it cannot sample
# its way out of; both heads share the floor so their entropy comparison stays
# fair, and model heads keep floor 0 (reconstruction should sharpen freely)
POLICY_SIGMA_FLOOR = 0.2
# raw scale floor: softplus(-12) ~ 6e-6 keeps log-densities finite if the
# optimizer runs a scale head far negative; inactive in healthy training
_RAW_SIGMA_FLOOR = -12.0
# softplus(1.8545) ~ 2.0 so heads start near nu = 3 (heavy-tailed but finite
# mean and variance)
_RAW_NU_INIT = 1.8545


def _uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(cols)
    return rng.uniform(-bound, bound, (rows, cols))


class MlpHead:
    """Three fully connected layers; layer normalization + swish after the
    first two; the third is the linear output layer."""

    def __init__(self, reg: Registry, prefix: str, in_dim: int, out_dim: int,
                 rng: np.random.Generator, hidden: int = HIDDEN):
        self.in_dim = in_dim
        self.out_dim = out_dim
        add = reg.add
        self.w1 = add(prefix + "/w1", _uniform(rng, hidden, in_dim))
        self.b1 = add(prefix + "/b1", np.zeros(hidden))
        self.g1 = add(prefix + "/ln1_gain", np.ones(hidden))
        self.h1 = add(prefix + "/ln1_bias", np.zeros(hidden))
        self.w2 = add(prefix + "/w2", _uniform(rng, hidden, hidden))
        self.b2 = add(prefix + "/b2", np.zeros(hidden))
        self.g2 = add(prefix + "/ln2_gain", np.ones(hidden))
        self.h2 = add(prefix + "/ln2_bias", np.zeros(hidden))
        self.w3 = add(prefix + "/w3", _uniform(rng, out_dim, hidden))
        self.b3 = add(prefix + "/b3", np.zeros(out_dim))
        self._names = [prefix + "/" + s for s in
                       ("w1", "b1", "ln1_gain", "ln1_bias",
                        "w2", "b2", "ln2_gain", "ln2_bias", "w3", "b3")]

    def forward(self, x: Node) -> Node:
        if x.value.size != self.in_dim:
            raise ValueError("input dim %d, expected %d"
                             % (x.value.size, self.in_dim))
        h = ad.swish(ad.layer_norm(
            ad.affine(self.w1.node, self.b1.node, x),
            self.g1.node, self.h1.node))
        h = ad.swish(ad.layer_norm(
            ad.affine(self.w2.node, self.b2.node, h),
            self.g2.node, self.h2.node))
        return ad.affine(self.w3.node, self.b3.node, h)

    def forward_values(self, x: np.ndarray,
                       weights: dict[str, np.ndarray] | None = None
                       ) -> np.ndarray:
        """Graph-free twin; weights may override (target networks)."""
        def get(i, own):
            return own.value if weights is None else weights[self._names[i]]
        h = _swish_values(_layer_norm_values(
            get(0, self.w1) @ x + get(1, self.b1), get(2, self.g1),
            get(3, self.h1)))
        h = _swish_values(_layer_norm_values(
            get(4, self.w2) @ h + get(5, self.b2), get(6, self.g2),
            get(7, self.h2)))
        return get(8, self.w3) @ h + get(9, self.b3)


def _layer_norm_values(v: np.ndarray, gain: np.ndarray,
                       bias: np.ndarray) -> np.ndarray:
    c = v - v.mean()
    return gain * c / np.sqrt((c * c).mean() + 1e-5) + bias


def _swish_values(v: np.ndarray) -> np.ndarray:
    return v * _special.expit(v)


class DistHead:
    """MLP emitting a StudentTDiag: (mu raw, sigma raw) from the output
    layer, a learned per-head scalar nu."""

    def __init__(self, reg: Registry, prefix: str, in_dim: int, dim: int,
                 rng: np.random.Generator, sigma_bias: float = 0.0,
                 sigma_floor: float = 0.0):
        self.dim = dim
        self.sigma_floor = sigma_floor
        self.mlp = MlpHead(reg, prefix, in_dim, 2 * dim, rng)
        # a negative bias starts the head sharper (more confident) than the
        # softplus(0) default without touching the weight distribution
        self.mlp.b3.node.value[dim:] = sigma_bias
        self.raw_nu = reg.add(prefix + "/raw_nu",
                              np.full((), _RAW_NU_INIT))
        self._nu_name = prefix + "/raw_nu"

    def forward(self, x: Node) -> StudentTDiag:
        raw = self.mlp.forward(x)

        def bw(g):
            return (np.concatenate([g, np.zeros(self.dim)]),)

        mu = Node(raw.value[:self.dim], (raw,), bw)

        def bw2(g):
            return (np.concatenate([np.zeros(self.dim), g]),)

        raw_sigma = Node(raw.value[self.dim:], (raw,), bw2)
        sigma = ad.softplus(ad.clamp_min(raw_sigma, _RAW_SIGMA_FLOOR))
        if self.sigma_floor > 0.0:
            sigma = ad.add(sigma, ad.constant(self.sigma_floor))
        nu = _nu_from_raw(self.raw_nu.node)
        return StudentTDiag(mu, sigma, nu)

    def forward_values(self, x: np.ndarray,
                       weights: dict[str, np.ndarray] | None = None
                       ) -> tuple[np.ndarray, np.ndarray, float]:
        raw = self.mlp.forward_values(x, weights)
        raw_nu = (self.raw_nu.value if weights is None
                  else weights[self._nu_name])
        sigma = self.sigma_floor + np.logaddexp(
            0.0, np.maximum(raw[self.dim:], _RAW_SIGMA_FLOOR))
        nu = 1.0 + 1e-3 + float(np.logaddexp(0.0, raw_nu))
        return raw[:self.dim], sigma, nu


def _nu_from_raw(raw: Node) -> Node:
    # nu = 1 + softplus(raw) + 1e-3 keeps the entropy finite
    return ad.add(ad.softplus(raw), ad.constant(1.0 + 1e-3))


class ValueHead:
    """MLP emitting one scalar."""

    def __init__(self, reg: Registry, prefix: str, in_dim: int,
                 rng: np.random.Generator):
        self.mlp = MlpHead(reg, prefix, in_dim, 1, rng)

    def forward(self, x: Node) -> Node:
        return ad.asum(self.mlp.forward(x))

    def forward_values(self, x: np.ndarray,
                       weights: dict[str, np.ndarray] | None = None) -> float:
        return float(self.mlp.forward_values(x, weights)[0])


class EchoState:
    """Stacked fixed-weight reservoirs; an untrained history encoder.

    Layer k reads the fresh state of layer k-1 (the raw input for layer 0);
    the returned feature is the concatenation of all layer states. Weights
    are never touched by the optimizer.
    """

    def __init__(self, in_dim: int, rng: np.random.Generator,
                 layers: int = 3, units: int = HIDDEN, rho: float = 0.5,
                 leak: float = 1.0):
        self.in_dim = in_dim
        self.units = units
        self.rho = rho
        self.leak = leak
        self.w_in: list[np.ndarray] = []
        self.w_rec: list[np.ndarray] = []
        for k in range(layers):
            cols = in_dim if k == 0 else units
            self.w_in.append(rng.uniform(-0.1, 0.1, (units, cols)))
            w = rng.standard_normal((units, units))
            sr = np.max(np.abs(np.linalg.eigvals(w)))
            self.w_rec.append(w * (rho / sr))
        self.state = [np.zeros(units) for _ in range(layers)]

    @property
    def feature_dim(self) -> int:
        return len(self.state) * self.units

    def reset(self) -> None:
        for h in self.state:
            h.fill(0.0)

    def step(self, x: np.ndarray) -> np.ndarray:
        inp = x
        for k in range(len(self.state)):
            fresh = np.tanh(self.w_in[k] @ inp + self.w_rec[k] @ self.state[k])
            self.state[k] = ((1.0 - self.leak) * self.state[k]
                             + self.leak * fresh)
            inp = self.state[k]
        return self.feature()

    def feature(self) -> np.ndarray:
        return np.concatenate(self.state)

    def clone(self) -> "EchoState":
        c = object.__new__(EchoState)
        c.in_dim, c.units, c.rho, c.leak = (self.in_dim, self.units,
                                            self.rho, self.leak)
        c.w_in = [w.copy() for w in self.w_in]
        c.w_rec = [w.copy() for w in self.w_rec]
        c.state = [h.copy() for h in self.state]
        return c

    def weights_map(self, prefix: str) -> dict[str, np.ndarray]:
        out = {}
        for k in range(len(self.state)):
            out["%s/w_in%d" % (prefix, k)] = self.w_in[k].copy()
            out["%s/w_rec%d" % (prefix, k)] = self.w_rec[k].copy()
        return out

    def load_weights(self, prefix: str, values: dict[str, np.ndarray]) -> None:
        for k in range(len(self.state)):
            self.w_in[k] = values["%s/w_in%d" % (prefix, k)].copy()
            self.w_rec[k] = values["%s/w_rec%d" % (prefix, k)].copy()
