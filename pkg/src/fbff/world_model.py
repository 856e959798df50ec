"""Variational latent dynamics: encoder, time-dependent prior, latent
dynamics with a graph-cut action, decoder, and the model loss."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import distributions as dist
from .autodiff import Node, Registry
from .distributions import StudentTDiag
from .networks import DistHead, MlpHead
from .policy import PolicyPair


@dataclass
class Belief:
    """Latent sample and history features carried along a rollout."""
    z: np.ndarray
    h_s: np.ndarray
    h_a: np.ndarray


@dataclass
class ModelLossParts:
    """The three terms whose weighted sum is the model loss."""
    recon: Node
    kl_z: Node
    ce_policy: Node
    w: float
    beta_z: float
    beta_a: float

    def total(self) -> Node:
        # L_model = recon + beta_z KL + beta_a w^2 CE; the w^2 coefficient
        # shifts regularization onto whichever policy currently drives
        # behavior (w near 1: FF is pulled toward FB)
        out = ad.add(self.recon,
                     ad.mul(ad.constant(self.beta_z), self.kl_z))
        return ad.add(out, ad.mul(ad.constant(self.beta_a * self.w * self.w),
                                  self.ce_policy))


def graph_cut(a: Node, eta: float) -> Node:
    """Value passes through bitwise; gradient is attenuated to eta.

    Keeps the dynamics model conditioned on the real action while mostly
    preventing the policy from being trained to make prediction easy.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    return ad.grad_scale(a, eta)


class WorldModel:
    """Encoder q(z|s,h_s), prior p(z|h_s), dynamics z' = f(z, a),
    decoder p(s'|z')."""

    def __init__(self, reg: Registry, state_dim: int, action_dim: int,
                 h_s_dim: int, z_dim: int, rng: np.random.Generator):
        self.state_dim = state_dim
        self.z_dim = z_dim
        self.encoder = DistHead(reg, "model_enc", state_dim + h_s_dim,
                                z_dim, rng)
        self.prior = DistHead(reg, "model_prior", h_s_dim, z_dim, rng)
        self.dynamics = MlpHead(reg, "model_dyn", z_dim + action_dim,
                                z_dim, rng)
        self.decoder = DistHead(reg, "model_dec", z_dim, state_dim, rng)

    def encode(self, s: np.ndarray, h_s: np.ndarray) -> StudentTDiag:
        return self.encoder.forward(ad.constant(np.concatenate([s, h_s])))

    def prior_dist(self, h_s: np.ndarray) -> StudentTDiag:
        return self.prior.forward(ad.constant(h_s))

    def latent_dynamics(self, z: Node, a_cut: Node) -> Node:
        return self.dynamics.forward(ad.concat([z, a_cut]))

    def decode(self, z_next: Node) -> StudentTDiag:
        return self.decoder.forward(z_next)

    def loss(self, s: np.ndarray, h_s: np.ndarray, s_next: np.ndarray,
             a_model: Node, pair: PolicyPair, beta_z: float, beta_a: float,
             eta: float, rng: np.random.Generator) -> ModelLossParts:
        """Single-sample variational bound pieces for one transition.

        a_model is the executed action re-expressed on the current policy
        graph (see Learner); it is passed through the graph cut here. One z
        is sampled from q and shared by the reconstruction and KL terms.
        """
        q = self.encode(s, h_s)
        p = self.prior_dist(h_s)
        z = dist.sample_reparam(q, rng)
        kl = ad.sub(dist.logpdf(q, z), dist.logpdf(p, z))
        z_next = self.latent_dynamics(z, graph_cut(a_model, eta))
        recon = ad.neg(dist.logpdf(self.decode(z_next), s_next))
        # skill transfer is one-directional: the open-loop head distills the
        # feedback head, whose samples here are data, not a gradient path -
        # otherwise raising beta_a drags the trained policy toward its
        # imitator and destabilizes late training
        ce = dist.mc_cross_entropy(pair.fb, pair.ff, 1, rng,
                                   detach_sample=True)
        return ModelLossParts(recon, kl, ce, pair.w, beta_z, beta_a)
