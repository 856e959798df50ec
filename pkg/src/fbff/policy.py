"""The feedback policy pi_fb(a|s), the feedforward policy pi_ff(a|h_a),
the confidence-based mixture ratio, and composed sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Node, Registry
from . import autodiff as ad
from . import distributions as dist
from .distributions import StudentTDiag
from .networks import DistHead, POLICY_SIGMA_FLOOR


def mixture_ratio(h_fb: float, h_ff: float, d: float, beta_t: float) -> float:
    """w = softmax over (-H_fb d beta_t, -H_ff d beta_t), first component.

    A plain coefficient: the higher-confidence (lower-entropy) policy gets
    the larger share, the contrast scaled by how far the two means are
    apart. Computed with max-subtraction so saturated cases stay finite.
    """
    if not np.isfinite(h_fb) or not np.isfinite(h_ff):
        raise ValueError("entropies must be finite, got %r, %r"
                         % (h_fb, h_ff))
    if d < 0:
        raise ValueError("mean distance must be nonnegative")
    if beta_t <= 0:
        raise ValueError("inverse temperature must be positive")
    e_fb = -h_fb * d * beta_t
    e_ff = -h_ff * d * beta_t
    m = max(e_fb, e_ff)
    a = np.exp(e_fb - m)
    return float(a / (a + np.exp(e_ff - m)))


@dataclass
class PolicyPair:
    """Both action heads evaluated at one time step, plus the detached
    quantities derived from them."""
    fb: StudentTDiag
    ff: StudentTDiag
    h_fb: float
    h_ff: float
    d: float
    w: float


class PolicyHeads:
    """Owns the FB and FF distribution heads."""

    # the untrained FF head starts wide: an open-loop policy that has not
    # imitated anything yet should advertise low confidence, so the
    # mixture leans on feedback until the skill transfer catches up
    FB_SIGMA_BIAS = 0.0
    FF_SIGMA_BIAS = 1.0

    def __init__(self, reg: Registry, state_dim: int, action_dim: int,
                 h_a_dim: int, rng: np.random.Generator):
        self.action_dim = action_dim
        self.fb = DistHead(reg, "policy_fb", state_dim, action_dim, rng,
                           sigma_bias=self.FB_SIGMA_BIAS,
                           sigma_floor=POLICY_SIGMA_FLOOR)
        self.ff = DistHead(reg, "policy_ff", h_a_dim, action_dim, rng,
                           sigma_bias=self.FF_SIGMA_BIAS,
                           sigma_floor=POLICY_SIGMA_FLOOR)

    def pair(self, s: np.ndarray, h_a: np.ndarray,
             beta_t: float) -> PolicyPair:
        """Forward both heads on the current parameters and derive the
        mixture ratio from their values (entropies, mean distance and w are
        detached coefficients)."""
        fb = self.fb.forward(ad.constant(s))
        ff = self.ff.forward(ad.constant(h_a))
        h_fb = dist.entropy(fb)
        h_ff = dist.entropy(ff)
        d = float(np.linalg.norm(fb.mu.value - ff.mu.value))
        w = mixture_ratio(h_fb, h_ff, d, beta_t)
        return PolicyPair(fb, ff, h_fb, h_ff, d, w)

    def pair_values(self, s: np.ndarray, h_a: np.ndarray, beta_t: float,
                    weights: dict[str, np.ndarray] | None = None):
        """Graph-free twin returning ((mu, sigma, nu) x2, entropies, d, w);
        used for the behavior sampler (target weights) and evaluation."""
        p_fb = self.fb.forward_values(s, weights)
        p_ff = self.ff.forward_values(h_a, weights)
        h_fb = dist.entropy_values(p_fb[1], p_fb[2])
        h_ff = dist.entropy_values(p_ff[1], p_ff[2])
        d = float(np.linalg.norm(p_fb[0] - p_ff[0]))
        w = mixture_ratio(h_fb, h_ff, d, beta_t)
        return p_fb, p_ff, h_fb, h_ff, d, w


def compose_and_sample(p_fb, p_ff, w: float, rng: np.random.Generator):
    """Draw from the two-component mixture: u < w picks FB.

    Returns (action, mixture log-density at the action, fb_selected).
    Operates on plain parameter triples; this is the behavior path.
    """
    u = rng.uniform()
    fb_selected = u < w
    src = p_fb if fb_selected else p_ff
    a = dist.sample_values(src[0], src[1], src[2], rng)
    return a, mixture_logpdf_values(p_fb, p_ff, w, a), fb_selected


def mixture_logpdf_values(p_fb, p_ff, w: float, x: np.ndarray) -> float:
    l_fb = dist.logpdf_values(*p_fb, x)
    l_ff = dist.logpdf_values(*p_ff, x)
    if w == 1.0:
        return l_fb
    if w == 0.0:
        return l_ff
    m = max(l_fb, l_ff)
    return float(np.log(w * np.exp(l_fb - m) + (1.0 - w) * np.exp(l_ff - m))
                 + m)


def eval_action(p_fb, p_ff, w: float, mode: str) -> np.ndarray:
    """Deterministic evaluation action.

    fb/ff modes take the head's median (its location); composed collapses
    the mixture to its mean, w mu_fb + (1-w) mu_ff.
    """
    if mode == "fb":
        return p_fb[0].copy()
    if mode == "ff":
        return p_ff[0].copy()
    if mode == "composed":
        return w * p_fb[0] + (1.0 - w) * p_ff[0]
    raise ValueError("unknown evaluation mode: %r" % (mode,))
