"""Diagonal student-t distributions and their Monte Carlo divergences.

Every stochastic head in the package emits a StudentTDiag: independent
univariate student-t marginals with a shared scalar degrees-of-freedom.
Sampling draws an independent chi-square mixing variable per dimension so
that samples are consistent with the summed univariate log-density (a
shared mixing variable would give a multivariate-t instead).

Graph-building functions operate on Nodes; *_values twins operate on plain
arrays for behavior sampling, evaluation, and large-sample test oracles.
"""
from __future__ import annotations

import numpy as np
from scipy import special as _special

from . import autodiff as ad
from .autodiff import Node

_HALF_LN_PI = 0.5 * np.log(np.pi)


class StudentTDiag:
    """Location-scale diagonal student-t with learnable (mu, sigma, nu)."""

    __slots__ = ("mu", "sigma", "nu")

    def __init__(self, mu: Node, sigma: Node, nu: Node):
        if not np.all(sigma.value > 0.0):
            raise ValueError("sigma must be positive elementwise")
        if not np.all(nu.value > 1.0):
            raise ValueError("nu must exceed 1")
        self.mu = mu
        self.sigma = sigma
        self.nu = nu

    @property
    def dim(self) -> int:
        return self.mu.value.size

    def values(self) -> tuple[np.ndarray, np.ndarray, float]:
        return self.mu.value, self.sigma.value, float(self.nu.value)


def logpdf(d: StudentTDiag, x) -> Node:
    """Sum of univariate student-t log-densities; differentiable in mu,
    sigma, nu and (when x is a Node) in x."""
    x = ad.wrap(x)
    nu = d.nu
    y = ad.div(ad.sub(x, d.mu), d.sigma)
    half = ad.mul(ad.constant(0.5), nu)
    halfp = ad.add(half, ad.constant(0.5))
    # per-dimension: lgamma((nu+1)/2) - lgamma(nu/2) - ln sigma
    #                - (ln nu)/2 - (ln pi)/2 - (nu+1)/2 * log1p(y^2/nu)
    const = ad.sub(ad.sub(ad.lgamma(halfp), ad.lgamma(half)),
                   ad.add(ad.mul(ad.constant(0.5), ad.log(nu)),
                          ad.constant(_HALF_LN_PI)))
    tail = ad.mul(halfp, ad.log1p(ad.div(ad.square(y), nu)))
    per_dim = ad.sub(ad.sub(const, ad.log(d.sigma)), tail)
    return ad.asum(per_dim)


def sample_reparam(d: StudentTDiag, rng: np.random.Generator) -> Node:
    """x = mu + sigma * t with t a standard-t draw.

    Gradient flows to mu and sigma; the chi-square pathway uses the plain
    float nu, so nu learns only through the density (documented
    approximation, avoids differentiable gamma sampling).
    """
    nu = float(d.nu.value)
    z0 = rng.standard_normal(d.dim)
    q = rng.chisquare(nu, d.dim)
    t = z0 / np.sqrt(q / nu)
    return ad.add(d.mu, ad.mul(d.sigma, ad.constant(t)))


def entropy(d: StudentTDiag) -> float:
    """Closed-form differential entropy in nats (a plain float: entropies
    feed the mixture ratio, which is a detached coefficient)."""
    mu, sigma, nu = d.values()
    return entropy_values(sigma, nu)


def mixture_logpdf(fb: StudentTDiag, ff: StudentTDiag, w: float, x) -> Node:
    """log(w p_fb(x) + (1-w) p_ff(x)) by a max-shifted log-sum-exp.

    w is a plain coefficient: it is derived from entropies, not a free
    parameter, and gradient through it would double-count.
    """
    if not 0.0 <= w <= 1.0:
        raise ValueError("mixture weight outside [0, 1]: %r" % (w,))
    l_fb = logpdf(fb, x)
    l_ff = logpdf(ff, x)
    if w == 1.0:
        return l_fb
    if w == 0.0:
        return l_ff
    m = float(max(l_fb.value, l_ff.value))
    s = ad.add(ad.mul(ad.constant(w), ad.exp(ad.sub(l_fb, ad.constant(m)))),
               ad.mul(ad.constant(1.0 - w),
                      ad.exp(ad.sub(l_ff, ad.constant(m)))))
    return ad.add(ad.log(s), ad.constant(m))


def mc_kl(q: StudentTDiag, p: StudentTDiag, k: int,
          rng: np.random.Generator) -> Node:
    """Reparameterized Monte Carlo KL(q || p), k samples."""
    terms = []
    for _ in range(k):
        z = sample_reparam(q, rng)
        terms.append(ad.sub(logpdf(q, z), logpdf(p, z)))
    total = terms[0]
    for t in terms[1:]:
        total = ad.add(total, t)
    return ad.mul(ad.constant(1.0 / k), total) if k > 1 else total


def mc_cross_entropy(a: StudentTDiag, b: StudentTDiag, k: int,
                     rng: np.random.Generator,
                     detach_sample: bool = False) -> Node:
    """Monte Carlo H(a || b) = -E_a[log p_b]; samples reparameterized from
    a, so gradient reaches a through the samples and b through the density.
    With detach_sample the samples are treated as data and only b trains:
    one-directional distillation."""
    terms = []
    for _ in range(k):
        x = sample_reparam(a, rng)
        if detach_sample:
            x = ad.stop_gradient(x)
        terms.append(logpdf(b, x))
    total = terms[0]
    for t in terms[1:]:
        total = ad.add(total, t)
    return ad.mul(ad.constant(-1.0 / k), total)


# ---------------------------------------------------------------------------
# float twins: same math on plain arrays (no graph)

def logpdf_values(mu: np.ndarray, sigma: np.ndarray, nu: float,
                  x: np.ndarray) -> float:
    y = (x - mu) / sigma
    half = 0.5 * nu
    const = (_special.gammaln(half + 0.5) - _special.gammaln(half)
             - 0.5 * np.log(nu) - _HALF_LN_PI)
    per_dim = const - np.log(sigma) - (half + 0.5) * np.log1p(y * y / nu)
    return float(np.sum(per_dim))


def logpdf_values_batch(mu: np.ndarray, sigma: np.ndarray, nu: float,
                        xs: np.ndarray) -> np.ndarray:
    y = (xs - mu) / sigma
    half = 0.5 * nu
    const = (_special.gammaln(half + 0.5) - _special.gammaln(half)
             - 0.5 * np.log(nu) - _HALF_LN_PI)
    per_dim = const - np.log(sigma) - (half + 0.5) * np.log1p(y * y / nu)
    return np.sum(per_dim, axis=-1)


def sample_values(mu: np.ndarray, sigma: np.ndarray, nu: float,
                  rng: np.random.Generator, count: int | None = None):
    shape = mu.shape if count is None else (count, mu.size)
    z0 = rng.standard_normal(shape)
    q = rng.chisquare(nu, shape)
    return mu + sigma * z0 / np.sqrt(q / nu)


def entropy_values(sigma: np.ndarray, nu: float) -> float:
    half = 0.5 * nu
    per_dof = ((half + 0.5) * (_special.digamma(half + 0.5)
                               - _special.digamma(half))
               + 0.5 * np.log(nu)
               + _special.gammaln(half) + _special.gammaln(0.5)
               - _special.gammaln(half + 0.5))
    return float(np.sum(np.log(sigma)) + sigma.size * per_dof)
