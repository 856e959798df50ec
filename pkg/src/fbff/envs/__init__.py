"""Native environments and the sensing-failure wrapper."""
from .bandit import QuadraticBandit
from .cartpole import CartPole
from .failure import FailureWrapper
from .snake import CPG, Snake

__all__ = ["QuadraticBandit", "CartPole", "FailureWrapper", "CPG", "Snake"]


def make_env(name: str, seed: int, **kwargs):
    if name == "cartpole":
        return CartPole(seed, **kwargs)
    if name == "snake":
        return Snake(seed, **kwargs)
    if name == "bandit":
        return QuadraticBandit(seed, **kwargs)
    raise ValueError("unknown environment: %r" % (name,))
