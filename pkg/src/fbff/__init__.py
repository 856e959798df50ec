"""Mixed feedback/feedforward policy optimization with a shared world model."""
from __future__ import annotations

from .autodiff import Node, Parameter, Registry, backward, grad_check
from .config import RunConfig, load_config, parse_config
from .distributions import StudentTDiag, mixture_logpdf
from .learner import Hyperparams, Learner, NanAbort, Transition
from .policy import mixture_ratio

__all__ = [
    "Node", "Parameter", "Registry", "backward", "grad_check",
    "RunConfig", "load_config", "parse_config",
    "StudentTDiag", "mixture_logpdf",
    "Hyperparams", "Learner", "NanAbort", "Transition",
    "mixture_ratio",
]
