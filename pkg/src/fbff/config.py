"""Flat key=value run configuration; unknown keys are errors."""
from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass

from .learner import Hyperparams


@dataclass
class RunConfig:
    """Everything a run needs; serialized next to its outputs, so a run is
    reproducible from this plus nothing."""
    env: str = "cartpole"
    episodes: int = 300
    seed: int = 0
    max_steps: int = 0          # 0 keeps the environment default cap
    checkpoint_interval: int = 100
    success_threshold: float = 450.0
    eval_mode: str = "composed"
    failure: bool = False
    failure_threshold: float = 2.0
    coupling: str = "descending"
    esn_leak: float = 1.0
    value_init: float = 0.0     # initial value-head output offset
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

    def hyperparams(self) -> Hyperparams:
        names = {f.name for f in dataclasses.fields(Hyperparams)}
        return Hyperparams(**{n: getattr(self, n) for n in names})

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            lines.append("%s=%s" % (f.name, _fmt(getattr(self, f.name))))
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:12]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(field: dataclasses.Field, raw: str):
    if field.type == "bool" or isinstance(field.default, bool):
        low = raw.strip().lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError("bad boolean for %s: %r" % (field.name, raw))
    if isinstance(field.default, int) and not isinstance(field.default, bool):
        return int(raw)
    if isinstance(field.default, float):
        return float(raw)
    return raw.strip()


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = dataclasses.replace(base) if base is not None else RunConfig()
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError("line %d is not key=value: %r" % (lineno, line))
        key, raw = body.split("=", 1)
        key = key.strip()
        if key not in fields:
            raise ValueError("unknown config key on line %d: %r"
                             % (lineno, key))
        setattr(cfg, key, _parse_value(fields[key], raw))
    return cfg


def load_config(path: str, base: RunConfig | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), base)


def apply_overrides(cfg: RunConfig, pairs: list[str]) -> RunConfig:
    """Apply key=value strings (CLI --set) on top of a config."""
    return parse_config("\n".join(pairs), cfg)
