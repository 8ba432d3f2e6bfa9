"""Training configuration and a plain Adam update over named tensors."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping

import torch


class GradientBlowUp(FloatingPointError):
    pass


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 1
    iterations: int = 0
    epochs: int = 0
    seed: int = 0
    log_every: int = 100
    lr_decay: str = "constant"  # or "linear": to zero over `iterations` steps

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.batch_size != 1:
            raise ValueError("batch_size is fixed at 1")
        if self.lr_decay not in ("constant", "linear"):
            raise ValueError(f"unknown lr_decay {self.lr_decay!r}")
        if self.lr_decay == "linear" and self.iterations < 1:
            raise ValueError("linear lr_decay needs iterations >= 1")

    def learning_rate_at(self, step: int) -> float:
        """Rate for the update that follows ``step`` completed updates."""
        if self.lr_decay == "constant":
            return self.learning_rate
        return self.learning_rate * max(0.0, 1 - step / self.iterations)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrainConfig":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: Mapping[str, torch.Tensor], grads: Mapping[str, torch.Tensor | None],
              state: AdamState, config: TrainConfig):
    """Bias-corrected Adam update, applied in place to ``params``.

    Raises GradientBlowUp naming the first parameter whose gradient is not finite.
    Missing (None) gradients are treated as zero.
    """
    for name, g in grads.items():
        if g is not None and not torch.isfinite(g).all():
            raise GradientBlowUp(f"gradient blow-up in parameter '{name}'")

    lr = config.learning_rate_at(state.step)
    state.step += 1
    b1, b2 = config.adam_beta1, config.adam_beta2
    c1 = 1 - b1 ** state.step
    c2 = 1 - b2 ** state.step
    with torch.no_grad():
        for name, p in params.items():
            g = grads.get(name)
            if g is None:
                g = torch.zeros_like(p)
            if name not in state.m:
                state.m[name] = torch.zeros_like(p)
                state.v[name] = torch.zeros_like(p)
            m, v = state.m[name], state.v[name]
            m.mul_(b1).add_(g, alpha=1 - b1)
            v.mul_(b2).addcmul_(g, g, value=1 - b2)
            denom = (v / c2).sqrt_().add_(config.adam_eps)
            p.addcdiv_(m, denom, value=-lr / c1)
    return params, state


def step_module(module: torch.nn.Module, state: AdamState, config: TrainConfig):
    params = dict(module.named_parameters())
    grads = {n: p.grad for n, p in params.items()}
    adam_step(params, grads, state, config)
    module.zero_grad(set_to_none=True)


