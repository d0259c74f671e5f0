"""AdamW with bias correction and decoupled weight decay."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from jafar.core.tensor import Array, Tensor
from jafar.models.error_model import NonFiniteGradient, ValidationFailure


class AdamWConfig(BaseModel):
    lr: float = Field(2e-4, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    eps: float = Field(1e-8, gt=0)
    weight_decay: float = Field(0.0, ge=0)

    model_config = ConfigDict(frozen=True)


@dataclass(slots=True)
class AdamWState:
    m: dict[str, Array] = field(default_factory=dict)
    v: dict[str, Array] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def zeros(cls, params: Mapping[str, Tensor]) -> AdamWState:
        return cls(
            m={name: np.zeros_like(p.data) for name, p in params.items()},
            v={name: np.zeros_like(p.data) for name, p in params.items()},
        )


def adamw_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, Array],
    state: AdamWState,
    cfg: AdamWConfig,
    t: int,
) -> AdamWState:
    """Update ``params`` in place for step ``t`` (1-based)."""
    if t < 1:
        raise ValidationFailure(f"adamw_step: step index must be >= 1, got {t}")

    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"gradient of '{name}' contains NaN or Inf")

    c1: float = 1.0 - cfg.beta1**t
    c2: float = 1.0 - cfg.beta2**t

    for name, p in params.items():
        g: Array = grads[name].astype(p.dtype, copy=False)
        m: Array = state.m[name]
        v: Array = state.v[name]

        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * np.square(g)

        update: Array = (m / c1) / (np.sqrt(v / c2) + cfg.eps)

        if cfg.weight_decay:
            update = update + cfg.weight_decay * p.data

        p.data -= (cfg.lr * update).astype(p.dtype, copy=False)

    state.t = t

    return state
