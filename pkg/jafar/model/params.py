"""Learnable JAFAR parameters.

Parameter names and their order are part of the checkpoint format:

    w_in.weight (3, d)            w_in.bias (d)
    e_theta.0.weight (d, d, 3, 3) e_theta.0.bias (d)
    e_theta.1.weight (d, d, 3, 3) e_theta.1.bias (d)
    q_enc.weight (d, d, 3, 3)     q_enc.bias (d)
    k_enc.weight (d, d, 3, 3)     k_enc.bias (d)        [not linear_projection]
    sft.gamma.weight (C, d)       sft.gamma.bias (d)    [sft]
    sft.beta.weight (C, d)        sft.beta.bias (d)     [sft]
    key_mix.weight (d + C, d)     key_mix.bias (d)      [concat]
    key_proj.weight (C, d)        key_proj.bias (d)     [linear_projection]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, get_args

import numpy as np
from numpy.typing import DTypeLike

from jafar.core.rng import Rng
from jafar.core.tensor import Tensor
from jafar.encoder.stub_encoder import DEFAULT_ENCODER_SEED, DEFAULT_PATCH
from jafar.models.error_model import ConfigError, StrategyMismatch
from jafar.nn.attention import head_dim_for
from jafar.nn.rope import DEFAULT_BASE_FREQ, RopeConfig
from jafar.nn.sft import SftParams

KeyStrategy = Literal["sft", "no_sft", "concat", "linear_projection"]
KEY_STRATEGIES: tuple[str, ...] = get_args(KeyStrategy)

DEFAULT_D = 64
DEFAULT_HEADS = 4


@dataclass(frozen=True, slots=True)
class ParamSpec:
    name: str
    shape: tuple[int, ...]
    fan_in: int
    bias_value: float | None = None


def parameter_layout(c_in: int, d: int, key_strategy: KeyStrategy) -> list[ParamSpec]:
    conv: tuple[int, ...] = (d, d, 3, 3)
    layout: list[ParamSpec] = [
        ParamSpec("w_in.weight", (3, d), 3),
        ParamSpec("w_in.bias", (d,), 3, 0.0),
    ]

    blocks: list[str] = ["e_theta.0", "e_theta.1", "q_enc"]

    if key_strategy != "linear_projection":
        blocks.append("k_enc")

    for block in blocks:
        layout.append(ParamSpec(f"{block}.weight", conv, 9 * d))
        layout.append(ParamSpec(f"{block}.bias", (d,), 9 * d, 0.0))

    match key_strategy:
        case "sft":
            layout += [
                ParamSpec("sft.gamma.weight", (c_in, d), c_in),
                ParamSpec("sft.gamma.bias", (d,), c_in, 1.0),
                ParamSpec("sft.beta.weight", (c_in, d), c_in),
                ParamSpec("sft.beta.bias", (d,), c_in, 0.0),
            ]
        case "concat":
            layout += [
                ParamSpec("key_mix.weight", (d + c_in, d), d + c_in),
                ParamSpec("key_mix.bias", (d,), d + c_in, 0.0),
            ]
        case "linear_projection":
            layout += [
                ParamSpec("key_proj.weight", (c_in, d), c_in),
                ParamSpec("key_proj.bias", (d,), c_in, 0.0),
            ]
        case "no_sft":
            pass

    return layout


@dataclass(frozen=True, slots=True, eq=False)
class JafarParams:
    tensors: dict[str, Tensor]
    c_in: int
    d: int
    n_heads: int
    rope: RopeConfig
    key_strategy: KeyStrategy
    use_rope: bool = True
    # frozen encoder the feature channels came from
    encoder_seed: int = DEFAULT_ENCODER_SEED
    encoder_patch: int = DEFAULT_PATCH

    def __getitem__(self, name: str) -> Tensor:
        found: Tensor | None = self.tensors.get(name)

        if found is None:
            raise StrategyMismatch(
                f"parameter '{name}' missing for key_strategy={self.key_strategy}"
            )

        return found

    def names(self) -> list[str]:
        return list(self.tensors)

    def count(self) -> int:
        return sum(t.size for t in self.tensors.values())

    @property
    def dtype(self) -> np.dtype:
        return next(iter(self.tensors.values())).dtype

    @property
    def sft(self) -> SftParams:
        if self.key_strategy != "sft":
            raise StrategyMismatch(f"key_strategy={self.key_strategy} has no SFT params")

        return SftParams(
            w_gamma=self["sft.gamma.weight"],
            b_gamma=self["sft.gamma.bias"],
            w_beta=self["sft.beta.weight"],
            b_beta=self["sft.beta.bias"],
        )

    def with_tensors(self, tensors: dict[str, Tensor]) -> JafarParams:
        return replace(self, tensors=tensors)

    def astype(self, dtype: DTypeLike) -> JafarParams:
        return self.with_tensors(
            {name: t.astype(dtype) for name, t in self.tensors.items()}
        )

    def copy(self) -> JafarParams:
        return self.with_tensors(
            {
                name: Tensor(t.data.copy(), requires_grad=t.requires_grad, name=name)
                for name, t in self.tensors.items()
            }
        )

    def config_items(self) -> dict[str, str]:
        return {
            "c_in": str(self.c_in),
            "d": str(self.d),
            "n_heads": str(self.n_heads),
            "key_strategy": self.key_strategy,
            "rope_base": repr(self.rope.base_freq),
            "use_rope": "true" if self.use_rope else "false",
            "encoder_seed": str(self.encoder_seed),
            "encoder_patch": str(self.encoder_patch),
        }


def validate_shape_config(d: int, n_heads: int, base_freq: float) -> RopeConfig:
    head_dim: int = head_dim_for(d, n_heads)
    rope: RopeConfig = RopeConfig(head_dim=head_dim, base_freq=base_freq)
    rope.validate()

    return rope


def init(
    rng: Rng,
    c_in_features: int,
    d: int = DEFAULT_D,
    n_heads: int = DEFAULT_HEADS,
    key_strategy: KeyStrategy = "sft",
    use_rope: bool = True,
    rope_base: float = DEFAULT_BASE_FREQ,
    encoder_seed: int = DEFAULT_ENCODER_SEED,
    encoder_patch: int = DEFAULT_PATCH,
) -> JafarParams:
    """He-normal weights, zero biases; the SFT scale bias starts at 1."""
    if key_strategy not in KEY_STRATEGIES:
        raise ConfigError(f"unknown key_strategy '{key_strategy}'")

    rope: RopeConfig = validate_shape_config(d, n_heads, rope_base)
    tensors: dict[str, Tensor] = {}

    for spec in parameter_layout(c_in_features, d, key_strategy):
        if spec.bias_value is not None:
            values = np.full(spec.shape, spec.bias_value, dtype=np.float32)

        else:
            values = rng.normal(spec.shape, std=math.sqrt(2.0 / spec.fan_in))

        tensors[spec.name] = Tensor(values, requires_grad=True, name=spec.name)

    return JafarParams(
        tensors=tensors,
        c_in=c_in_features,
        d=d,
        n_heads=n_heads,
        rope=rope,
        key_strategy=key_strategy,
        use_rope=use_rope,
        encoder_seed=encoder_seed,
        encoder_patch=encoder_patch,
    )
