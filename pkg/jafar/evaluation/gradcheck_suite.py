"""Gradient checks for every differentiable op and for the full model.

Each case reduces the op output to a scalar with a fixed random projection
(or the training loss, for the composite case) and hands it to
``grad_check``.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import DTypeLike

from jafar.config.logging import log
from jafar.core import ops
from jafar.core.gradcheck import GradCheckReport, ScalarFn, grad_check
from jafar.core.rng import Rng
from jafar.core.tensor import Array, Tensor
from jafar.model import params as jafar_params
from jafar.model.upsampler import UpsampleRequest, forward_tensor
from jafar.nn.attention import attention_kernel, kernel_apply
from jafar.nn.rope import RopeConfig, grid_positions, rope_apply
from jafar.nn.sft import SftParams, sft_modulate
from jafar.training.loss import loss_cos_l2

OP_TOL = 1e-4
COMPOSITE_TOL = 1e-3

type Shape = tuple[int, ...]


@dataclass(frozen=True, slots=True)
class SuiteCase:
    name: str
    fn: ScalarFn
    inputs: dict[str, Array]


@dataclass(frozen=True, slots=True)
class SuiteResult:
    name: str
    worst: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.worst <= self.tol


def _const(x: Array) -> Tensor:
    return Tensor(x, dtype=np.float64)


def projected(op: Callable[[dict[str, Tensor]], Tensor], weights: Array) -> ScalarFn:
    """sum(op(inputs) * weights)."""

    def fn(t: dict[str, Tensor]) -> Tensor:
        return ops.reduce_sum(op(t) * _const(weights))

    return fn


class _Cases:
    def __init__(self, rng: Rng) -> None:
        self.rng = rng
        self.cases: list[SuiteCase] = []

    def normal(self, *shape: int) -> Array:
        return self.rng.normal(shape, dtype=np.float64)

    def positive(self, *shape: int) -> Array:
        return 0.5 + self.rng.uniform(shape)

    def add(
        self,
        name: str,
        op: Callable[[dict[str, Tensor]], Tensor],
        inputs: dict[str, Array],
        out_shape: Shape,
    ) -> None:
        weights: Array = self.normal(*out_shape)
        self.cases.append(SuiteCase(name, projected(op, weights), inputs))


def op_cases(rng: Rng) -> list[SuiteCase]:
    c = _Cases(rng)

    c.add("add", lambda t: t["a"] + t["b"], {"a": c.normal(3, 4), "b": c.normal(3, 4)}, (3, 4))
    c.add("sub", lambda t: t["a"] - t["b"], {"a": c.normal(3, 4), "b": c.normal(3, 4)}, (3, 4))
    c.add("mul", lambda t: t["a"] * t["b"], {"a": c.normal(3, 4), "b": c.normal(3, 4)}, (3, 4))
    c.add("div", lambda t: t["a"] / t["b"], {"a": c.normal(3, 4), "b": c.positive(3, 4)}, (3, 4))
    c.add(
        "matmul",
        lambda t: ops.matmul(t["a"], t["b"]),
        {"a": c.normal(3, 5), "b": c.normal(5, 4)},
        (3, 4),
    )
    c.add("softmax_rows", lambda t: ops.softmax_rows(t["x"]), {"x": c.normal(4, 6)}, (4, 6))
    c.add(
        "conv2d",
        lambda t: ops.conv2d(t["x"], t["w"], t["b"]),
        {"x": c.normal(2, 5, 5), "w": c.normal(3, 2, 3, 3), "b": c.normal(3)},
        (3, 5, 5),
    )
    c.add(
        "linear",
        lambda t: ops.linear(t["x"], t["w"], t["b"]),
        {"x": c.normal(6, 4), "w": c.normal(4, 3), "b": c.normal(3)},
        (6, 3),
    )
    c.add("activation", lambda t: ops.activation(t["x"]), {"x": c.normal(3, 5)}, (3, 5))
    c.add(
        "adaptive_avg_pool2d",
        lambda t: ops.adaptive_avg_pool2d(t["x"], 4, 3),
        {"x": c.normal(2, 6, 7)},
        (2, 4, 3),
    )
    c.add(
        "adaptive_resample2d",
        lambda t: ops.adaptive_resample2d(t["x"], 5, 7),
        {"x": c.normal(2, 3, 3)},
        (2, 5, 7),
    )
    c.add(
        "reshape_transpose",
        lambda t: ops.reshape(ops.transpose(t["x"], (2, 0, 1)), (4, 6)),
        {"x": c.normal(2, 3, 4)},
        (4, 6),
    )
    c.add(
        "concat",
        lambda t: ops.concat([t["a"], t["b"]], axis=1),
        {"a": c.normal(3, 2), "b": c.normal(3, 4)},
        (3, 6),
    )
    c.add(
        "slice_take",
        lambda t: ops.slice_axis(ops.take(t["x"], 1), 1, 1, 4),
        {"x": c.normal(3, 4, 5)},
        (4, 3),
    )
    c.add(
        "reduce",
        lambda t: ops.reduce_sum(t["x"], axis=1) + ops.reduce_mean(t["x"], axis=1),
        {"x": c.normal(3, 5)},
        (3,),
    )
    c.add("sqrt", lambda t: ops.sqrt(t["x"]), {"x": c.positive(3, 4)}, (3, 4))

    rope = RopeConfig(head_dim=8)
    positions = grid_positions(2, 3)
    c.add(
        "rope_apply",
        lambda t: rope_apply(t["x"], positions, rope),
        {"x": c.normal(2, 6, 8)},
        (2, 6, 8),
    )

    def sft(t: dict[str, Tensor]) -> Tensor:
        p = SftParams(t["wg"], t["bg"], t["wb"], t["bb"])
        return sft_modulate(t["k"], t["f"], p)

    c.add(
        "sft_modulate",
        sft,
        {
            "k": c.normal(4, 3, 3),
            "f": c.normal(5, 3, 3),
            "wg": c.normal(5, 4),
            "bg": c.normal(4),
            "wb": c.normal(5, 4),
            "bb": c.normal(4),
        },
        (4, 3, 3),
    )

    def attend(t: dict[str, Tensor]) -> Tensor:
        kernel = attention_kernel(t["q"], t["k"], 2, RopeConfig(head_dim=4))
        return kernel_apply(kernel, t["f"])

    c.add(
        "attention",
        attend,
        {"q": c.normal(8, 4, 4), "k": c.normal(8, 2, 3), "f": c.normal(3, 2, 3)},
        (3, 4, 4),
    )

    target: Array = c.normal(4, 3, 3)
    c.cases.append(
        SuiteCase(
            "loss_cos_l2",
            lambda t: loss_cos_l2(t["pred"], _const(target)),
            {"pred": c.normal(4, 3, 3)},
        )
    )

    return c.cases


def composite_case(rng: Rng) -> SuiteCase:
    """Full model, every parameter: guidance 16x16, features 2x2, output 4x4."""
    model = jafar_params.init(rng, 4, d=8, n_heads=2, key_strategy="sft")
    guidance: Array = rng.uniform((3, 16, 16))
    f_lr: Array = rng.normal((4, 2, 2), dtype=np.float64)
    target: Array = rng.normal((4, 4, 4), dtype=np.float64)
    req = UpsampleRequest(guidance, f_lr, 4, 4)

    def fn(t: dict[str, Tensor]) -> Tensor:
        pred: Tensor = forward_tensor(model.with_tensors(t), req)
        return loss_cos_l2(pred, _const(target))

    inputs: dict[str, Array] = {
        name: p.data.astype(np.float64) for name, p in model.tensors.items()
    }

    return SuiteCase("jafar_model", fn, inputs)


def run_suite(
    seed: int,
    tol: float = OP_TOL,
    composite_tol: float = COMPOSITE_TOL,
    tape_dtype: DTypeLike = np.float64,
) -> list[SuiteResult]:
    """Every op case, then the composite; ``tape_dtype`` picks the backward precision."""
    rng = Rng(seed)
    cases: list[tuple[SuiteCase, float]] = [(case, tol) for case in op_cases(rng.spawn(1))]
    cases.append((composite_case(rng.spawn(2)), composite_tol))
    results: list[SuiteResult] = []

    for case, case_tol in cases:
        report: GradCheckReport = grad_check(
            case.fn, case.inputs, tol=case_tol, tape_dtype=tape_dtype
        )
        results.append(SuiteResult(case.name, report.worst, case_tol))

        log.info(f"gradcheck {case.name} → max rel-err {report.worst:.3e}")

    return results
