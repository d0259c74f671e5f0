from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np
from numpy.typing import DTypeLike

from jafar.config.logging import log
from jafar.core.tensor import Array, Tape, Tensor, no_grad
from jafar.models.error_model import ConfigError

type ScalarFn = Callable[[dict[str, Tensor]], Tensor]

REL_FLOOR = 1e-8

# central-difference step per tape precision; the difference itself is always 64-bit
FD_STEPS: dict[np.dtype, float] = {
    np.dtype(np.float64): 1e-4,
    np.dtype(np.float32): 1e-3,
}


@dataclass(frozen=True, slots=True)
class GradCheckReport:
    errors: dict[str, float]
    tol: float

    @property
    def passed(self) -> bool:
        return all(err <= self.tol for err in self.errors.values())

    @property
    def worst(self) -> float:
        return max(self.errors.values(), default=0.0)


def relative_error(g_ad: Array, g_fd: Array) -> Array:
    return np.abs(g_ad - g_fd) / np.maximum(REL_FLOOR, np.abs(g_ad) + np.abs(g_fd))


def _evaluate(fn: ScalarFn, values: Mapping[str, Array]) -> float:
    with no_grad():
        return fn({name: Tensor(v, dtype=np.float64) for name, v in values.items()}).item()


def grad_check(
    fn: ScalarFn,
    params: Mapping[str, Array],
    step: float | None = None,
    tol: float = 1e-4,
    tape_dtype: DTypeLike = np.float64,
) -> GradCheckReport:
    """Compare tape gradients against central differences.

    The tape runs on ``tape_dtype`` copies of ``params``; the finite
    differences always run on 64-bit copies, so ``fn`` must build any
    constants it closes over in float64. ``step`` defaults to the entry of
    ``FD_STEPS`` for the tape dtype.
    """
    dtype: np.dtype = np.dtype(tape_dtype)

    if dtype not in FD_STEPS:
        raise ConfigError(f"unsupported tape dtype {dtype}")

    h: float = FD_STEPS[dtype] if step is None else step
    shadow: dict[str, Array] = {
        name: np.array(value, dtype=np.float64) for name, value in params.items()
    }
    leaves: dict[str, Tensor] = {
        name: Tensor(value.astype(dtype), requires_grad=True, name=name)
        for name, value in shadow.items()
    }

    with Tape() as tape:
        loss: Tensor = fn(leaves)

    tape.backward(loss)
    errors: dict[str, float] = {}

    for name, leaf in leaves.items():
        g_ad: Array = tape.grad(leaf)
        flat: Array = shadow[name].reshape(-1)
        g_fd: Array = np.zeros_like(flat)

        for idx in range(flat.size):
            orig: float = float(flat[idx])

            flat[idx] = orig + h
            f_plus: float = _evaluate(fn, shadow)

            flat[idx] = orig - h
            f_minus: float = _evaluate(fn, shadow)

            flat[idx] = orig
            g_fd[idx] = (f_plus - f_minus) / (2.0 * h)

        rel: Array = relative_error(g_ad.reshape(-1).astype(np.float64), g_fd)
        errors[name] = float(rel.max()) if rel.size else 0.0

        log.debug(f"grad_check {name} → max rel-err {errors[name]:.3e}")

    return GradCheckReport(errors=errors, tol=tol)
