import numpy as np
import pytest

from jafar.core import ops
from jafar.core.gradcheck import grad_check, relative_error
from jafar.core.rng import Rng
from jafar.core.tensor import Tensor, record
from jafar.evaluation.gradcheck_suite import OP_TOL, op_cases
from jafar.models.error_model import ConfigError


def test_sum_of_squares_is_exact():
    x = Rng(1).normal((3, 4), dtype=np.float64)
    report = grad_check(lambda t: ops.reduce_sum(t["x"] * t["x"]), {"x": x})

    assert report.passed
    assert report.worst < 1e-8


def test_softmax_attention_toy_passes():
    """Two queries against three keys of width 4, values of width 2."""
    rng = Rng(2)
    inputs = {
        "q": rng.normal((2, 4), dtype=np.float64),
        "k": rng.normal((3, 4), dtype=np.float64),
        "v": rng.normal((3, 2), dtype=np.float64),
    }
    w = Tensor(rng.normal((2, 2), dtype=np.float64), dtype=np.float64)

    def fn(t: dict[str, Tensor]) -> Tensor:
        logits = ops.matmul(t["q"], ops.transpose(t["k"], (1, 0))) * 0.5
        out = ops.matmul(ops.softmax_rows(logits), t["v"])
        return ops.reduce_sum(out * w)

    report = grad_check(fn, inputs, tol=1e-4)

    assert report.passed, report.errors


def test_sign_flipped_backward_fails():
    def bad_square(x: Tensor) -> Tensor:
        return record("bad_square", [x], x.data**2, lambda g: (-2.0 * x.data * g,))

    x = Rng(3).normal((5,), dtype=np.float64) + 2.0
    report = grad_check(lambda t: ops.reduce_sum(bad_square(t["x"])), {"x": x})

    assert not report.passed
    assert report.worst == pytest.approx(1.0)


def test_relative_error_floor():
    err = relative_error(np.array([0.0, 1.0]), np.array([0.0, 1.0 + 1e-6]))

    assert err[0] == 0.0
    assert err[1] == pytest.approx(1e-6 / (2.0 + 1e-6))


@pytest.mark.parametrize("seed", range(10))
def test_every_op_matches_central_differences(seed):
    for case in op_cases(Rng(seed)):
        report = grad_check(case.fn, case.inputs, tol=OP_TOL)
        assert report.passed, f"{case.name}: {report.errors}"


def test_float32_tape_against_64_bit_differences():
    seen: list[np.dtype] = []
    x = Rng(4).normal((4,), dtype=np.float64)

    def fn(t: dict[str, Tensor]) -> Tensor:
        seen.append(t["x"].dtype)
        return ops.reduce_sum(ops.activation(t["x"]) * t["x"])

    report = grad_check(fn, {"x": x}, tape_dtype=np.float32)

    assert seen[0] == np.float32
    assert set(seen[1:]) == {np.dtype(np.float64)}
    assert report.passed, report.errors


def test_unsupported_tape_dtype():
    with pytest.raises(ConfigError):
        grad_check(
            lambda t: ops.reduce_sum(t["x"]), {"x": np.ones(2)}, tape_dtype=np.float16
        )
