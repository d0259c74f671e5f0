import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jafar.core.rng import Rng
from jafar.core.tensor import Tape, Tensor
from jafar.models.error_model import ShapeMismatch
from jafar.training.loss import loss_cos_l2, loss_value


def target(seed: int = 0) -> np.ndarray:
    return Rng(seed).normal((6, 4, 5), dtype=np.float64)


def mean_norm(f: np.ndarray) -> float:
    return float(np.linalg.norm(f.reshape(f.shape[0], -1), axis=0).mean())


def test_identical_maps_have_zero_loss():
    t = target()
    assert loss_value(t, t) == pytest.approx(0.0, abs=1e-6)


def test_positive_scaling_leaves_only_distance():
    t = target(1)
    assert loss_value(2.0 * t, t) == pytest.approx(mean_norm(t), abs=1e-5)


def test_antipodal_maps_have_cosine_term_two():
    t = target(2)
    assert loss_value(-t, t) == pytest.approx(2.0 + 2.0 * mean_norm(t), abs=1e-6)


@given(st.integers(0, 2**32))
def test_loss_is_non_negative(seed):
    rng = Rng(seed)
    pred, tgt = rng.normal((3, 2, 2), dtype=np.float64), rng.normal((3, 2, 2), dtype=np.float64)

    assert loss_value(pred, tgt) >= 0.0


def test_zero_prediction_has_finite_gradient():
    pred = Tensor(np.zeros((4, 2, 2), dtype=np.float32), requires_grad=True)

    with Tape() as tape:
        loss = loss_cos_l2(pred, target(3)[:4, :2, :2].astype(np.float32))

    tape.backward(loss)

    assert np.all(np.isfinite(pred.grad))


def test_target_receives_no_gradient():
    pred = Tensor(target(4).astype(np.float32), requires_grad=True)
    tgt = Tensor(target(5).astype(np.float32), requires_grad=True)

    with Tape() as tape:
        loss = loss_cos_l2(pred, tgt)

    tape.backward(loss)

    assert tgt.grad is None
    assert pred.grad is not None


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        loss_value(np.zeros((3, 2, 2)), np.zeros((3, 2, 3)))
