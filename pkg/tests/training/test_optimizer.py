import numpy as np
import pytest
from pydantic import ValidationError

from jafar.core.tensor import Tensor
from jafar.models.error_model import NonFiniteGradient, ValidationFailure
from jafar.training.optimizer import AdamWConfig, AdamWState, adamw_step


def params(*values: float) -> dict[str, Tensor]:
    return {"w": Tensor(np.array(values, dtype=np.float64))}


def test_zero_gradient_leaves_parameters_unchanged():
    p = params(1.0, -2.0, 3.0)
    state = AdamWState.zeros(p)

    adamw_step(p, {"w": np.zeros(3)}, state, AdamWConfig(), t=1)

    np.testing.assert_array_equal(p["w"].data, [1.0, -2.0, 3.0])


def test_first_step_moves_by_learning_rate():
    """Bias correction makes the first update lr * sign(g)."""
    cfg = AdamWConfig(lr=1e-3)
    p = params(0.5, 0.5, 0.5)
    g = np.array([0.3, -4.0, 1e-2])

    adamw_step(p, {"w": g}, AdamWState.zeros(p), cfg, t=1)

    np.testing.assert_allclose(0.5 - p["w"].data, 1e-3 * np.sign(g), rtol=1e-5)


def test_update_does_not_depend_on_value_without_decay():
    cfg = AdamWConfig(lr=1e-2)
    a, b = params(10.0), params(-3.0)
    g = {"w": np.array([0.7])}

    adamw_step(a, g, AdamWState.zeros(a), cfg, t=1)
    adamw_step(b, g, AdamWState.zeros(b), cfg, t=1)

    assert a["w"].data[0] - 10.0 == pytest.approx(b["w"].data[0] + 3.0, abs=1e-12)


def test_decoupled_weight_decay_shrinks_parameters():
    cfg = AdamWConfig(lr=0.1, weight_decay=0.5)
    p = params(2.0)

    adamw_step(p, {"w": np.zeros(1)}, AdamWState.zeros(p), cfg, t=1)

    assert p["w"].data[0] == pytest.approx(2.0 - 0.1 * 0.5 * 2.0)


def test_moments_track_gradients():
    cfg = AdamWConfig(beta1=0.9, beta2=0.999)
    p = params(0.0)
    state = AdamWState.zeros(p)

    adamw_step(p, {"w": np.array([2.0])}, state, cfg, t=1)

    assert state.m["w"][0] == pytest.approx(0.2)
    assert state.v["w"][0] == pytest.approx(0.004)
    assert state.t == 1


def test_non_finite_gradient_is_rejected():
    p = params(1.0, 2.0)

    with pytest.raises(NonFiniteGradient):
        adamw_step(p, {"w": np.array([1.0, np.nan])}, AdamWState.zeros(p), AdamWConfig(), t=1)

    np.testing.assert_array_equal(p["w"].data, [1.0, 2.0])


def test_step_index_starts_at_one():
    p = params(1.0)

    with pytest.raises(ValidationFailure):
        adamw_step(p, {"w": np.zeros(1)}, AdamWState.zeros(p), AdamWConfig(), t=0)


def test_config_validation():
    with pytest.raises(ValidationError):
        AdamWConfig(lr=0.0)

    with pytest.raises(ValidationError):
        AdamWConfig(beta2=1.0)
