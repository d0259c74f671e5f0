import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from jafar.config.train_config import TrainConfig, load_train_config
from jafar.core.rng import Rng
from jafar.encoder.images import synth_image
from jafar.encoder.stub_encoder import StubEncoder
from jafar.model import params as jafar_params
from jafar.model.params import JafarParams

settings.register_profile(
    "jafar",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("jafar")

SMALL_C = 8


@pytest.fixture
def rng() -> Rng:
    return Rng(0)


@pytest.fixture
def encoder() -> StubEncoder:
    return StubEncoder.create(7, patch=4, c_out=SMALL_C)


@pytest.fixture
def small_params() -> JafarParams:
    return jafar_params.init(Rng(3), SMALL_C, d=16, n_heads=2)


@pytest.fixture
def guidance() -> np.ndarray:
    return synth_image(Rng(11), 32)


@pytest.fixture
def tiny_train_config() -> TrainConfig:
    return load_train_config(
        steps=3,
        batch=1,
        hr_image_size=32,
        delta_set=[16],
        d=16,
        n_heads=2,
        c_out=SMALL_C,
        log_every=1,
        seed=5,
    )
