from pathlib import Path

import numpy as np
import pytest

from jafar.config.logging import configure_logging
from jafar.core.rng import Rng
from jafar.encoder.images import synth_image
from jafar.storage.repositories.checkpoint_repo import checkpoint_repo
from jafar.storage.repositories.feature_repo import feature_repo
from jafar.storage.repositories.image_repo import image_repo


@pytest.fixture(autouse=True)
def restore_log_stream():
    # each invocation binds the logger to the stderr that is current at call time
    yield
    configure_logging("INFO")


@pytest.fixture
def ckpt(tmp_path, small_params) -> Path:
    path = tmp_path / "model.jfck"
    checkpoint_repo.save(path, small_params)
    return path


@pytest.fixture
def image_file(tmp_path) -> Path:
    path = tmp_path / "guide.ppm"
    image_repo.save_ppm(path, synth_image(Rng(21), 16))
    return path


@pytest.fixture
def features_file(tmp_path, encoder, image_file) -> Path:
    path = tmp_path / "lr.jfar"
    feature_repo.save(path, encoder.encode(image_repo.load_ppm(image_file)))
    return path


@pytest.fixture
def write_features(tmp_path):
    def write(name: str, f: np.ndarray) -> Path:
        path = tmp_path / name
        feature_repo.save(path, f)
        return path

    return write
