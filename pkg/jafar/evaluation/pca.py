"""Shared 3-component PCA projection of feature maps to RGB."""

from collections.abc import Sequence

import numpy as np

from jafar.config.logging import log
from jafar.core.rng import Rng
from jafar.core.tensor import Array
from jafar.models.error_model import ShapeMismatch
from jafar.models.feature_model import FeatureMap, Image

N_COMPONENTS = 3
MAX_ITER = 100
TOL = 1e-7
# eigenvalues below this fraction of the total variance count as missing
RANK_EPS = 1e-10
GRAY = 0.5
START_SEED = 0


def power_iteration(a: Array, start: Array) -> tuple[Array, float]:
    v: Array = start / np.linalg.norm(start)

    for _ in range(MAX_ITER):
        av: Array = a @ v
        norm: float = float(np.linalg.norm(av))

        if norm == 0.0:
            return v, 0.0

        v_new: Array = av / norm

        if np.linalg.norm(v_new - v) < TOL:
            v = v_new
            break

        v = v_new

    return v, float(v @ a @ v)


def top_components(cov: Array) -> list[Array | None]:
    """Top eigenvectors by power iteration with deflation; None past the rank."""
    a: Array = cov.copy()
    total: float = float(np.trace(cov))
    starts: Array = Rng(START_SEED).normal((N_COMPONENTS, cov.shape[0]), dtype=np.float64)
    components: list[Array | None] = []

    for k in range(N_COMPONENTS):
        v, eigenvalue = power_iteration(a, starts[k])

        if total <= 0.0 or eigenvalue <= RANK_EPS * total:
            components.append(None)
            continue

        components.append(v)
        a = a - eigenvalue * np.outer(v, v)

    return components


def pca_rgb(fs: Sequence[FeatureMap]) -> list[Image]:
    """Project every map onto one shared PCA basis and scale jointly to [0, 1]."""
    if not fs:
        return []

    c: int = fs[0].shape[0]

    if c < N_COMPONENTS or any(f.ndim != 3 or f.shape[0] != c for f in fs):
        raise ShapeMismatch(
            f"pca_rgb needs maps with one shared channel count >= {N_COMPONENTS}"
        )

    samples: Array = np.concatenate([f.reshape(c, -1).T for f in fs]).astype(np.float64)
    centered: Array = samples - samples.mean(axis=0)
    cov: Array = centered.T @ centered / max(1, samples.shape[0] - 1)

    components: list[Array | None] = top_components(cov)
    missing: int = sum(v is None for v in components)

    if missing:
        log.warning(
            f"DegenerateCovariance → rank below {N_COMPONENTS}, "
            f"{missing} channel(s) filled with gray"
        )

    rgb: Array = np.full((samples.shape[0], N_COMPONENTS), GRAY)

    for k, v in enumerate(components):
        if v is None:
            continue

        proj: Array = centered @ v
        lo, hi = float(proj.min()), float(proj.max())
        rgb[:, k] = (proj - lo) / (hi - lo) if hi > lo else GRAY

    images: list[Image] = []
    offset: int = 0

    for f in fs:
        _, h, w = f.shape
        block: Array = rgb[offset : offset + h * w]
        images.append(block.T.reshape(N_COMPONENTS, h, w).astype(np.float32))
        offset += h * w

    return images
