"""Axial 2D rotary position embedding.

Within each head the first half of the channel pairs rotates with the row
coordinate and the second half with the column coordinate, both using the
frequency ladder ``base_freq ** (-4t / head_dim)``. Grid positions are
normalised to half-pixel centres in (0, 1), so grids of any resolution
share one coordinate frame.
"""

from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from jafar.core import ops
from jafar.core.tensor import Tensor
from jafar.models.error_model import OddHeadDim, ShapeMismatch

DEFAULT_BASE_FREQ = 100.0


@dataclass(frozen=True, slots=True)
class RopeConfig:
    head_dim: int
    base_freq: float = DEFAULT_BASE_FREQ

    def validate(self) -> None:
        if self.head_dim <= 0 or self.head_dim % 4:
            raise OddHeadDim(
                f"head_dim {self.head_dim} must be a positive multiple of 4 for 2D RoPE"
            )

    def frequencies(self) -> NDArray[np.float64]:
        t = np.arange(self.head_dim // 4, dtype=np.float64)
        return self.base_freq ** (-4.0 * t / self.head_dim)

    def angles(self, positions: NDArray[Any]) -> NDArray[np.float64]:
        """(N, 2) positions -> (N, head_dim / 2) pair angles."""
        freqs = self.frequencies()
        rows = positions[:, 0:1].astype(np.float64) * freqs[None, :]
        cols = positions[:, 1:2].astype(np.float64) * freqs[None, :]

        return np.concatenate([rows, cols], axis=1)


def grid_positions(h: int, w: int) -> NDArray[np.float64]:
    """Half-pixel centres ((i + 0.5) / h, (j + 0.5) / w), row-major."""
    ii, jj = np.meshgrid(
        (np.arange(h) + 0.5) / h, (np.arange(w) + 0.5) / w, indexing="ij"
    )

    return np.stack([ii.reshape(-1), jj.reshape(-1)], axis=1)


def rope_apply(x: Tensor, positions: NDArray[Any], cfg: RopeConfig) -> Tensor:
    """Rotate a (n_heads, N, head_dim) tensor by the positions of its N tokens."""
    if x.shape[-1] % 4 or x.shape[-1] != cfg.head_dim:
        raise OddHeadDim(
            f"tensor head_dim {x.shape[-1]} incompatible with RopeConfig "
            f"head_dim {cfg.head_dim}"
        )

    cfg.validate()

    if x.ndim != 3 or x.shape[1] != positions.shape[0]:
        raise ShapeMismatch(
            f"rope_apply: tensor {x.shape} vs {positions.shape[0]} positions"
        )

    theta = cfg.angles(positions)

    return ops.pair_rotate(x, np.cos(theta)[None], np.sin(theta)[None])
