from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from jafar.core import kernels
from jafar.core.rng import Rng
from jafar.core.tensor import Array
from jafar.models.error_model import IndivisibleImage
from jafar.models.feature_model import FeatureMap, Image

DEFAULT_PATCH = 4
DEFAULT_C_OUT = 32
DEFAULT_ENCODER_SEED = 7

# Gain applied after per-channel centering.
OUTPUT_SCALE = 0.25


@dataclass(frozen=True, slots=True, eq=False)
class StubEncoder:
    """Frozen stand-in for a patch-based vision encoder.

    patchify -> fixed linear projection -> SiLU -> fixed 3x3 mixing conv,
    then every channel is centered over the grid and scaled by ``OUTPUT_SCALE``.
    """

    patch: int
    c_out: int
    seed: int
    w_patch: Array
    w_mix: Array
    b_mix: Array

    @classmethod
    def create(
        cls, seed: int, patch: int = DEFAULT_PATCH, c_out: int = DEFAULT_C_OUT
    ) -> StubEncoder:
        rng: Rng = Rng(seed)
        fan_patch: int = 3 * patch * patch

        w_patch = rng.normal((fan_patch, c_out), std=math.sqrt(2.0 / fan_patch))
        w_mix = rng.normal((c_out, c_out, 3, 3), std=math.sqrt(1.0 / (9 * c_out)))
        b_mix = np.zeros(c_out, dtype=np.float32)

        for arr in (w_patch, w_mix, b_mix):
            arr.flags.writeable = False

        return cls(patch, c_out, seed, w_patch, w_mix, b_mix)

    def grid(self, h: int, w: int) -> tuple[int, int]:
        return h // self.patch, w // self.patch

    def mixed(self, img: Image) -> Array:
        """Mixing-conv response before centering; local to a 3x3 patch window."""
        _, h, w = img.shape
        p: int = self.patch

        if h < p or w < p or h % p or w % p:
            raise IndivisibleImage(f"image {h}x{w} is not divisible by patch size {p}")

        gh, gw = self.grid(h, w)
        patches: Array = (
            img.astype(np.float32)
            .reshape(3, gh, p, gw, p)
            .transpose(1, 3, 0, 2, 4)
            .reshape(gh * gw, 3 * p * p)
        )

        tokens: Array = kernels.silu(patches @ self.w_patch)
        grid: Array = np.ascontiguousarray(tokens.T.reshape(self.c_out, gh, gw))
        out, _ = kernels.conv3x3(grid, self.w_mix, self.b_mix)

        return out

    def encode(self, img: Image) -> FeatureMap:
        out: Array = self.mixed(img)
        centered: Array = out - out.mean(axis=(1, 2), keepdims=True)

        return (centered * OUTPUT_SCALE).astype(np.float32)


def encode(enc: StubEncoder, img: Image) -> FeatureMap:
    return enc.encode(img)
