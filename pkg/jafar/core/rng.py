"""Deterministic random streams.

splitmix64 drives everything: uniforms take the top 53 bits of each output,
normals use the cosine branch of Box-Muller on two consecutive uniforms. The
generator is vectorised over numpy uint64 arithmetic (which wraps modulo
2**64), so drawing n values is equivalent to n sequential draws.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from numpy.typing import DTypeLike, NDArray

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB
INV_2_53 = 1.0 / float(1 << 53)

Shape = int | tuple[int, ...]


def _mix(z: NDArray[np.uint64]) -> NDArray[np.uint64]:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_2)

    return z ^ (z >> np.uint64(31))


class Rng:
    def __init__(self, seed: int) -> None:
        self.state: int = seed & MASK64

    def next_u64_array(self, n: int) -> NDArray[np.uint64]:
        steps: NDArray[np.uint64] = np.arange(1, n + 1, dtype=np.uint64)

        with np.errstate(over="ignore"):
            states = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)
            out: NDArray[np.uint64] = _mix(states)

        self.state = (self.state + n * GOLDEN_GAMMA) & MASK64

        return out

    def uniform(self, shape: Shape) -> NDArray[np.float64]:
        n: int = int(np.prod(shape))
        bits: NDArray[np.uint64] = self.next_u64_array(n) >> np.uint64(11)

        return (bits.astype(np.float64) * INV_2_53).reshape(shape)

    def uniform_scalar(self, low: float = 0.0, high: float = 1.0) -> float:
        return low + (high - low) * float(self.uniform(1)[0])

    def normal(
        self,
        shape: Shape,
        std: float = 1.0,
        dtype: DTypeLike = np.float32,
    ) -> NDArray:
        n: int = int(np.prod(shape))
        u: NDArray[np.float64] = self.uniform(2 * n).reshape(n, 2)

        radius = np.sqrt(-2.0 * np.log(1.0 - u[:, 0]))
        z = radius * np.cos(2.0 * np.pi * u[:, 1])

        return (z * std).reshape(shape).astype(dtype)

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in [low, high)."""
        span: int = high - low
        pick: int = int(self.uniform_scalar() * span)

        return low + min(pick, span - 1)

    def choice[T](self, items: Sequence[T]) -> T:
        return items[self.integers(0, len(items))]

    def spawn(self, offset: int) -> Rng:
        return Rng((self.state + offset * GOLDEN_GAMMA) & MASK64)
