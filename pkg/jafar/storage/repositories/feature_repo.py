"""JFAR feature files.

    magic "JFAR" | version u32 = 1 | c, h, w u32 | c*h*w float32
all little-endian, channel-major then row-major.
"""

import struct
from pathlib import Path

import numpy as np

from jafar.config.logging import log
from jafar.models.error_model import (
    BadMagic,
    HeaderPayloadMismatch,
    NonFiniteInput,
    ShapeMismatch,
    UnsupportedVersion,
)
from jafar.models.feature_model import FeatureMap
from jafar.storage.binary import ByteReader, write_bytes_atomic

MAGIC = b"JFAR"
VERSION = 1
HEADER = struct.Struct("<4sIIII")
F32_LE = np.dtype("<f4")


class FeatureRepository:
    def encode(self, f: FeatureMap) -> bytes:
        if f.ndim != 3:
            raise ShapeMismatch(f"feature map must be (C, H, W), got {f.shape}")

        if not np.all(np.isfinite(f)):
            raise NonFiniteInput("feature map contains NaN or Inf")

        c, h, w = f.shape
        payload: bytes = np.ascontiguousarray(f, dtype=F32_LE).tobytes()

        return HEADER.pack(MAGIC, VERSION, c, h, w) + payload

    def decode(self, data: bytes, source: str = "<bytes>") -> FeatureMap:
        reader: ByteReader = ByteReader(data, source)

        if reader.take(4) != MAGIC:
            raise BadMagic(f"{source}: not a JFAR feature file")

        version: int = reader.u32()

        if version != VERSION:
            raise UnsupportedVersion(f"{source}: feature file version {version}")

        c, h, w = reader.unpack("<III")

        if c * h * w == 0:
            raise HeaderPayloadMismatch(f"{source}: empty shape {c}x{h}x{w}")

        payload: bytes = reader.take(c * h * w * F32_LE.itemsize)

        if reader.remaining:
            raise HeaderPayloadMismatch(
                f"{source}: {reader.remaining} bytes beyond the {c}x{h}x{w} payload"
            )

        return np.frombuffer(payload, dtype=F32_LE).astype(np.float32).reshape(c, h, w)

    def save(self, path: Path, f: FeatureMap) -> None:
        write_bytes_atomic(path, self.encode(f))
        log.debug(f"Wrote features {f.shape} → {path}")

    def load(self, path: Path) -> FeatureMap:
        return self.decode(path.read_bytes(), str(path))


feature_repo = FeatureRepository()
