"""Binary PPM (P6) colour images and PGM (P5) grey maps, maxval 255."""

import re
from pathlib import Path

import numpy as np

from jafar.config.logging import log
from jafar.core.tensor import Array
from jafar.models.error_model import (
    BadMagic,
    HeaderPayloadMismatch,
    NonFiniteInput,
    ShapeMismatch,
    TruncatedFile,
    UnsupportedVersion,
)
from jafar.models.feature_model import Image, SaliencyMap
from jafar.storage.binary import write_bytes_atomic

MAXVAL = 255
# magic, then width / height / maxval separated by whitespace and comments,
# then exactly one whitespace byte before the raster
_HEADER = re.compile(
    rb"\A(P[56])"
    rb"(?:\s|#[^\n]*\n)+(\d+)"
    rb"(?:\s|#[^\n]*\n)+(\d+)"
    rb"(?:\s|#[^\n]*\n)+(\d+)"
    rb"\s"
)


def quantize(values: Array) -> np.ndarray:
    """floor(v * 255 + 0.5) clamped to [0, 255]."""
    if not np.all(np.isfinite(values)):
        raise NonFiniteInput("image contains NaN or Inf")

    scaled = np.floor(values.astype(np.float64) * MAXVAL + 0.5)
    return np.clip(scaled, 0, MAXVAL).astype(np.uint8)


class ImageRepository:
    def encode_ppm(self, img: Image) -> bytes:
        if img.ndim != 3 or img.shape[0] != 3:
            raise ShapeMismatch(f"PPM expects a (3, H, W) image, got {img.shape}")

        _, h, w = img.shape
        raster: bytes = quantize(img).transpose(1, 2, 0).tobytes()

        return f"P6\n{w} {h}\n{MAXVAL}\n".encode("ascii") + raster

    def encode_pgm(self, grey: SaliencyMap) -> bytes:
        if grey.ndim != 2:
            raise ShapeMismatch(f"PGM expects an (H, W) map, got {grey.shape}")

        h, w = grey.shape

        return f"P5\n{w} {h}\n{MAXVAL}\n".encode("ascii") + quantize(grey).tobytes()

    def _decode(self, data: bytes, magic: bytes, source: str) -> tuple[Array, int, int]:
        if data[:2] != magic:
            if len(data) < 2:
                raise TruncatedFile(f"{source}: empty image file")

            raise BadMagic(f"{source}: expected {magic.decode()} image")

        match = _HEADER.match(data)

        if match is None:
            raise TruncatedFile(f"{source}: incomplete {magic.decode()} header")

        w, h, maxval = (int(g) for g in match.groups()[1:])

        if not 1 <= maxval <= MAXVAL:
            raise UnsupportedVersion(f"{source}: maxval {maxval} unsupported")

        channels: int = 3 if magic == b"P6" else 1
        expected: int = w * h * channels
        raster: bytes = data[match.end() :]

        if len(raster) < expected:
            raise TruncatedFile(f"{source}: raster has {len(raster)} of {expected} bytes")

        if len(raster) > expected:
            raise HeaderPayloadMismatch(
                f"{source}: {len(raster) - expected} bytes beyond the {w}x{h} raster"
            )

        values: Array = np.frombuffer(raster, dtype=np.uint8).astype(np.float32) / maxval

        return values, h, w

    def decode_ppm(self, data: bytes, source: str = "<bytes>") -> Image:
        values, h, w = self._decode(data, b"P6", source)
        return np.ascontiguousarray(values.reshape(h, w, 3).transpose(2, 0, 1))

    def decode_pgm(self, data: bytes, source: str = "<bytes>") -> SaliencyMap:
        values, h, w = self._decode(data, b"P5", source)
        return values.reshape(h, w)

    def save_ppm(self, path: Path, img: Image) -> None:
        write_bytes_atomic(path, self.encode_ppm(img))
        log.debug(f"Wrote PPM {img.shape[1]}x{img.shape[2]} → {path}")

    def save_pgm(self, path: Path, grey: SaliencyMap) -> None:
        write_bytes_atomic(path, self.encode_pgm(grey))
        log.debug(f"Wrote PGM {grey.shape[0]}x{grey.shape[1]} → {path}")

    def load_ppm(self, path: Path) -> Image:
        return self.decode_ppm(path.read_bytes(), str(path))

    def load_pgm(self, path: Path) -> SaliencyMap:
        return self.decode_pgm(path.read_bytes(), str(path))


image_repo = ImageRepository()
