"""Atomic file writes and bounds-checked little-endian reading."""

from __future__ import annotations

import os
import struct
import tempfile
from collections.abc import Iterator
from contextlib import contextmanager, suppress
from pathlib import Path
from typing import IO, Any

from jafar.models.error_model import TruncatedFile


@contextmanager
def atomic_writer(path: Path) -> Iterator[IO[bytes]]:
    """Yield a handle to a temp file that replaces ``path`` only on success."""
    directory: Path = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)

    try:
        with os.fdopen(fd, "wb") as handle:
            yield handle

        os.replace(tmp, path)

    except BaseException:
        with suppress(FileNotFoundError):
            os.unlink(tmp)

        raise


def write_bytes_atomic(path: Path, data: bytes) -> None:
    with atomic_writer(path) as handle:
        handle.write(data)


def write_text_atomic(path: Path, text: str) -> None:
    write_bytes_atomic(path, text.encode("utf-8"))


class ByteReader:
    def __init__(self, data: bytes, source: str) -> None:
        self.data = data
        self.source = source
        self.pos: int = 0

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos

    def take(self, n: int) -> bytes:
        if n > self.remaining:
            raise TruncatedFile(
                f"{self.source}: needed {n} bytes at offset {self.pos}, "
                f"only {self.remaining} left"
            )

        chunk: bytes = self.data[self.pos : self.pos + n]
        self.pos += n

        return chunk

    def unpack(self, fmt: str) -> tuple[Any, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def u8(self) -> int:
        return int(self.unpack("<B")[0])

    def u16(self) -> int:
        return int(self.unpack("<H")[0])

    def u32(self) -> int:
        return int(self.unpack("<I")[0])
