"""JFCK checkpoints.

    magic "JFCK" | version u32 = 1 | param_count u32
    per parameter: name_len u16 | UTF-8 name | rank u8 | dims u32 * rank | float32 data
    config: length u32 | UTF-8 ``key=value`` lines (model shape, key strategy,
            RoPE settings and the seed and patch of the frozen encoder)

Parameters are written in ``parameter_layout`` order; everything is
little-endian.
"""

import struct
from pathlib import Path

import numpy as np

from jafar.config.logging import log
from jafar.core.tensor import Tensor
from jafar.model.params import (
    KEY_STRATEGIES,
    JafarParams,
    KeyStrategy,
    parameter_layout,
    validate_shape_config,
)
from jafar.models.error_model import (
    BadMagic,
    HeaderPayloadMismatch,
    NonFiniteInput,
    UnsupportedVersion,
    ValidationFailure,
)
from jafar.storage.binary import ByteReader, write_bytes_atomic

MAGIC = b"JFCK"
VERSION = 1
F32_LE = np.dtype("<f4")
CONFIG_KEYS: tuple[str, ...] = (
    "c_in",
    "d",
    "n_heads",
    "key_strategy",
    "rope_base",
    "use_rope",
    "encoder_seed",
    "encoder_patch",
)


def _config_text(items: dict[str, str]) -> bytes:
    return "".join(f"{key}={value}\n" for key, value in items.items()).encode("utf-8")


def _utf8(raw: bytes, what: str, source: str) -> str:
    try:
        return raw.decode("utf-8")

    except UnicodeDecodeError as err:
        raise HeaderPayloadMismatch(f"{source}: {what} is not valid UTF-8") from err


def _parse_config(text: str, source: str) -> dict[str, str]:
    items: dict[str, str] = {}

    for line in text.splitlines():
        if not line.strip():
            continue

        key, sep, value = line.partition("=")

        if not sep:
            raise HeaderPayloadMismatch(f"{source}: malformed config line {line!r}")

        items[key.strip()] = value.strip()

    missing: list[str] = [key for key in CONFIG_KEYS if key not in items]

    if missing:
        raise HeaderPayloadMismatch(f"{source}: config block lacks {', '.join(missing)}")

    return items


class CheckpointRepository:
    def encode(self, p: JafarParams) -> bytes:
        parts: list[bytes] = [MAGIC, struct.pack("<II", VERSION, len(p.tensors))]

        for name, t in p.tensors.items():
            if not np.all(np.isfinite(t.data)):
                raise NonFiniteInput(f"parameter '{name}' contains NaN or Inf")

            encoded: bytes = name.encode("utf-8")
            parts.append(struct.pack("<H", len(encoded)) + encoded)
            parts.append(struct.pack(f"<B{t.ndim}I", t.ndim, *t.shape))
            parts.append(np.ascontiguousarray(t.data, dtype=F32_LE).tobytes())

        config: bytes = _config_text(p.config_items())
        parts.append(struct.pack("<I", len(config)) + config)

        return b"".join(parts)

    def decode(self, data: bytes, source: str = "<bytes>") -> JafarParams:
        reader: ByteReader = ByteReader(data, source)

        if reader.take(4) != MAGIC:
            raise BadMagic(f"{source}: not a JFCK checkpoint")

        version: int = reader.u32()

        if version != VERSION:
            raise UnsupportedVersion(f"{source}: checkpoint version {version}")

        count: int = reader.u32()
        tensors: dict[str, Tensor] = {}

        for _ in range(count):
            name: str = _utf8(reader.take(reader.u16()), "parameter name", source)
            rank: int = reader.u8()
            dims: tuple[int, ...] = reader.unpack(f"<{rank}I")
            size: int = int(np.prod(dims)) if dims else 1
            values = np.frombuffer(reader.take(size * F32_LE.itemsize), dtype=F32_LE)

            tensors[name] = Tensor(
                values.astype(np.float32).reshape(dims), requires_grad=True, name=name
            )

        config_len: int = reader.u32()
        config: dict[str, str] = _parse_config(
            _utf8(reader.take(config_len), "config block", source), source
        )

        if reader.remaining:
            raise HeaderPayloadMismatch(
                f"{source}: {reader.remaining} trailing bytes after the config block"
            )

        return self._assemble(tensors, config, source)

    def _assemble(
        self, tensors: dict[str, Tensor], config: dict[str, str], source: str
    ) -> JafarParams:
        strategy: str = config["key_strategy"]

        if strategy not in KEY_STRATEGIES:
            raise HeaderPayloadMismatch(f"{source}: unknown key_strategy '{strategy}'")

        key_strategy: KeyStrategy = strategy  # type: ignore[assignment]

        try:
            c_in, d, n_heads = (int(config[k]) for k in ("c_in", "d", "n_heads"))
            rope_base: float = float(config["rope_base"])
            rope = validate_shape_config(d, n_heads, rope_base)
            encoder_seed, encoder_patch = (
                int(config[k]) for k in ("encoder_seed", "encoder_patch")
            )

            if encoder_seed < 0 or encoder_patch < 1:
                raise ValueError(
                    f"encoder_seed={encoder_seed}, encoder_patch={encoder_patch}"
                )

        except (ValueError, ValidationFailure) as err:
            raise HeaderPayloadMismatch(f"{source}: bad config block: {err}") from err

        expected: dict[str, tuple[int, ...]] = {
            spec.name: spec.shape for spec in parameter_layout(c_in, d, key_strategy)
        }
        found: dict[str, tuple[int, ...]] = {name: t.shape for name, t in tensors.items()}

        if list(expected.items()) != list(found.items()):
            raise HeaderPayloadMismatch(
                f"{source}: parameters do not match the {key_strategy} layout "
                f"for c_in={c_in}, d={d}"
            )

        return JafarParams(
            tensors=tensors,
            c_in=c_in,
            d=d,
            n_heads=n_heads,
            rope=rope,
            key_strategy=key_strategy,
            use_rope=config["use_rope"].lower() == "true",
            encoder_seed=encoder_seed,
            encoder_patch=encoder_patch,
        )

    def save(self, path: Path, p: JafarParams) -> None:
        write_bytes_atomic(path, self.encode(p))
        log.debug(f"Wrote checkpoint ({p.count()} values) → {path}")

    def load(self, path: Path) -> JafarParams:
        params: JafarParams = self.decode(path.read_bytes(), str(path))
        log.info(
            f"Loaded checkpoint {path} → {params.key_strategy}, d={params.d}, "
            f"heads={params.n_heads}, C={params.c_in}"
        )

        return params


checkpoint_repo = CheckpointRepository()
