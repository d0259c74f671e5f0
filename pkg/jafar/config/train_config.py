"""Training configuration read from flat ``key = value`` text files.

    # desk run
    steps = 2000
    delta_set = 32, 24, 16   # LR image sizes
    key_strategy = sft

Keys are case-insensitive, ``#`` starts a comment, list values are
comma-separated. Unknown keys are rejected.
"""

from __future__ import annotations

from contextvars import ContextVar
from pathlib import Path
from typing import Any, get_origin

from pydantic import Field, ValidationError, model_validator
from pydantic.fields import FieldInfo
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from jafar.config.environment import format_validation_error
from jafar.config.logging import log
from jafar.model.params import KeyStrategy
from jafar.models.error_model import ConfigError

DEFAULT_HR_SIZE = 64
MIN_FACTOR = 2.0
MAX_FACTOR = 4.0

_active_source: ContextVar[dict[str, Any]] = ContextVar("train_config_source", default={})


def parse_key_value(text: str) -> dict[str, str]:
    values: dict[str, str] = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        line: str = raw.split("#", 1)[0].strip()

        if not line:
            continue

        if "=" not in line:
            raise ConfigError(f"config line {number}: expected 'key = value', got {raw!r}")

        key, value = (part.strip() for part in line.split("=", 1))

        if not key:
            raise ConfigError(f"config line {number}: missing key")

        values[key.lower()] = value

    return values


class KeyValueSettingsSource(PydanticBaseSettingsSource):
    """Settings source backed by one parsed ``key = value`` file."""

    def __init__(self, settings_cls: type[BaseSettings], values: dict[str, Any]) -> None:
        super().__init__(settings_cls)
        self.values = values

    def get_field_value(self, field: FieldInfo, field_name: str) -> tuple[Any, str, bool]:
        return self.values.get(field_name), field_name, False

    def _coerce(self, name: str, value: Any) -> Any:
        field: FieldInfo | None = self.settings_cls.model_fields.get(name)

        if field is None or not isinstance(value, str):
            return value

        if get_origin(field.annotation) in (list, tuple):
            return [item.strip() for item in value.split(",") if item.strip()]

        return value

    def __call__(self) -> dict[str, Any]:
        return {name: self._coerce(name, value) for name, value in self.values.items()}


class TrainConfig(BaseSettings):
    steps: int = Field(2000, ge=1)
    lr: float = Field(2e-4, gt=0)
    batch: int = Field(4, ge=1)
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = Field(1e-8, gt=0)
    weight_decay: float = Field(0.0, ge=0)

    hr_image_size: int = Field(DEFAULT_HR_SIZE, ge=16)
    guidance_size: int = Field(DEFAULT_HR_SIZE // 2, ge=1)
    delta_set: list[int] = Field(default_factory=lambda: [32, 24, 16], min_length=1)

    seed: int = Field(42, ge=0, lt=2**64)
    checkpoint_every: int = Field(0, ge=0)
    checkpoint_path: Path | None = None
    log_every: int = Field(50, ge=1)

    d: int = Field(64, ge=4)
    n_heads: int = Field(4, ge=1)
    key_strategy: KeyStrategy = "sft"
    use_rope: bool = True
    rope_base: float = Field(100.0, gt=1.0)

    patch: int = Field(4, ge=1)
    c_out: int = Field(32, ge=1)
    encoder_seed: int = Field(7, ge=0, lt=2**64)

    model_config = SettingsConfigDict(
        case_sensitive=False,
        validate_default=True,
        extra="forbid",
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings, KeyValueSettingsSource(settings_cls, _active_source.get()))

    @model_validator(mode="before")
    @classmethod
    def _default_guidance(cls, data: Any) -> Any:
        if not isinstance(data, dict) or data.get("guidance_size") is not None:
            return data

        try:
            hr = int(data.get("hr_image_size", DEFAULT_HR_SIZE))

        except (TypeError, ValueError):
            return data

        return {**data, "guidance_size": hr // 2}

    @model_validator(mode="after")
    def _check_geometry(self) -> TrainConfig:
        if self.hr_image_size % self.patch:
            raise ValueError(
                f"hr_image_size {self.hr_image_size} not divisible by patch {self.patch}"
            )

        if self.guidance_size % self.patch:
            raise ValueError(
                f"guidance_size {self.guidance_size} not divisible by patch {self.patch}"
            )

        for size in self.delta_set:
            if size < self.patch or size % self.patch:
                raise ValueError(f"LR size {size} not divisible by patch {self.patch}")

            factor: float = self.hr_image_size / size

            if not MIN_FACTOR <= factor <= MAX_FACTOR:
                raise ValueError(
                    f"LR size {size} implies factor {factor:.3g}, outside "
                    f"[{MIN_FACTOR:g}, {MAX_FACTOR:g}]"
                )

        if self.d % self.n_heads:
            raise ValueError(f"d={self.d} not divisible by n_heads={self.n_heads}")

        if (self.d // self.n_heads) % 4:
            raise ValueError(f"head_dim {self.d // self.n_heads} must be a multiple of 4")

        for beta in self.betas:
            if not 0.0 <= beta < 1.0:
                raise ValueError(f"beta {beta} outside [0, 1)")

        return self

    @property
    def hr_grid(self) -> int:
        return self.hr_image_size // self.patch


def load_train_config(
    path: Path | None = None,
    defaults: dict[str, Any] | None = None,
    **overrides: Any,
) -> TrainConfig:
    """File values beat ``defaults``; explicit ``overrides`` beat both."""
    values: dict[str, Any] = dict(defaults or {})

    if path is not None:
        values.update(parse_key_value(path.read_text(encoding="utf-8")))

    token = _active_source.set(values)

    try:
        cfg: TrainConfig = TrainConfig(**overrides)

    except ValidationError as err:
        raise ConfigError(
            f"Train config validation failed: {format_validation_error(err)}."
        ) from err

    finally:
        _active_source.reset(token)

    log.info(
        f"Train config → steps={cfg.steps} batch={cfg.batch} "
        f"strategy={cfg.key_strategy} delta_set={cfg.delta_set}"
    )

    return cfg
