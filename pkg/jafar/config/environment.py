from typing import Any, Literal

from pydantic import Field, ValidationError
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from jafar.models.error_model import ConfigError

SEMVER_REGEX = r"^\d+\.\d+\.\d+$"

LogLevel = Literal["DEBUG", "INFO", "WARN", "ERROR"]


class AppSettings(BaseSettings):
    APP_NAME: str = Field("jafar", min_length=1, max_length=120)
    APP_VERSION: str = Field("1.0.0", pattern=SEMVER_REGEX)

    LOG_LEVEL: LogLevel = "INFO"
    SEED: int = Field(42, ge=0, lt=2**64)

    model_config = SettingsConfigDict(
        case_sensitive=True,
        validate_default=True,
        extra="ignore",
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
        # flags only: the tool reads no environment variables
        return (init_settings,)


def format_validation_error(err: ValidationError) -> str:
    parts: list[str] = []

    for issue in err.errors():
        field_path: str = ".".join(str(p) for p in issue.get("loc", []))
        msg: str = issue.get("msg", "Invalid value")

        if field_path:
            parts.append(f"{field_path} → {msg}")

        else:
            parts.append(msg)

    return "; ".join(parts)


def load_settings(**overrides: Any) -> AppSettings:
    try:
        return AppSettings(**overrides)

    except ValidationError as err:
        raise ConfigError(
            f"Settings validation failed: {format_validation_error(err)}."
        ) from err


settings: AppSettings = load_settings()
