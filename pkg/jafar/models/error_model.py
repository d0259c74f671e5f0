from datetime import UTC, datetime

from pydantic import BaseModel, Field

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class JafarError(RuntimeError):
    exit_code: int = EXIT_VALIDATION

    def __init__(self, message: str) -> None:
        self.msg = message
        super().__init__(message)


class ValidationFailure(JafarError):
    exit_code = EXIT_VALIDATION


class StorageError(JafarError):
    exit_code = EXIT_IO


# tensor_autodiff
class ShapeMismatch(ValidationFailure): ...


class DivisionByZero(ValidationFailure): ...


class NonFiniteInput(ValidationFailure): ...


class InvalidTargetSize(ValidationFailure): ...


class NonScalarLoss(ValidationFailure): ...


class DoubleBackward(ValidationFailure): ...


# nn_blocks / jafar_model
class OddHeadDim(ValidationFailure): ...


class IndivisibleHeads(ValidationFailure): ...


class StrategyMismatch(ValidationFailure): ...


class IndexOutOfRange(ValidationFailure): ...


# encoder_stub
class IndivisibleImage(ValidationFailure): ...


# training
class NonFiniteGradient(ValidationFailure): ...


class NonFiniteLoss(ValidationFailure):
    def __init__(self, message: str, *, step: int) -> None:
        self.step = step
        super().__init__(message)


class ConfigError(ValidationFailure): ...


# eval_metrics
class NonPositiveFullScore(ValidationFailure): ...


class ConstantMap(ValidationFailure): ...


class UndefinedHarmonicMean(ValidationFailure): ...


class GradCheckFailed(ValidationFailure): ...


# io_cli
class UnknownSubcommand(ValidationFailure): ...


class MissingFlag(ValidationFailure): ...


class BadMagic(StorageError): ...


class TruncatedFile(StorageError): ...


class UnsupportedVersion(StorageError): ...


class HeaderPayloadMismatch(StorageError): ...


class ErrorReport(BaseModel):
    status: int = Field(
        ...,
        ge=1,
        description="Process exit code associated with the failure.",
        examples=[EXIT_VALIDATION],
    )

    error: str = Field(
        ...,
        description="Error class name.",
        examples=["ShapeMismatch"],
    )

    message: str = Field(
        ...,
        description="Human-readable error message.",
        examples=["checkpoint expects C=32 but feature file has C=16"],
    )

    timestamp: int = Field(
        ...,
        description="Unix timestamp in milliseconds.",
        examples=[1_764_281_029_000],
    )


def error_report(status: int, error: str, message: str) -> ErrorReport:
    ts_ms: int = int(datetime.now(UTC).timestamp() * 1_000)

    return ErrorReport(status=status, error=error, message=message, timestamp=ts_ms)
