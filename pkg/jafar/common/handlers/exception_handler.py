import sys

import click

from jafar.config.logging import log
from jafar.models.error_model import (
    EXIT_IO,
    EXIT_VALIDATION,
    ErrorReport,
    JafarError,
    MissingFlag,
    UnknownSubcommand,
    ValidationFailure,
    error_report,
)

UNKNOWN_COMMAND_MARKERS: tuple[str, ...] = ("No such command", "Missing command")


def translate_usage_error(exc: click.UsageError) -> ValidationFailure:
    if isinstance(exc, click.MissingParameter):
        return MissingFlag(exc.format_message())

    message: str = exc.format_message()

    if any(marker in message for marker in UNKNOWN_COMMAND_MARKERS):
        return UnknownSubcommand(message)

    return ValidationFailure(message)


def report_for(exc: BaseException) -> ErrorReport:
    if isinstance(exc, click.UsageError):
        exc = translate_usage_error(exc)

    if isinstance(exc, JafarError):
        return error_report(exc.exit_code, type(exc).__name__, exc.msg)

    if isinstance(exc, OSError):
        return error_report(EXIT_IO, type(exc).__name__, str(exc))

    return error_report(EXIT_VALIDATION, "InternalError", "Internal error.")


def handle_exception(exc: BaseException) -> int:
    """Log the failure, print its report to stderr and return the exit code."""
    report: ErrorReport = report_for(exc)

    if report.error == "InternalError":
        log.error(f"{report.message} ({type(exc).__name__}: {exc})")

    else:
        log.error(f"{report.error} → {report.message}")

    sys.stderr.write(report.model_dump_json() + "\n")

    return report.status
