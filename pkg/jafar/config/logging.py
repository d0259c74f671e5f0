"""structlog setup: one coloured line per event on stderr.

stdout is reserved for command results (tables, CSV, JSON summaries), so
every log line goes to stderr and can be silenced with ``--quiet``.
"""

import logging
import os
import sys
from typing import Any, Protocol, cast

import structlog
from colorama import Fore, Style
from structlog.typing import EventDict, WrappedLogger

from jafar.config.environment import LogLevel, settings

LEVEL_COLORS: dict[str, str] = {
    "debug": Fore.CYAN,
    "info": Fore.GREEN,
    "warning": Fore.YELLOW,
    "error": Fore.RED,
    "critical": Fore.MAGENTA,
}

LOG_LEVEL_MAP: dict[LogLevel, int] = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARN": logging.WARNING,
    "ERROR": logging.ERROR,
}

DIM_GREEN = f"{Style.DIM}{Fore.GREEN}"
RESET: str = Style.RESET_ALL

# bound by RunContext; rendered as the [run_id:command] tag, not as extras
RUN_KEYS: tuple[str, ...] = ("run_id", "command", "seed")


def add_pid(_: WrappedLogger, __: str, event_dict: EventDict) -> EventDict:
    event_dict["pid"] = os.getpid()

    return event_dict


def _run_tag(event_dict: EventDict) -> str | None:
    run_id, command = event_dict.get("run_id"), event_dict.get("command")

    if not run_id:
        return None

    return f"{run_id}:{command}" if command else str(run_id)


def concise_renderer(_: WrappedLogger, __: str, event_dict: EventDict) -> str:
    """``time [pid] [LEVEL] [run:command] message key=value ...``"""
    stamp: str = str(event_dict.pop("timestamp", ""))[:-3]
    level: str = str(event_dict.pop("level", ""))
    message: str = str(event_dict.pop("event", ""))
    pid = event_dict.pop("pid", None)
    tag: str | None = _run_tag(event_dict)

    for key in RUN_KEYS:
        event_dict.pop(key, None)

    color: str = LEVEL_COLORS.get(level, Fore.WHITE)
    parts: list[str] = [f"{DIM_GREEN}{stamp}{RESET}"]

    if pid:
        parts.append(f"{Fore.CYAN}[{pid}]{RESET}")

    parts.append(f"{color}[{level.upper().ljust(8)}]{RESET}")

    if tag:
        parts.append(f"{Fore.MAGENTA}[{tag}]{RESET}")

    parts.append(message)

    if event_dict:
        extras: str = " ".join(f"{k}={v}" for k, v in event_dict.items())
        parts.append(f"{Style.DIM}{extras}{RESET}")

    return " ".join(parts)


def configure_logging(level: LogLevel) -> None:
    """(Re)configure structlog; the stream is whatever ``sys.stderr`` is now."""
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            add_pid,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="%Y-%m-%d %H:%M:%S.%f", utc=False),
            concise_renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(
            LOG_LEVEL_MAP.get(level, logging.INFO)
        ),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


configure_logging(settings.LOG_LEVEL)


class LoggerProtocol(Protocol):
    def debug(self, event: str, **kwargs: Any) -> None: ...
    def info(self, event: str, **kwargs: Any) -> None: ...
    def warning(self, event: str, **kwargs: Any) -> None: ...
    def error(self, event: str, **kwargs: Any) -> None: ...


class _LogProxy:
    """Resolves the structlog logger on every call so reconfiguration applies."""

    def __getattr__(self, name: str) -> Any:
        return getattr(structlog.get_logger(), name)


log: LoggerProtocol = cast(LoggerProtocol, _LogProxy())
