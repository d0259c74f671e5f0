"""Click parameter types shared by the command controllers."""

from pathlib import Path
from typing import Any

import click

FILE = click.Path(path_type=Path, dir_okay=False)


class IntList(click.ParamType):
    """Comma-separated integers, e.g. ``2,4,8``."""

    name = "int-list"

    def __init__(self, length: int | None = None) -> None:
        self.length = length

    def convert(self, value: Any, param: click.Parameter | None, ctx: click.Context | None) -> list[int]:
        if isinstance(value, list):
            return value

        try:
            items: list[int] = [int(part) for part in str(value).split(",") if part.strip()]

        except ValueError:
            self.fail(f"{value!r} is not a comma-separated list of integers", param, ctx)

        if not items or (self.length is not None and len(items) != self.length):
            expected: str = f"{self.length} integers" if self.length else "at least one integer"
            self.fail(f"{value!r}: expected {expected}", param, ctx)

        return items


class NameList(click.ParamType):
    """Comma-separated names drawn from ``choices``."""

    name = "name-list"

    def __init__(self, choices: tuple[str, ...]) -> None:
        self.choices = choices

    def convert(self, value: Any, param: click.Parameter | None, ctx: click.Context | None) -> list[str]:
        if isinstance(value, list):
            return value

        items: list[str] = [part.strip() for part in str(value).split(",") if part.strip()]
        unknown: list[str] = [item for item in items if item not in self.choices]

        if not items or unknown:
            self.fail(
                f"{value!r}: expected a comma-separated subset of {', '.join(self.choices)}",
                param,
                ctx,
            )

        return items


INT_LIST = IntList()
INDEX_PAIR = IntList(length=2)


def merge_paths(flagged: tuple[Path, ...], extra: tuple[Path, ...]) -> list[Path]:
    """``--inputs a b c`` parses as one flagged path plus positional extras."""
    return [*flagged, *extra]
