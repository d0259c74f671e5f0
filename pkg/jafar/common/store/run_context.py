from __future__ import annotations

import uuid
from contextvars import ContextVar
from dataclasses import dataclass

import structlog


@dataclass(frozen=True, slots=True)
class RunContextData:
    run_id: str
    command: str
    seed: int


_run_context: ContextVar[RunContextData | None] = ContextVar(
    "run_context", default=None
)


class RunContext:
    @staticmethod
    def get() -> RunContextData | None:
        return _run_context.get()

    @staticmethod
    def begin(command: str, seed: int) -> RunContextData:
        ctx: RunContextData = RunContextData(
            run_id=uuid.uuid4().hex[:8],
            command=command,
            seed=seed,
        )

        structlog.contextvars.bind_contextvars(
            run_id=ctx.run_id,
            command=ctx.command,
            seed=ctx.seed,
        )
        _run_context.set(ctx)

        return ctx

    @staticmethod
    def clear() -> None:
        structlog.contextvars.clear_contextvars()
        _run_context.set(None)
