import sys
from collections.abc import Sequence

from jafar.cli.cli_routes import cli
from jafar.common.handlers.exception_handler import handle_exception
from jafar.common.store.run_context import RunContext
from jafar.models.error_model import EXIT_OK


def run(argv: Sequence[str] | None = None) -> int:
    """Run one CLI invocation and return its exit code."""
    try:
        result = cli.main(
            args=list(argv) if argv is not None else None,
            prog_name="jafar",
            standalone_mode=False,
        )

    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_OK

    except Exception as exc:
        return handle_exception(exc)

    finally:
        RunContext.clear()

    return result if isinstance(result, int) else EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
