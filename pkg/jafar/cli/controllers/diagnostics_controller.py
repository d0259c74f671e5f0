import click

from jafar.config.environment import AppSettings
from jafar.evaluation.gradcheck_suite import COMPOSITE_TOL, OP_TOL, SuiteResult, run_suite
from jafar.models.error_model import GradCheckFailed


## gradcheck
@click.command("gradcheck")
@click.option("--tol", type=float, default=OP_TOL, show_default=True, help="Per-op tolerance.")
@click.option(
    "--composite-tol",
    type=float,
    default=COMPOSITE_TOL,
    show_default=True,
    help="Tolerance for the full-model check.",
)
@click.option(
    "--precision",
    type=click.Choice(["float64", "float32"]),
    default="float64",
    show_default=True,
    help="Tape precision; finite differences always run in float64.",
)
@click.pass_obj
def gradcheck_command(
    app: AppSettings, tol: float, composite_tol: float, precision: str
) -> None:
    """Check every op and the full model against central differences."""
    results: list[SuiteResult] = run_suite(
        app.SEED, tol=tol, composite_tol=composite_tol, tape_dtype=precision
    )

    for r in results:
        verdict: str = "ok" if r.passed else "FAIL"
        click.echo(f"{r.name:<22} {r.worst:.3e}  (tol {r.tol:.0e})  {verdict}")

    failed: list[str] = [r.name for r in results if not r.passed]

    if failed:
        raise GradCheckFailed(f"gradient check failed for: {', '.join(failed)}")
