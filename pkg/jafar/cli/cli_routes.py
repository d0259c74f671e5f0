import click

from jafar.cli.controllers.diagnostics_controller import gradcheck_command
from jafar.cli.controllers.eval_controller import (
    cam_metrics_command,
    eval_gen_command,
    viz_pca_command,
)
from jafar.cli.controllers.model_controller import (
    baseline_command,
    upsample_command,
    viz_attn_command,
)
from jafar.cli.controllers.train_controller import ablate_command, train_command
from jafar.common.store.run_context import RunContext
from jafar.config.environment import AppSettings, LogLevel, load_settings, settings
from jafar.config.logging import configure_logging


@click.group(name="jafar")
@click.option("--seed", type=int, default=42, show_default=True, help="Seed for every random stream.")
@click.option("--quiet", is_flag=True, help="Only log warnings and errors.")
@click.pass_context
def cli(ctx: click.Context, seed: int, quiet: bool) -> None:
    """Attention-based feature upsampling on a desk-scale budget."""
    level: LogLevel = "WARN" if quiet else settings.LOG_LEVEL
    app: AppSettings = load_settings(SEED=seed, LOG_LEVEL=level)

    configure_logging(app.LOG_LEVEL)
    RunContext.begin(ctx.invoked_subcommand or "", app.SEED)

    ctx.obj = app


cli.add_command(train_command)
cli.add_command(ablate_command)
cli.add_command(upsample_command)
cli.add_command(baseline_command)
cli.add_command(viz_attn_command)
cli.add_command(eval_gen_command)
cli.add_command(viz_pca_command)
cli.add_command(cam_metrics_command)
cli.add_command(gradcheck_command)
