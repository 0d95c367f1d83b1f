# qosm/main.py
import logging
from typing import Optional

import typer
from rich.logging import RichHandler

from .commands import err_console, evaluate, inspect_model, run, simulate
from .settings import get_settings

app = typer.Typer(
    name="qosm",
    help="Online QoS modeling for shared cloud infrastructure.",
    no_args_is_help=True,
    add_completion=False,
)


@app.callback()
def main(
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Overrides QOSM_LOG_LEVEL."),
):
    level = (log_level or get_settings().log_level).upper()
    if not isinstance(logging.getLevelName(level), int):
        raise typer.BadParameter(f"unknown log level '{level}'", param_hint="--log-level")
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False, markup=False)],
        force=True,
    )


# --- Include Commands ---
app.add_typer(simulate.router)
app.add_typer(run.router)
app.add_typer(evaluate.router)
app.add_typer(inspect_model.router)
