# qosm/commands/__init__.py
from contextlib import contextmanager

import typer
from pydantic import ValidationError
from rich.console import Console

from ..errors import ConfigError, QoSMError

console = Console()
err_console = Console(stderr=True)


@contextmanager
def reported_errors():
    """
    Turns library errors into one categorized line on stderr and the
    category's exit code.
    """
    try:
        yield
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        error = ConfigError(f"{where}: {first['msg']}" if where else first["msg"])
        err_console.print(f"error[{error.category}]: {error.detail}", markup=False, highlight=False, soft_wrap=True)
        raise typer.Exit(code=error.exit_code)
    except QoSMError as exc:
        err_console.print(f"error[{exc.category}]: {exc.detail}", markup=False, highlight=False, soft_wrap=True)
        raise typer.Exit(code=exc.exit_code)
