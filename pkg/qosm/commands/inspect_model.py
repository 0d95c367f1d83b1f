# qosm/commands/inspect_model.py
from pathlib import Path
from typing import Optional

import typer
from rich.table import Table

from .. import storage
from ..errors import ConfigError
from . import console, reported_errors

router = typer.Typer()


@router.command("inspect-model")
def inspect_model(
    path: Path = typer.Argument(..., help="Model dump written by run --dump-models."),
    input_vector: Optional[str] = typer.Option(None, "--input", help="Comma-separated input vector to predict."),
):
    """
    Prints a dumped model's structure and, given an input, its prediction.
    """
    with reported_errors():
        model = storage.read_model(path)
        prediction = None
        if input_vector is not None:
            try:
                values = [float(v) for v in input_vector.split(",") if v.strip()]
            except ValueError:
                raise ConfigError(f"--input must be comma-separated numbers, got '{input_vector}'")
            prediction = model.predict(values)

    table = Table(title=f"{model.algorithm.value} model")
    table.add_column("field")
    table.add_column("value")
    for key, value in model.describe().items():
        table.add_row(key, str(value))
    table.add_row("columns", ", ".join(c.label for c in model.layout.columns) or "-")
    table.add_row("autoregressive", str(model.layout.autoregressive))
    console.print(table)
    if prediction is not None:
        console.print(f"prediction: {prediction!r}", markup=False, highlight=False)
