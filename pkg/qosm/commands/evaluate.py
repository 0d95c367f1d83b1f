# qosm/commands/evaluate.py
from pathlib import Path
from typing import List, Optional

import typer

from .. import storage
from ..errors import ReportSchemaError
from ..reporting import comparison_frame, comparison_table, resummarize
from . import console, reported_errors

router = typer.Typer()

SMAPE_TOLERANCE = 1e-9


@router.command("evaluate")
def evaluate(
    reports: List[Path] = typer.Argument(..., help="Run reports to compare."),
    out: Optional[Path] = typer.Option(None, "--out", help="Also write the comparison as CSV."),
):
    """
    Side-by-side SMAPE and mean input count of several runs.
    """
    with reported_errors():
        loaded = []
        for path in reports:
            report = storage.read_report(path)
            recomputed = resummarize(report)
            stored = report.summary
            if (stored.smape is None) != (recomputed.smape is None) or (
                stored.smape is not None and abs(stored.smape - recomputed.smape) > SMAPE_TOLERANCE
            ):
                raise ReportSchemaError(f"{path}: summary SMAPE does not match its interval records")
            loaded.append((str(path), report))
        frame = comparison_frame(loaded)
        if out is not None:
            frame.to_csv(out, index=False)
    console.print(comparison_table(frame))
