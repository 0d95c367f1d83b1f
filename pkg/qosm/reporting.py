# qosm/reporting.py
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from rich.table import Table

from . import schemas
from .ensemble import smape_detail
from .errors import NoValidTermsError, ReportSchemaError
from .models import Algorithm, SelectionMode

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = [
    "report", "service", "qos", "selection", "learners", "seed", "smape", "n_terms", "mean_inputs",
    "mean_wall_time", "mean_selection_time", "mean_training_time",
]
NUMERIC_COLUMNS = set(COMPARISON_COLUMNS[5:])


def evaluation_records(records: Sequence[schemas.IntervalRecord], eval_window: int) -> List[schemas.IntervalRecord]:
    """The last `eval_window` intervals that carry a prediction."""
    predicted = [r for r in records if r.prediction is not None]
    return predicted[-eval_window:]


def summarize(
    records: Sequence[schemas.IntervalRecord],
    *,
    service: str,
    qos: str,
    selection: SelectionMode,
    learners: List[Algorithm],
    seed: int,
    eval_window: int,
) -> schemas.RunSummary:
    """Summary fields are computed from the per-interval records alone."""
    window = evaluation_records(records, eval_window)
    smape: Optional[float] = None
    n_terms = skipped = 0
    if window:
        try:
            result = smape_detail([r.prediction for r in window], [r.actual for r in window])
            smape, n_terms, skipped = result.value, result.n_terms, result.skipped
        except NoValidTermsError:
            skipped = len(window)
            logger.info("smape undefined: all %d terms skipped", skipped)
    timings = {
        name: [getattr(r, name) for r in window if getattr(r, name) is not None]
        for name in ("wall_time", "selection_time", "training_time")
    }
    return schemas.RunSummary(
        service=service,
        qos=qos,
        selection=selection,
        learners=learners,
        seed=seed,
        eval_window=eval_window,
        smape=smape,
        n_terms=n_terms,
        skipped_terms=skipped,
        mean_inputs=float(np.mean([len(r.selected) for r in window])) if window else None,
        mean_wall_time=_mean(timings["wall_time"]),
        mean_selection_time=_mean(timings["selection_time"]),
        mean_training_time=_mean(timings["training_time"]),
    )


def _mean(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def resummarize(report: schemas.RunReport) -> schemas.RunSummary:
    summary = report.summary
    return summarize(
        report.records,
        service=summary.service,
        qos=summary.qos,
        selection=summary.selection,
        learners=summary.learners,
        seed=summary.seed,
        eval_window=summary.eval_window,
    )


# --- Comparison ---

def comparison_frame(reports: Sequence[Tuple[str, schemas.RunReport]]) -> pd.DataFrame:
    if not reports:
        raise ReportSchemaError("Nothing to compare: no reports given")
    rows = []
    for name, report in reports:
        summary = report.summary
        if summary.format != schemas.REPORT_FORMAT:
            raise ReportSchemaError(f"{name}: report format '{summary.format}' is not {schemas.REPORT_FORMAT}")
        rows.append({
            "report": name,
            "service": summary.service,
            "qos": summary.qos,
            "selection": summary.selection.value,
            "learners": "+".join(a.value for a in summary.learners),
            "seed": summary.seed,
            "smape": summary.smape,
            "n_terms": summary.n_terms,
            "mean_inputs": summary.mean_inputs,
            "mean_wall_time": summary.mean_wall_time,
            "mean_selection_time": summary.mean_selection_time,
            "mean_training_time": summary.mean_training_time,
        })
    return pd.DataFrame(rows, columns=COMPARISON_COLUMNS)


def _cell(value) -> str:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return "-"
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def comparison_table(frame: pd.DataFrame) -> Table:
    table = Table(title="SMAPE comparison")
    for column in frame.columns:
        table.add_column(column, justify="right" if column in NUMERIC_COLUMNS else "left")
    for row in frame.itertuples(index=False):
        table.add_row(*(_cell(value) for value in row))
    return table
