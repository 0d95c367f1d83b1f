# qosm/commands/run.py
import logging
from pathlib import Path
from typing import List, Optional

import orjson
import typer

from .. import storage
from ..engine import OnlineModeler, RunConfig
from ..errors import ConfigError
from ..models import Algorithm, SelectionMode
from . import reported_errors

logger = logging.getLogger(__name__)

router = typer.Typer()


def parse_learners(value: str) -> List[Algorithm]:
    learners = []
    for name in (part.strip() for part in value.split(",")):
        if not name:
            continue
        try:
            algorithm = Algorithm(name)
        except ValueError:
            choices = ", ".join(a.value for a in Algorithm)
            raise ConfigError(f"Unknown learner '{name}' (choose from {choices})")
        if algorithm in learners:
            raise ConfigError(f"Learner '{name}' is listed twice")
        learners.append(algorithm)
    if not learners:
        raise ConfigError("At least one learner is required")
    return learners


@router.command("run")
def run(
    trace: Path = typer.Option(..., "--trace", help="Long-format trace CSV."),
    topology: Path = typer.Option(..., "--topology", help="Topology YAML."),
    service: str = typer.Option(..., "--service", help="Target service path, e.g. pm0/vm0/svc1."),
    qos: str = typer.Option("response_time", "--qos", help="QoS attribute to model."),
    learners: str = typer.Option("armax,ann,rt", "--learners", help="Comma-separated candidate learners."),
    selection: SelectionMode = typer.Option(SelectionMode.hybrid, "--selection"),
    eval_window: Optional[int] = typer.Option(None, "--eval-window", help="Predicted intervals scored in the summary."),
    seed: int = typer.Option(0, "--seed"),
    bins: Optional[int] = typer.Option(None, "--bins"),
    budget: Optional[int] = typer.Option(None, "--budget", help="Stagnant proposals before the mRMR search stops."),
    out: Optional[Path] = typer.Option(None, "--out", help="Report file; stdout when absent."),
    dump_models: Optional[Path] = typer.Option(None, "--dump-models", help="Directory for the final main models."),
    record_timing: bool = typer.Option(False, "--record-timing", help="Record wall, selection and training time per interval."),
):
    """
    Runs the online modeling loop over a trace and writes the JSON-lines
    report.
    """
    with reported_errors():
        config = RunConfig.from_settings(
            service=service,
            qos=qos,
            learners=tuple(parse_learners(learners)),
            selection=selection,
            seed=seed,
            eval_window=eval_window,
            bins=bins,
            budget=budget,
            record_timing=record_timing,
        )
        modeler = OnlineModeler(storage.load_topology(topology), storage.read_trace(trace), config)
        report = modeler.run()

        if out is not None:
            storage.write_report(report, out)
            logger.info("report written path=%s", out)
        else:
            for record in report.records:
                typer.echo(orjson.dumps(record.model_dump(mode="json")).decode())
            typer.echo(orjson.dumps(report.summary.model_dump(mode="json")).decode())

        if dump_models is not None:
            dump_models.mkdir(parents=True, exist_ok=True)
            for model in modeler.final_models():
                path = dump_models / f"{model.algorithm.value}.json"
                storage.write_model(model, path)
                logger.info("model written path=%s", path)
