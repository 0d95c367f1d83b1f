# qosm/commands/simulate.py
from pathlib import Path
from typing import Optional

import typer

from .. import storage
from ..scenarios import TOTAL_INTERVALS, default_scenario
from ..simulator import run_scenario
from . import console, reported_errors

router = typer.Typer()


@router.command("simulate")
def simulate(
    out: Path = typer.Option(..., "--out", help="Trace CSV to write."),
    scenario: Optional[Path] = typer.Option(None, "--scenario", help="YAML scenario file; the default scenario otherwise."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Overrides the scenario seed."),
    intervals: Optional[int] = typer.Option(None, "--intervals", min=1, help="Overrides the scenario length."),
):
    """
    Generates a synthetic trace, plus its topology file and ground-truth
    sidecar next to it.
    """
    with reported_errors():
        if scenario is not None:
            config = storage.load_scenario(scenario)
            updates = {key: value for key, value in (("seed", seed), ("intervals", intervals)) if value is not None}
            config = config.model_validate({**config.model_dump(), **updates})
        else:
            config = default_scenario(seed or 0, intervals or TOTAL_INTERVALS)

        table, truth = run_scenario(config)
        storage.write_trace(table, out)
        topology_path = storage.sidecar_path(out, "topology.yaml")
        truth_path = storage.sidecar_path(out, "truth.json")
        storage.save_topology(config.topology, topology_path)
        storage.write_truth(truth, truth_path)
    console.print(f"Wrote {table.n_intervals} intervals to {out} (topology: {topology_path}, truth: {truth_path})")
