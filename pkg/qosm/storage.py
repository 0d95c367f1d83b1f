# qosm/storage.py
"""
File formats: YAML topology and scenario files, the long-format trace CSV,
JSON-lines run reports, model dumps and the ground-truth sidecar.
"""
import logging
from pathlib import Path
from typing import List, Union

import numpy as np
import orjson
import pandas as pd
import yaml
from pydantic import ValidationError

from . import schemas
from .errors import ConfigError, ModelFormatError, ReportSchemaError, TraceFormatError
from .learners import TrainedModel
from .simulator import GroundTruth
from .topology import Topology, validate_topology
from .trace import TraceTable

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
TRACE_COLUMNS = ["interval", "entity", "metric", "value"]


def _load_yaml(path: PathLike) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"Cannot read {path}: {exc.strerror}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path} is not valid YAML: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping at the top level")
    return data


def _validation_detail(exc: ValidationError) -> str:
    first = exc.errors()[0]
    where = ".".join(str(part) for part in first["loc"])
    return f"{where}: {first['msg']}" if where else first["msg"]


# --- Topology and scenario files ---

def load_topology(path: PathLike) -> Topology:
    try:
        config = schemas.TopologyConfig.model_validate(_load_yaml(path))
    except ValidationError as exc:
        raise ConfigError(f"Invalid topology file {path}: {_validation_detail(exc)}")
    return validate_topology(config)


def save_topology(topology: Union[Topology, schemas.TopologyConfig], path: PathLike):
    config = topology.to_config() if isinstance(topology, Topology) else topology
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.model_dump(mode="json"), fh, sort_keys=False)


def load_scenario(path: PathLike) -> schemas.ScenarioConfig:
    try:
        return schemas.ScenarioConfig.model_validate(_load_yaml(path))
    except ValidationError as exc:
        raise ConfigError(f"Invalid scenario file {path}: {_validation_detail(exc)}")


# --- Trace CSV ---

def write_trace(table: TraceTable, path: PathLike):
    intervals = np.arange(table.first_interval, table.last_interval + 1)
    n, k = table.data.shape
    frame = pd.DataFrame({
        "interval": np.repeat(intervals, k),
        "entity": [key[0] for key in table.keys] * n,
        "metric": [key[1] for key in table.keys] * n,
        "value": table.data.reshape(-1),
    })
    frame.to_csv(path, index=False, columns=TRACE_COLUMNS)


def read_trace(path: PathLike) -> TraceTable:
    try:
        frame = pd.read_csv(path, float_precision="round_trip", dtype={"entity": str, "metric": str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise TraceFormatError(f"Cannot read trace {path}: {exc}")
    if list(frame.columns) != TRACE_COLUMNS:
        raise TraceFormatError(f"Trace header must be {','.join(TRACE_COLUMNS)}, got {','.join(map(str, frame.columns))}")
    if frame.empty:
        raise TraceFormatError(f"Trace {path} has no rows")
    if frame[["interval", "entity", "metric"]].isna().any().any():
        raise TraceFormatError(f"Trace {path} has rows without interval, entity or metric")
    try:
        wide = frame.pivot(index="interval", columns=["entity", "metric"], values="value")
    except ValueError:
        raise TraceFormatError(f"Trace {path} repeats an (interval, entity, metric) row")
    wide = wide.sort_index().sort_index(axis=1)
    index = wide.index.to_numpy()
    if not np.array_equal(index, np.arange(index[0], index[0] + len(index))):
        raise TraceFormatError(f"Trace {path} intervals are not contiguous")
    if wide.isna().any().any():
        raise TraceFormatError(f"Trace {path} does not report every metric at every interval")
    keys = [(str(entity), str(metric)) for entity, metric in wide.columns]
    logger.info("trace loaded path=%s intervals=%d series=%d", path, len(index), len(keys))
    return TraceTable(int(index[0]), keys, wide.to_numpy(dtype=float))


def sidecar_path(trace_path: PathLike, suffix: str) -> Path:
    trace_path = Path(trace_path)
    return trace_path.with_name(f"{trace_path.stem}.{suffix}")


def write_truth(truth: GroundTruth, path: PathLike):
    Path(path).write_bytes(orjson.dumps(truth.to_dump().model_dump(mode="json")))


def read_truth(path: PathLike) -> schemas.TruthDump:
    try:
        return schemas.TruthDump.model_validate(orjson.loads(Path(path).read_bytes()))
    except (OSError, orjson.JSONDecodeError, ValidationError) as exc:
        raise TraceFormatError(f"Cannot read ground truth {path}: {exc}")


# --- Run reports ---

def write_report(report: schemas.RunReport, path: PathLike):
    with open(path, "wb") as fh:
        for record in report.records:
            fh.write(orjson.dumps(record.model_dump(mode="json")) + b"\n")
        fh.write(orjson.dumps(report.summary.model_dump(mode="json")) + b"\n")


def read_report(path: PathLike) -> schemas.RunReport:
    records: List[schemas.IntervalRecord] = []
    summary = None
    try:
        lines = Path(path).read_bytes().splitlines()
    except OSError as exc:
        raise ReportSchemaError(f"Cannot read report {path}: {exc.strerror}")
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            item = orjson.loads(line)
            if item.get("kind") == "summary":
                summary = schemas.RunSummary.model_validate(item)
            else:
                records.append(schemas.IntervalRecord.model_validate(item))
        except (orjson.JSONDecodeError, ValidationError, AttributeError) as exc:
            raise ReportSchemaError(f"{path}:{number} is not a report line: {exc}")
    if summary is None:
        raise ReportSchemaError(f"{path} has no summary footer")
    if summary.format != schemas.REPORT_FORMAT:
        raise ReportSchemaError(f"{path} uses report format '{summary.format}', expected {schemas.REPORT_FORMAT}")
    return schemas.RunReport(records=records, summary=summary)


# --- Model dumps ---

def write_model(model: TrainedModel, path: PathLike):
    payload = model.to_dump().model_dump(mode="json")
    Path(path).write_bytes(orjson.dumps(payload, option=orjson.OPT_INDENT_2))


def read_model(path: PathLike) -> TrainedModel:
    try:
        dump = schemas.ModelDump.model_validate(orjson.loads(Path(path).read_bytes()))
    except OSError as exc:
        raise ModelFormatError(f"Cannot read model {path}: {exc.strerror}")
    except (orjson.JSONDecodeError, ValidationError) as exc:
        raise ModelFormatError(f"{path} is not a model dump: {exc}")
    return TrainedModel.from_dump(dump)
