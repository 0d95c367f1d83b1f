import numpy as np
import pytest
import yaml

from qosm import schemas, storage
from qosm.errors import ConfigError, ModelFormatError, ReportSchemaError, TraceFormatError
from qosm.models import Algorithm, SelectionMode

from .factories import SUBJECT, hardware, leaf_model, small_topology_config

HEADER = "interval,entity,metric,value\n"


def _write(path, body):
    path.write_text(HEADER + body, encoding="utf-8")
    return path


def _report() -> schemas.RunReport:
    records = [
        schemas.IntervalRecord(interval=8, actual=10.0),
        schemas.IntervalRecord(
            interval=9,
            selected=["pm0/vm0:cpu"],
            vectors=[schemas.VectorErrorRecord(algorithm=Algorithm.rt, e_local=0.1, e_global=0.2, e=0.03)],
            chosen=Algorithm.rt,
            prediction=11.0,
            actual=10.0,
            term_error=1.0 / 21.0,
            alpha=0.1,
            beta=0.1,
        ),
    ]
    summary = schemas.RunSummary(
        service=SUBJECT, qos="response_time", selection=SelectionMode.hybrid,
        learners=[Algorithm.rt], seed=0, eval_window=2, smape=100.0 / 21.0, n_terms=1,
    )
    return schemas.RunReport(records=records, summary=summary)


# --- Trace CSV ---

def test_trace_file_keeps_every_value(tmp_path, small_trace):
    path = tmp_path / "trace.csv"
    storage.write_trace(small_trace, path)
    loaded = storage.read_trace(path)
    assert loaded.first_interval == small_trace.first_interval
    assert loaded.keys == small_trace.keys
    assert np.array_equal(loaded.data, small_trace.data)


def test_trace_rows_may_come_in_any_order(tmp_path):
    path = _write(tmp_path / "t.csv", "3,pm0/vm0,cpu,2.5\n2,pm0/vm0,cpu,1.5\n")
    table = storage.read_trace(path)
    assert table.first_interval == 2
    assert table.column(("pm0/vm0", "cpu")).tolist() == [1.5, 2.5]


@pytest.mark.parametrize("body", [
    "0,pm0/vm0,cpu,1\n0,pm0/vm0,cpu,2\n",  # repeated row
    "0,pm0/vm0,cpu,1\n2,pm0/vm0,cpu,1\n",  # gap
    "0,pm0/vm0,cpu,1\n1,pm0/vm0,memory,1\n",  # missing cells
    "0,pm0/vm0,cpu,\n",  # empty value
    "",  # no rows
])
def test_malformed_traces(tmp_path, body):
    with pytest.raises(TraceFormatError):
        storage.read_trace(_write(tmp_path / "bad.csv", body))


def test_trace_header_is_checked(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,entity,metric,value\n0,pm0/vm0,cpu,1\n", encoding="utf-8")
    with pytest.raises(TraceFormatError):
        storage.read_trace(path)


def test_sidecar_path(tmp_path):
    assert storage.sidecar_path(tmp_path / "run.csv", "topology.yaml") == tmp_path / "run.topology.yaml"


# --- Topology and scenario files ---

def test_topology_file(tmp_path, small_topology):
    path = tmp_path / "topology.yaml"
    storage.save_topology(small_topology, path)
    assert storage.load_topology(path) == small_topology


def test_invalid_topology_file(tmp_path):
    path = tmp_path / "topology.yaml"
    path.write_text("physical_machines: 3\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        storage.load_topology(path)
    path.write_text("- just a list\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        storage.load_topology(path)
    with pytest.raises(ConfigError):
        storage.load_topology(tmp_path / "missing.yaml")


def test_scenario_file_fills_defaults(tmp_path):
    config = {
        "intervals": 20,
        "topology": small_topology_config().model_dump(mode="json"),
        "workload": {"phases": [{"start": 0, "end": 20, "level": 500.0}]},
        "behaviors": [],
    }
    path = tmp_path / "scenario.yaml"
    path.write_text(yaml.safe_dump(config), encoding="utf-8")
    scenario = storage.load_scenario(path)
    assert scenario.seed == 0
    assert scenario.controls.ranges["thread"].high == 40.0


# --- Reports ---

def test_report_file(tmp_path):
    path = tmp_path / "report.jsonl"
    report = _report()
    storage.write_report(report, path)
    assert storage.read_report(path) == report
    assert len(path.read_text().splitlines()) == 3


def test_report_needs_its_footer(tmp_path):
    path = tmp_path / "report.jsonl"
    storage.write_report(_report(), path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ReportSchemaError):
        storage.read_report(path)


def test_report_format_is_checked(tmp_path):
    path = tmp_path / "report.jsonl"
    report = _report()
    old = report.model_copy(update={"summary": report.summary.model_copy(update={"format": "qosm.report/0"})})
    storage.write_report(old, path)
    with pytest.raises(ReportSchemaError):
        storage.read_report(path)
    path.write_text("not json\n")
    with pytest.raises(ReportSchemaError):
        storage.read_report(path)


# --- Models ---

def test_model_file(tmp_path):
    path = tmp_path / "model.json"
    model = leaf_model(3.5, (hardware("pm0/vm0", "cpu"),))
    storage.write_model(model, path)
    loaded = storage.read_model(path)
    assert loaded.predict([0.0]) == 3.5
    assert loaded.algorithm == Algorithm.rt


def test_bad_model_file(tmp_path):
    path = tmp_path / "model.json"
    path.write_text("{not json")
    with pytest.raises(ModelFormatError):
        storage.read_model(path)
    path.write_text('{"algorithm": "rt"}')
    with pytest.raises(ModelFormatError):
        storage.read_model(path)


# --- Ground truth ---

def test_truth_file(tmp_path, small_run):
    _, truth = small_run
    path = tmp_path / "trace.truth.json"
    storage.write_truth(truth, path)
    dump = storage.read_truth(path)
    assert dump.scenario == truth.scenario
    assert dump.qos[f"{SUBJECT}:response_time"] == truth.qos[(SUBJECT, "response_time")].tolist()
