import orjson
import pandas as pd
import pytest
import yaml
from typer.testing import CliRunner

from qosm import storage
from qosm.main import app

from .factories import SUBJECT, small_scenario

runner = CliRunner()


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim") / "trace.csv"
    result = runner.invoke(app, ["simulate", "--out", str(out), "--intervals", "30", "--seed", "1"])
    assert result.exit_code == 0, result.output
    return out


def _run_args(trace, *extra):
    return [
        "run",
        "--trace", str(trace),
        "--topology", str(storage.sidecar_path(trace, "topology.yaml")),
        "--service", SUBJECT,
        "--learners", "rt",
        "--budget", "30",
        "--eval-window", "10",
        *extra,
    ]


def test_simulate_writes_the_trace_and_its_sidecars(simulated):
    assert storage.read_trace(simulated).n_intervals == 30
    topology = storage.load_topology(storage.sidecar_path(simulated, "topology.yaml"))
    assert SUBJECT in topology.services
    truth = storage.read_truth(storage.sidecar_path(simulated, "truth.json"))
    assert truth.scenario.seed == 1


def test_simulate_from_a_scenario_file(tmp_path):
    scenario = tmp_path / "scenario.yaml"
    scenario.write_text(yaml.safe_dump(small_scenario(intervals=25).model_dump(mode="json")), encoding="utf-8")
    out = tmp_path / "small.csv"
    result = runner.invoke(app, ["simulate", "--scenario", str(scenario), "--out", str(out), "--intervals", "15"])
    assert result.exit_code == 0, result.output
    assert storage.read_trace(out).n_intervals == 15


def test_same_seed_writes_identical_files(tmp_path):
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name / "trace.csv"
        out.parent.mkdir()
        result = runner.invoke(app, ["simulate", "--out", str(out), "--intervals", "20", "--seed", "7"])
        assert result.exit_code == 0, result.output
        outputs.append([out, storage.sidecar_path(out, "topology.yaml"), storage.sidecar_path(out, "truth.json")])
    for first, second in zip(*outputs):
        assert first.read_bytes() == second.read_bytes()


def test_repeated_runs_write_identical_reports(simulated, tmp_path):
    reports = []
    for name in ("first", "second"):
        out = tmp_path / f"{name}.jsonl"
        result = runner.invoke(app, _run_args(simulated, "--out", str(out), "--learners", "rt,armax", "--seed", "3"))
        assert result.exit_code == 0, result.output
        reports.append(out.read_bytes())
    assert reports[0] == reports[1]


def test_run_writes_a_report(simulated, tmp_path):
    out = tmp_path / "report.jsonl"
    result = runner.invoke(app, _run_args(simulated, "--out", str(out)))
    assert result.exit_code == 0, result.output
    report = storage.read_report(out)
    assert len(report.records) == 30
    assert report.summary.service == SUBJECT
    assert report.summary.eval_window == 10


def test_run_streams_to_stdout(simulated):
    result = runner.invoke(app, _run_args(simulated))
    assert result.exit_code == 0, result.output
    lines = result.stdout.strip().splitlines()
    assert len(lines) == 31
    assert orjson.loads(lines[-1])["kind"] == "summary"


def test_evaluate_compares_reports(simulated, tmp_path):
    reports = []
    for selection, timing in (("hybrid", []), ("fixed", ["--record-timing"])):
        out = tmp_path / f"{selection}.jsonl"
        result = runner.invoke(app, _run_args(simulated, "--selection", selection, "--out", str(out), *timing))
        assert result.exit_code == 0, result.output
        reports.append(str(out))
    table = tmp_path / "comparison.csv"
    result = runner.invoke(app, ["evaluate", *reports, "--out", str(table)])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(table)
    assert frame["selection"].tolist() == ["hybrid", "fixed"]
    assert frame.loc[1, "mean_inputs"] == 2.0
    assert pd.isna(frame.loc[0, "mean_selection_time"])
    assert frame.loc[1, "mean_selection_time"] >= 0.0
    assert frame.loc[1, "mean_training_time"] >= 0.0


def test_evaluate_rejects_a_tampered_summary(simulated, tmp_path):
    out = tmp_path / "report.jsonl"
    assert runner.invoke(app, _run_args(simulated, "--out", str(out))).exit_code == 0
    report = storage.read_report(out)
    tampered = report.model_copy(update={"summary": report.summary.model_copy(update={"smape": 0.0})})
    storage.write_report(tampered, out)
    result = runner.invoke(app, ["evaluate", str(out)])
    assert result.exit_code == 2
    assert "error[config]" in result.output


def test_inspect_dumped_model(simulated, tmp_path):
    models = tmp_path / "models"
    result = runner.invoke(app, _run_args(simulated, "--out", str(tmp_path / "r.jsonl"), "--dump-models", str(models)))
    assert result.exit_code == 0, result.output
    dump = models / "rt.json"
    width = storage.read_model(dump).layout.width
    vector = ",".join(["0"] * width)
    result = runner.invoke(app, ["inspect-model", str(dump), "--input", vector])
    assert result.exit_code == 0, result.output
    assert "prediction:" in result.output


def test_unknown_service_exits_with_the_topology_code(simulated):
    args = _run_args(simulated)
    args[args.index("--service") + 1] = "pm0/vm0/svc99"
    result = runner.invoke(app, args)
    assert result.exit_code == 3
    assert "error[topology]" in result.output


def test_unknown_learner_is_a_config_error(simulated):
    args = _run_args(simulated)
    args[args.index("--learners") + 1] = "rt,svm"
    result = runner.invoke(app, args)
    assert result.exit_code == 2
    assert "error[config]" in result.output


def test_missing_trace_is_a_data_error(tmp_path, simulated):
    args = _run_args(simulated)
    args[args.index("--trace") + 1] = str(tmp_path / "nowhere.csv")
    result = runner.invoke(app, args)
    assert result.exit_code == 4
    assert "error[data]" in result.output


def test_bad_log_level(simulated):
    result = runner.invoke(app, ["--log-level", "chatty", "simulate", "--out", str(simulated)])
    assert result.exit_code == 2
