"""
Tests for the ptpsim command line and logging setup.
"""

import json
import logging
import logging.config
import os

import pytest
import yaml

from src.cli.main import main
from src.core.logging_config import JSONFormatter, setup_logging
from src.services.stats_service import SUMMARY_FILE


@pytest.fixture(autouse=True)
def restore_logging():
    """main() replaces the root handlers; put them back afterwards."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def test_validate_accepts_shipped_scenario(shipped_config, capsys):
    """validate prints the scenario and the planned run count."""
    code = main(["validate", "--config", shipped_config("priority_probe.yaml")])
    out = capsys.readouterr().out
    assert code == 0
    assert "OK: scenario" in out
    assert "sweep plans 1500 runs" in out


def test_validate_reports_every_violation(write_scenario, capsys):
    """validate exits 2 and lists each bad field."""
    path = write_scenario(duration_s=0.5, ptp={"asymm_algo": "lee"})
    code = main(["validate", "--config", path])
    err = capsys.readouterr().err
    assert code == 2
    assert "duration_s" in err
    assert "lee" in err


def test_missing_config_is_a_usage_error(tmp_path, capsys):
    """A config path that does not exist exits 2."""
    code = main(["run", "--config", str(tmp_path / "absent.yaml"), "--out", str(tmp_path)])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_flag_is_a_usage_error(capsys):
    """argparse errors and a missing command both exit 2."""
    assert main(["run", "--config", "x.yaml", "--frobnicate"]) == 2
    assert main([]) == 2


def test_negative_jobs_is_a_usage_error(write_scenario):
    """--jobs below zero is rejected."""
    assert main(["sweep", "--config", write_scenario(), "--jobs", "-1"]) == 2


def test_run_writes_outputs(write_scenario, tmp_path, capsys):
    """run writes the summary and a per-seed vector file."""
    out = tmp_path / "results"
    code = main(["--log-format", "text", "run", "--config", write_scenario(), "--out", str(out), "--seed", "5"])
    assert code == 0
    files = os.listdir(out)
    assert SUMMARY_FILE in files
    assert any(name.startswith("vector_") and name.endswith("seed5.csv") for name in files)
    assert "mean |error|" in capsys.readouterr().out


def test_output_dir_from_environment(write_scenario, tmp_path, monkeypatch):
    """PTPSIM_OUTPUT_DIR is used when --out is absent."""
    out = tmp_path / "env-results"
    monkeypatch.setenv("PTPSIM_OUTPUT_DIR", str(out))
    assert main(["run", "--config", write_scenario()]) == 0
    assert (out / SUMMARY_FILE).exists()


def test_unwritable_output_is_a_usage_error(write_scenario, tmp_path):
    """An output path that is a file exits 2."""
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--config", write_scenario(), "--out", str(blocker)]) == 2


def test_sweep_writes_one_row_per_run(write_scenario, tmp_path, capsys):
    """sweep appends one summary row per run and writes metrics."""
    path = write_scenario(sweep={"points": [[0, 0]], "repetitions": 2})
    metrics = tmp_path / "metrics.prom"
    code = main(
        ["sweep", "--config", path, "--out", str(tmp_path / "out"), "--jobs", "1", "--metrics-file", str(metrics)]
    )
    assert code == 0
    summary = (tmp_path / "out" / SUMMARY_FILE).read_text().splitlines()
    assert len(summary) == 3
    assert "2 of 2 runs written" in capsys.readouterr().out
    assert "ptpsim_runs_total" in metrics.read_text()


def test_json_formatter_emits_structured_records():
    """JSON records carry level, message and logger name."""
    record = logging.LogRecord("src.test", logging.WARNING, __file__, 10, "drop %s", ("x",), None)
    entry = json.loads(JSONFormatter().format(record))
    assert entry["level"] == "WARNING"
    assert entry["message"] == "drop x"
    assert entry["logger"] == "src.test"


def test_setup_logging_installs_one_handler():
    """Repeated setup leaves a single root handler at the requested level."""
    setup_logging("debug", "text")
    root = logging.getLogger()
    assert len(root.handlers) == 1
    assert root.level == logging.DEBUG


def test_shipped_logging_config_loads(shipped_config, tmp_path):
    """configs/logging.yaml loads through dictConfig with the JSON formatter."""
    with open(shipped_config("logging.yaml")) as fh:
        config = yaml.safe_load(fh)
    config["handlers"]["file"]["filename"] = str(tmp_path / "ptpsim.log")
    logging.config.dictConfig(config)
    handler = logging.getLogger("src").handlers[0]
    assert isinstance(handler.formatter, JSONFormatter)
    logging.getLogger("src").handlers.clear()
    logging.getLogger("src.services.network").handlers.clear()
