"""
Tests for run configuration and pipeline phase logging.
"""
import inspect
import logging

from models.run_config import DEFAULT_SEED, RunConfig
from sentinel.pipeline import DetectionPipeline, log_phase


def test_run_config_defaults(monkeypatch):
    """Test run configuration with no environment overrides."""
    monkeypatch.delenv("SENTINEL_SEED", raising=False)
    monkeypatch.delenv("SENTINEL_LOG_LEVEL", raising=False)

    config = RunConfig.from_env()
    assert config.seed == DEFAULT_SEED == 42
    assert config.verbosity == "INFO"


def test_run_config_from_environment(monkeypatch):
    """Test seed and log level picked up from the environment."""
    monkeypatch.setenv("SENTINEL_SEED", "7")
    monkeypatch.setenv("SENTINEL_LOG_LEVEL", "debug")

    config = RunConfig.from_env()
    assert config.seed == 7
    assert config.verbosity == "DEBUG"


def test_run_config_explicit_values_win(monkeypatch):
    """Test explicit arguments override the environment."""
    monkeypatch.setenv("SENTINEL_SEED", "7")

    config = RunConfig.from_env(seed=3, verbosity="warning", subcommand="dga")
    assert config.seed == 3
    assert config.verbosity == "WARNING"
    assert config.subcommand == "dga"


def test_pipeline_uses_environment_seed(monkeypatch):
    """Test the pipeline falls back to RunConfig.from_env()."""
    monkeypatch.setenv("SENTINEL_SEED", "11")
    assert DetectionPipeline().config.seed == 11


def test_log_phase_reports_fields(caplog):
    """Test one structured line per phase."""
    with caplog.at_level(logging.INFO, logger="sentinel.pipeline"):
        with log_phase("unit.test", stage="x") as extra:
            extra["count"] = 3
    messages = [r.getMessage() for r in caplog.records if r.name == "sentinel.pipeline"]
    assert len(messages) == 1
    assert messages[0].startswith("phase=unit.test elapsed_ms=")
    assert messages[0].endswith(" stage=x count=3")


def test_pipeline_methods_document_arguments_and_results():
    """Test every stage method carries Args and Returns sections."""
    methods = [
        getattr(DetectionPipeline, name) for name in vars(DetectionPipeline)
        if not name.startswith("_") and callable(getattr(DetectionPipeline, name))
    ]
    assert len(methods) == 10
    for method in methods:
        doc = inspect.getdoc(method) or ""
        assert "Args:" in doc and "Returns:" in doc, method.__name__
