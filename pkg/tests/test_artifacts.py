"""
Tests for model artifact persistence.
"""
import csv
import json

import numpy as np
import pytest

from models.artifact import ModelType
from models.classifier import FeatureMode, LinearConfig, LstmHyper
from sentinel import artifacts, baseline, lstm
from sentinel.errors import DataError

PROBES = ["paypal.com", "xkqzjw.net", "a", "login-secure-bank.info"]


@pytest.fixture
def lstm_artifact(make_samples):
    train = make_samples([("google.com", 0), ("qxzkwj.net", 1), ("amazon.com", 0), ("zzkqpx.org", 1)])
    artifact, _ = lstm.train_lstm(
        train, [], LstmHyper(embed_dim=3, hidden_dim=2, max_len=12, batch_size=2, max_epochs=2),
    )
    return artifact


@pytest.fixture
def linear_artifact(make_samples):
    train = make_samples([("google.com", 0), ("qxzkwj.net", 1), ("amazon.com", 0), ("zzkqpx.org", 1)])
    model, _ = baseline.train_linear(train, [], LinearConfig(epochs=3, batch_size=2, lr=0.5))
    return artifacts.linear_to_artifact(model, {"task": "dga"})


def test_lstm_round_trip_is_byte_identical(lstm_artifact, tmp_path):
    path = tmp_path / "model.json"
    artifacts.save_artifact(lstm_artifact, path)
    loaded = artifacts.load_artifact(path)
    artifacts.save_artifact(loaded, tmp_path / "again.json")
    assert path.read_bytes() == (tmp_path / "again.json").read_bytes()
    assert lstm.score(loaded, PROBES) == lstm.score(lstm_artifact, PROBES)
    assert loaded.metadata["epochs_run"] == 2


def test_lstm_gates_stored_separately(lstm_artifact):
    doc = json.loads(artifacts.artifact_to_json(lstm_artifact))
    assert doc["model_type"] == "lstm"
    assert {"W_i", "W_f", "W_g", "W_o", "U_o", "b_f", "embedding", "v", "c"} <= set(doc["weights"])
    assert "W" not in doc["weights"]
    assert doc["weights"]["W_f"]["shape"] == [3, 2]


def test_linear_round_trip(linear_artifact, tmp_path):
    path = tmp_path / "linear.json"
    artifacts.save_artifact(linear_artifact, path)
    loaded = artifacts.load_artifact(path)
    assert artifacts.artifact_to_json(loaded) == path.read_text()
    assert loaded.model_type == ModelType.NGRAM_LR
    assert loaded.metadata["task"] == "dga"
    assert artifacts.score_artifact(loaded, PROBES) == artifacts.score_artifact(linear_artifact, PROBES)
    model = artifacts.linear_from_artifact(loaded)
    assert model.vocab.mode == FeatureMode.CHAR_NGRAM
    assert model.weights.dtype == np.float32


def test_score_artifact_dispatches_on_type(lstm_artifact, linear_artifact):
    assert artifacts.score_artifact(lstm_artifact, PROBES) == lstm.score(lstm_artifact, PROBES)
    model = artifacts.linear_from_artifact(linear_artifact)
    assert artifacts.score_artifact(linear_artifact, PROBES) == baseline.score_linear_batch(model, PROBES)


@pytest.mark.parametrize("mutate", [
    lambda doc: doc.update(format_version=99),
    lambda doc: doc.pop("weights"),
    lambda doc: doc["weights"]["v"].update(data="!!!not-base64"),
    lambda doc: doc["weights"]["v"].update(shape=[7]),
    lambda doc: doc.update(model_type="svm"),
    lambda doc: doc.update(charset=["a", "a"]),
])
def test_corrupt_lstm_artifact_rejected(lstm_artifact, mutate):
    doc = json.loads(artifacts.artifact_to_json(lstm_artifact))
    mutate(doc)
    with pytest.raises(DataError):
        artifact = artifacts.artifact_from_json(json.dumps(doc))
        lstm.score(artifact, PROBES)


def test_unreadable_files_rejected(tmp_path):
    with pytest.raises(DataError):
        artifacts.load_artifact(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(DataError):
        artifacts.load_artifact(bad)


def test_wrong_model_kind_rejected(lstm_artifact, linear_artifact):
    with pytest.raises(DataError):
        artifacts.linear_from_artifact(lstm_artifact)
    with pytest.raises(DataError):
        lstm.weights_from_artifact(linear_artifact)


def test_history_csv(make_samples, tmp_path):
    train = make_samples([("aa.com", 0), ("zz.com", 1)])
    _, history = baseline.train_linear(train, [], LinearConfig(epochs=3))
    path = tmp_path / "history.csv"
    artifacts.write_history_csv(history, path)
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert [int(r["epoch"]) for r in rows] == [1, 2, 3]
    assert float(rows[0]["train_loss"]) == pytest.approx(history.epochs[0].train_loss)
