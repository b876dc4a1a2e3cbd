"""End-to-end command line flows on a small synthetic workspace."""

from __future__ import annotations

import json

import numpy as np
import pytest

from formbench.cli import main
from formbench.dataset import EmbeddingSet, load_embeddings, save_embeddings

CONFIG = """
[run]
master_seed = 3
reduced_dims = [2]

[umap]
n_neighbors = 5
n_epochs = 50

[probe]
epochs = 6
folds = 3

[[dataset]]
tag = "toy"
labels = "labels.csv"

[[dataset.cell]]
model = "ToyNet"
variant = "NoSeg"
embeddings = "emb.femb"
"""


@pytest.fixture
def workspace(tmp_path):
    rng = np.random.default_rng(1)
    n_per, k, dim = 10, 3, 8
    ids = tuple(f"p{i:02d}" for i in range(n_per * k))
    labels = np.repeat(np.arange(k), n_per)
    lines = ["id,label_index,label_name"]
    lines += [f"{s},{l},c{l}" for s, l in zip(ids, labels)]
    (tmp_path / "labels.csv").write_text("\n".join(lines) + "\n")
    data = np.concatenate(
        [np.eye(k, dim)[c] * 15.0 + rng.normal(size=(n_per, dim)) for c in range(k)]
    )
    save_embeddings(EmbeddingSet(ids, data.astype(np.float32)), tmp_path / "emb.femb")
    (tmp_path / "run.toml").write_text(CONFIG)
    return tmp_path


def test_reduce_then_eval(workspace, capsys):
    code = main(
        [
            "reduce",
            "--embeddings",
            str(workspace / "emb.femb"),
            "--dims",
            "2,3",
            "--n-neighbors",
            "5",
            "--n-epochs",
            "50",
            "--seed",
            "2",
            "--out",
            str(workspace / "red"),
        ]
    )
    assert code == 0
    d2 = workspace / "red" / "emb.d2.femb"
    d3 = workspace / "red" / "emb.d3.femb"
    assert d2.is_file() and d3.is_file()
    assert load_embeddings(d2).dim == 2
    assert load_embeddings(d3).dim == 3

    code = main(
        [
            "eval",
            "--reduced",
            str(d2),
            str(d3),
            "--labels",
            str(workspace / "labels.csv"),
            "--knn-k",
            "3",
            "--trials",
            "2",
            "--seed",
            "0",
            "--out",
            str(workspace / "eval.json"),
        ]
    )
    assert code == 0
    payload = json.loads((workspace / "eval.json").read_text())
    assert payload["kmeans"]["k"] == 3  # auto: class count
    assert len(payload["kmeans"]["per_run"]) == 4  # 2 dims x 2 trials
    assert [d["dim"] for d in payload["knn"]["per_dim"]] == [2, 3]
    assert payload["knn"]["accuracy"] >= 0.9


def test_probe_verb(workspace):
    code = main(
        [
            "probe",
            "--embeddings",
            str(workspace / "emb.femb"),
            "--labels",
            str(workspace / "labels.csv"),
            "--folds",
            "3",
            "--epochs",
            "6",
            "--seed",
            "1",
            "--out",
            str(workspace / "probe.json"),
        ]
    )
    assert code == 0
    payload = json.loads((workspace / "probe.json").read_text())
    assert len(payload["fold_accuracies"]) == 3
    assert 0.0 <= payload["mean_accuracy"] <= 1.0


def test_run_and_report_verbs(workspace):
    code = main(
        [
            "run",
            "--config",
            str(workspace / "run.toml"),
            "--out",
            str(workspace / "out"),
        ]
    )
    assert code == 0
    results = json.loads((workspace / "out" / "results.json").read_text())
    assert results["master_seed"] == 3
    assert results["datasets"]["toy"]["cells"]["ToyNet/NoSeg"]["status"] == "ok"

    code = main(
        [
            "report",
            "--results",
            str(workspace / "out" / "results.json"),
            "--out",
            str(workspace / "rep"),
        ]
    )
    assert code == 0
    text = (workspace / "rep" / "report.md").read_text()
    assert "### K-means ARI" in text
    assert (workspace / "rep" / "report.csv").read_text().startswith(
        "dataset,model,metric"
    )


def test_run_seed_override_changes_results(workspace):
    main(["run", "--config", str(workspace / "run.toml"), "--out", str(workspace / "a")])
    main(
        [
            "run",
            "--config",
            str(workspace / "run.toml"),
            "--seed",
            "1234",
            "--out",
            str(workspace / "b"),
        ]
    )
    a = json.loads((workspace / "a" / "results.json").read_text())
    b = json.loads((workspace / "b" / "results.json").read_text())
    assert a["master_seed"] == 3
    assert b["master_seed"] == 1234
    assert a["config_hash"] != b["config_hash"]


def test_cli_reports_dataset_errors_cleanly(workspace, capsys):
    (workspace / "labels.csv").write_text("id,label_index,label_name\nonly,0,a\n")
    code = main(
        [
            "probe",
            "--embeddings",
            str(workspace / "emb.femb"),
            "--labels",
            str(workspace / "labels.csv"),
            "--out",
            str(workspace / "x.json"),
        ]
    )
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_cli_requires_a_command(capsys):
    with pytest.raises(SystemExit):
        main([])
