import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from conftest import path_graph, triangle_graph
from treespan.graph import Graph, dumps_graph, is_tree
from treespan.harness import (
    run_ablation,
    run_comparison,
    run_eval,
    run_generate,
    run_plot,
    run_project,
    run_train,
)
from treespan.predictor import TrainConfig


@pytest.fixture(scope="module")
def trained(tiny_dataset, tmp_path_factory):
    """A quick sfs checkpoint for eval and plot tests."""
    out = tmp_path_factory.mktemp("train") / "run"
    summary = run_train(tiny_dataset, out, TrainConfig(mode="sfs", seed=0, epochs=1))
    return summary


def test_run_generate_writes_dataset(tmp_path):
    out = tmp_path / "data"
    summary = run_generate(out, profile="mini", counts={"train": 2, "test": 1}, seed=3)
    assert summary["samples"] == 3
    assert summary["counts"] == {"train": 2, "val": 0, "test": 1}
    assert Path(summary["manifest"]).exists()
    assert (out / "resolved_config.txt").exists()
    assert (out / "images" / "00000.pgm").exists()


def test_run_generate_refuses_nonempty_without_force(tmp_path):
    out = tmp_path / "data"
    run_generate(out, profile="mini", counts={"train": 1}, seed=0)
    with pytest.raises(FileExistsError):
        run_generate(out, profile="mini", counts={"train": 1}, seed=0)
    summary = run_generate(out, profile="mini", counts={"train": 1}, seed=1, force=True)
    assert summary["seed"] == 1


def test_run_generate_rejects_unknown_profile(tmp_path):
    with pytest.raises(ValueError):
        run_generate(tmp_path / "x", profile="bogus")


def test_run_train_artifacts(trained):
    assert Path(trained["checkpoint"]).name == "checkpoint_sfs.json"
    assert Path(trained["history"]).name == "history_sfs.csv"
    for artifact in trained["artifacts"]:
        assert Path(artifact).exists()
    assert trained["epochs_run"] == 1
    assert trained["best_epoch"] == 1


def test_run_eval_self_check(tiny_dataset, tmp_path):
    out = tmp_path / "eval"
    summary = run_eval(tiny_dataset, split="test", self_check=True, out_dir=out)
    assert summary["mode"] == "self-check"
    report = summary["report"]
    assert report["smd"] <= 1e-12
    assert report["topo_f1"] == 1.0
    assert report["tree_rate"] == 100.0
    assert "self-check" in summary["table"]
    assert (out / "report.json").exists()
    assert (out / "report.txt").exists()
    assert (out / "resolved_config.txt").exists()
    stored = json.loads((out / "report.json").read_text())
    assert stored["split"] == "test" and stored["topo_f1"] == 1.0


def test_run_eval_checkpoint_defaults_to_stored_mode(tiny_dataset, trained):
    summary = run_eval(tiny_dataset, checkpoint=trained["checkpoint"], split="val")
    assert summary["mode"] == "sfs"
    assert summary["report"]["tree_rate"] == 100.0
    assert summary["artifacts"] == []


def test_run_eval_normalizes_mode_alias(tiny_dataset, trained):
    summary = run_eval(tiny_dataset, checkpoint=trained["checkpoint"], split="val", mode="ttc")
    assert summary["mode"] == "test_time_constraint"


def test_run_eval_requires_checkpoint_or_self_check(tiny_dataset):
    with pytest.raises(ValueError, match="checkpoint"):
        run_eval(tiny_dataset, split="test")


def test_run_eval_rejects_empty_split(tmp_path):
    out = tmp_path / "data"
    run_generate(out, profile="mini", counts={"train": 1}, seed=0)
    with pytest.raises(ValueError, match="empty"):
        run_eval(out, split="test", self_check=True)


def test_run_comparison_three_rows(tiny_dataset, tmp_path):
    out = tmp_path / "compare"
    summary = run_comparison(tiny_dataset, out, seed=0, epochs=1, patience=None)
    assert set(summary["reports"]) == {"unconstrained", "test_time_constraint", "sfs"}
    lines = summary["table"].splitlines()
    assert len(lines) == 5  # header, rule, three method rows
    assert lines[2].startswith("unconstrained")
    assert lines[3].startswith("test_time_constraint")
    assert lines[4].startswith("sfs")
    # the constraint applied at inference always yields trees
    assert summary["reports"]["test_time_constraint"]["tree_rate"] == 100.0
    assert summary["reports"]["sfs"]["tree_rate"] == 100.0

    unconstrained = json.loads((out / "checkpoint_unconstrained.json").read_text())
    ttc = json.loads((out / "checkpoint_test_time_constraint.json").read_text())
    assert ttc["weights"] == unconstrained["weights"]
    assert (out / "history_unconstrained.csv").exists()
    assert (out / "history_sfs.csv").exists()
    assert not (out / "history_test_time_constraint.csv").exists()
    assert (out / "metrics.json").exists()
    assert (out / "table.txt").exists()


def test_run_ablation_rows(tiny_dataset, tmp_path):
    out = tmp_path / "ablate"
    summary = run_ablation(tiny_dataset, out, seed=0, lambdas=(10.0, 2.0), epochs=1, patience=None)
    assert set(summary["reports"]) == {"lambda=10", "lambda=2"}
    lines = summary["table"].splitlines()
    assert lines[2].startswith("lambda=2")  # rows sorted by lambda value
    assert lines[3].startswith("lambda=10")
    assert (out / "checkpoint_lambda_2.json").exists()
    assert (out / "history_lambda_10.csv").exists()
    assert (out / "ablation.json").exists()


def test_run_project_tree_passes_through(tmp_path):
    g = path_graph(4)
    src = tmp_path / "in.json"
    src.write_text(dumps_graph(g))
    summary = run_project(src, tmp_path / "out.json")
    assert summary["added"] == 0 and summary["removed"] == 0
    assert summary["tree_edges"] == 3
    result = Graph.load(tmp_path / "out.json")
    assert result.edges == g.edges
    assert Path(str(tmp_path / "out.json") + ".config.txt").exists()


def test_run_project_breaks_cycle(tmp_path):
    src = tmp_path / "tri.json"
    src.write_text(dumps_graph(triangle_graph()))
    summary = run_project(src, tmp_path / "tri.tree.json")
    assert summary["removed"] == 1 and summary["added"] == 0
    result = Graph.load(tmp_path / "tri.tree.json")
    assert is_tree(result) and len(result.edges) == 2


def test_run_project_probability_schema(tmp_path):
    src = tmp_path / "probs.json"
    src.write_text(
        json.dumps(
            {
                "n": 3,
                "existence": [0.9, 0.8, 0.1],
                "canvas": [64, 64],
                "nodes": [[0, 10.0, 10.0], [1, 20.0, 10.0], [2, 15.0, 30.0]],
            }
        )
    )
    summary = run_project(src, tmp_path / "probs.tree.json")
    assert summary["nodes"] == 3
    result = Graph.load(tmp_path / "probs.tree.json")
    assert result.edges == frozenset({(0, 1), (0, 2)})
    assert result.position(2) == (15.0, 30.0)


def test_run_project_circle_fallback(tmp_path):
    src = tmp_path / "bare.json"
    src.write_text(json.dumps({"n": 4, "existence": [0.9, 0.1, 0.1, 0.9, 0.1, 0.9]}))
    summary = run_project(src, tmp_path / "bare.tree.json")
    result = Graph.load(tmp_path / "bare.tree.json")
    assert result.canvas == (256, 256)
    assert result.node_count == 4
    assert is_tree(result)
    for i in range(4):
        x, y = result.position(i)
        assert 0 <= x < 256 and 0 <= y < 256


def test_run_project_input_validation(tmp_path):
    cases = [
        {"n": 3, "existence": [0.9, 0.8]},  # wrong pair count
        {"n": 2, "existence": [1.5]},  # out of range
        {"what": "ever"},  # unrecognized schema
        {
            "canvas": [16, 16],
            "nodes": [[0, 1.0, 1.0], [2, 5.0, 5.0]],
            "edges": [[0, 2]],
        },  # non-contiguous ids
    ]
    for k, data in enumerate(cases):
        src = tmp_path / f"bad{k}.json"
        src.write_text(json.dumps(data))
        with pytest.raises(ValueError):
            run_project(src, tmp_path / f"bad{k}.out.json")


def test_run_plot_writes_svgs(tiny_dataset, trained, tmp_path):
    out = tmp_path / "plots"
    summary = run_plot(tiny_dataset, trained["checkpoint"], out, split="test", limit=2)
    assert len(summary["written"]) == 2
    assert summary["skipped"] == []
    for path in summary["written"]:
        root = ET.fromstring(Path(path).read_text())
        assert root.tag.endswith("svg")
    assert (out / "resolved_config.txt").exists()


def test_run_plot_skips_unknown_ids(tiny_dataset, trained, tmp_path):
    out = tmp_path / "plots"
    summary = run_plot(tiny_dataset, trained["checkpoint"], out, split="test", ids=[16, 999])
    assert len(summary["written"]) == 1
    assert summary["written"][0].endswith("overlay_00016.svg")
    assert len(summary["skipped"]) == 1
    assert summary["skipped"][0]["id"] == 999
