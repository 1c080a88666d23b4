"""Command-level runs: generate, train, evaluate, compare, ablate, project, plot.

Each run writes its artifacts plus a resolved-config snapshot into its output
directory and returns a JSON-ready summary. The comparison harness produces
the three-row method table (unconstrained / test_time_constraint / sfs) with
shared seeds; the ablation harness sweeps the suppression magnitude.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .config import write_snapshot
from .dataset import generate_dataset, load_manifest, read_pgm
from .graph import Graph, dumps_graph, is_tree
from .lsystem import PROFILES, load_rules
from .metrics import (
    MetricReport,
    SMD_POINTS,
    TOPO_ANGLE_TOL_DEG,
    TOPO_RADIUS,
    evaluate,
    render_table,
)
from .mst import mst_project
from .pairs import EdgeProbabilities, pair_count
from .plots import render_overlay
from .predictor import (
    MODE_ALIASES,
    TrainConfig,
    TrainResult,
    evaluation_sets,
    infer,
    load_checkpoint,
    prepare_samples,
    save_checkpoint,
    train,
    write_history_csv,
)
from .sfs import threshold_edges

COMPARE_MODES = ("unconstrained", "test_time_constraint", "sfs")
ABLATION_LAMBDAS = (2.0, 5.0, 10.0, 100.0)


def _dump_json(path, data) -> str:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
    return str(path)


def run_generate(
    out_dir, profile: str = "standard", counts=None, seed: int = 0, rules_path=None, force: bool = False
) -> dict:
    """Generate a dataset directory; refuses a non-empty target without force."""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}, choose from {sorted(PROFILES)}")
    counts = dict(counts or {"train": 10, "val": 0, "test": 0})
    base = Path(out_dir)
    if base.exists() and any(base.iterdir()) and not force:
        raise FileExistsError(f"{base} exists and is not empty; pass force to overwrite")
    rules = load_rules(rules_path)
    manifest = generate_dataset(base, profile, counts, seed, rules)
    snapshot = write_snapshot(
        base / "resolved_config.txt",
        {
            "command": "gen",
            "out": str(base),
            "profile": profile,
            "seed": seed,
            "rules": rules_path or "",
            "force": force,
            **{f"count_{k}": v for k, v in manifest.counts.items()},
        },
    )
    return {
        "out_dir": str(base),
        "manifest": str(base / "manifest.json"),
        "profile": profile,
        "seed": seed,
        "counts": manifest.counts,
        "samples": len(manifest.samples),
        "artifacts": [str(base / "manifest.json"), snapshot],
    }


def _train_snapshot(config: TrainConfig, dataset_dir, out_dir) -> dict:
    return {
        "command": "train",
        "data": str(dataset_dir),
        "out": str(out_dir),
        "mode": config.mode,
        "seed": config.seed,
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "patience": "" if config.patience is None else config.patience,
        "lambda": config.lam,
    }


def run_train(dataset_dir, out_dir, config: TrainConfig) -> dict:
    """Train one model; writes checkpoint, history CSV, and config snapshot."""
    base = Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    result = train(dataset_dir, config)
    checkpoint = base / f"checkpoint_{config.mode}.json"
    history = base / f"history_{config.mode}.csv"
    save_checkpoint(checkpoint, result)
    write_history_csv(history, result.history)
    snapshot = write_snapshot(base / "resolved_config.txt", _train_snapshot(config, dataset_dir, base))
    return {
        "checkpoint": str(checkpoint),
        "history": str(history),
        "best_epoch": result.best_epoch,
        "best_f1": None if math.isnan(result.best_f1) else result.best_f1,
        "epochs_run": len(result.history),
        "artifacts": [str(checkpoint), str(history), snapshot],
    }


def run_eval(
    dataset_dir,
    checkpoint=None,
    split: str = "test",
    mode: str | None = None,
    self_check: bool = False,
    out_dir=None,
    smd_points: int = SMD_POINTS,
    topo_radius: float = TOPO_RADIUS,
    topo_angle_tol: float = TOPO_ANGLE_TOL_DEG,
) -> dict:
    """Evaluate a checkpoint (or ground truth against itself) on one split."""
    manifest = load_manifest(dataset_dir)
    records = manifest.split(split)
    if not records:
        raise ValueError(f"split {split!r} is empty in {dataset_dir}")
    if self_check:
        gts = [Graph.load(Path(dataset_dir) / r.graph) for r in records]
        preds = gts
        label = "self-check"
    else:
        if checkpoint is None:
            raise ValueError("checkpoint is required unless self_check is set")
        params, meta = load_checkpoint(checkpoint)
        label = mode or meta["mode"]
        label = MODE_ALIASES.get(label, label)
        samples = prepare_samples(dataset_dir, manifest, split)
        preds, gts = evaluation_sets(params, samples, constrained=label != "unconstrained")
    report = evaluate(preds, gts, smd_points, topo_radius, topo_angle_tol)
    table = render_table([(label, report)])
    artifacts = []
    if out_dir is not None:
        base = Path(out_dir)
        base.mkdir(parents=True, exist_ok=True)
        artifacts.append(_dump_json(base / "report.json", {"mode": label, "split": split, **report.to_dict()}))
        (base / "report.txt").write_text(table + "\n")
        artifacts.append(str(base / "report.txt"))
        artifacts.append(
            write_snapshot(
                base / "resolved_config.txt",
                {
                    "command": "eval",
                    "data": str(dataset_dir),
                    "checkpoint": "" if checkpoint is None else str(checkpoint),
                    "split": split,
                    "mode": label,
                    "self_check": self_check,
                    "smd_points": smd_points,
                    "topo_radius": topo_radius,
                    "topo_angle_tol": topo_angle_tol,
                },
            )
        )
    return {"mode": label, "split": split, "report": report.to_dict(), "table": table, "artifacts": artifacts}


def run_comparison(
    dataset_dir,
    out_dir,
    seed: int = 0,
    epochs: int = 60,
    patience: int | None = 30,
    lam: float = 10.0,
    batch_size: int = 1,
    learning_rate: float = 1e-3,
) -> dict:
    """Train and evaluate the three method rows with shared seeds.

    The test_time_constraint row reuses the unconstrained checkpoint, since
    both modes train identically; only inference differs.
    """
    base = Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(dataset_dir)
    test = prepare_samples(dataset_dir, manifest, "test")
    if not test:
        raise ValueError(f"test split is empty in {dataset_dir}")

    common = dict(seed=seed, epochs=epochs, patience=patience, lam=lam,
                  batch_size=batch_size, learning_rate=learning_rate)
    results = {
        "unconstrained": train(dataset_dir, TrainConfig(mode="unconstrained", **common)),
        "sfs": train(dataset_dir, TrainConfig(mode="sfs", **common)),
    }
    results["test_time_constraint"] = TrainResult(
        params=results["unconstrained"].params,
        config=TrainConfig(mode="test_time_constraint", **common),
        history=results["unconstrained"].history,
        best_epoch=results["unconstrained"].best_epoch,
        best_f1=results["unconstrained"].best_f1,
    )

    artifacts = []
    reports = {}
    for mode in COMPARE_MODES:
        result = results[mode]
        checkpoint = base / f"checkpoint_{mode}.json"
        save_checkpoint(checkpoint, result)
        artifacts.append(str(checkpoint))
        if mode != "test_time_constraint":
            history = base / f"history_{mode}.csv"
            write_history_csv(history, result.history)
            artifacts.append(str(history))
        preds, gts = evaluation_sets(result.params, test, constrained=mode != "unconstrained")
        reports[mode] = evaluate(preds, gts)

    table = render_table([(mode, reports[mode]) for mode in COMPARE_MODES])
    artifacts.append(
        _dump_json(
            base / "metrics.json",
            {"seed": seed, "epochs": epochs, "rows": {m: r.to_dict() for m, r in reports.items()}},
        )
    )
    (base / "table.txt").write_text(table + "\n")
    artifacts.append(str(base / "table.txt"))
    artifacts.append(
        write_snapshot(
            base / "resolved_config.txt",
            {
                "command": "compare",
                "data": str(dataset_dir),
                "out": str(base),
                "seed": seed,
                "epochs": epochs,
                "patience": "" if patience is None else patience,
                "lambda": lam,
                "batch_size": batch_size,
                "learning_rate": learning_rate,
            },
        )
    )
    return {
        "table": table,
        "reports": {m: r.to_dict() for m, r in reports.items()},
        "artifacts": artifacts,
    }


def run_ablation(
    dataset_dir,
    out_dir,
    seed: int = 0,
    lambdas=ABLATION_LAMBDAS,
    epochs: int = 60,
    patience: int | None = 30,
    batch_size: int = 1,
    learning_rate: float = 1e-3,
) -> dict:
    """Sweep the suppression magnitude and report one sfs row per value."""
    base = Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(dataset_dir)
    test = prepare_samples(dataset_dir, manifest, "test")
    if not test:
        raise ValueError(f"test split is empty in {dataset_dir}")

    artifacts = []
    reports: dict[str, MetricReport] = {}
    for lam in lambdas:
        label = f"lambda={lam:g}"
        config = TrainConfig(
            mode="sfs", seed=seed, epochs=epochs, patience=patience, lam=lam,
            batch_size=batch_size, learning_rate=learning_rate,
        )
        result = train(dataset_dir, config)
        checkpoint = base / f"checkpoint_lambda_{lam:g}.json"
        save_checkpoint(checkpoint, result)
        artifacts.append(str(checkpoint))
        history = base / f"history_lambda_{lam:g}.csv"
        write_history_csv(history, result.history)
        artifacts.append(str(history))
        preds, gts = evaluation_sets(result.params, test, constrained=True)
        reports[label] = evaluate(preds, gts)

    table = render_table(sorted(reports.items(), key=lambda kv: float(kv[0].split("=")[1])))
    artifacts.append(
        _dump_json(
            base / "ablation.json",
            {"seed": seed, "rows": {label: r.to_dict() for label, r in reports.items()}},
        )
    )
    (base / "table.txt").write_text(table + "\n")
    artifacts.append(str(base / "table.txt"))
    artifacts.append(
        write_snapshot(
            base / "resolved_config.txt",
            {
                "command": "ablate",
                "data": str(dataset_dir),
                "out": str(base),
                "seed": seed,
                "lambdas": [f"{v:g}" for v in lambdas],
                "epochs": epochs,
                "patience": "" if patience is None else patience,
                "batch_size": batch_size,
                "learning_rate": learning_rate,
            },
        )
    )
    return {
        "table": table,
        "reports": {label: r.to_dict() for label, r in reports.items()},
        "artifacts": artifacts,
    }


def _circle_positions(n: int, canvas) -> list[tuple[float, float]]:
    width, height = canvas
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    radius = 0.4 * min(width, height)
    return [
        (cx + radius * math.cos(2 * math.pi * k / n), cy + radius * math.sin(2 * math.pi * k / n))
        for k in range(n)
    ]


def _probabilities_from_input(data: dict):
    """Build (probabilities, positions, canvas) from either input schema.

    Graph JSON uses hard 0/1 probabilities from its edge set; a probability
    file carries per-pair existence values directly, with optional node
    positions (a circle layout fills in when they are absent).
    """
    if "nodes" in data and "edges" in data and "canvas" in data:
        graph = Graph.from_json_dict(data)
        if graph.node_ids() != list(range(graph.node_count)):
            raise ValueError("projection input needs contiguous node ids from 0")
        n = graph.node_count
        values = [[1.0, 0.0] if (i, j) in graph.edges else [0.0, 1.0] for i, j in _pairs(n)]
        positions = [graph.position(i) for i in range(n)]
        return EdgeProbabilities(n, values), positions, graph.canvas
    if "n" in data and "existence" in data:
        n = int(data["n"])
        existence = [float(v) for v in data["existence"]]
        if len(existence) != pair_count(n):
            raise ValueError(
                f"expected {pair_count(n)} existence values for n={n}, got {len(existence)}"
            )
        if any(not 0.0 <= v <= 1.0 for v in existence):
            raise ValueError("existence probabilities must lie in [0, 1]")
        canvas = tuple(data.get("canvas", (256, 256)))
        if "nodes" in data:
            nodes = sorted(data["nodes"], key=lambda row: row[0])
            if [row[0] for row in nodes] != list(range(n)):
                raise ValueError("projection input needs contiguous node ids from 0")
            positions = [(float(x), float(y)) for _, x, y in nodes]
        else:
            positions = _circle_positions(n, canvas) if n > 0 else []
        values = [[v, 1.0 - v] for v in existence]
        return EdgeProbabilities(n, values), positions, canvas
    raise ValueError(
        "unrecognized projection input: expected graph JSON (canvas/nodes/edges) "
        "or probabilities ({'n', 'existence', ...})"
    )


def _pairs(n: int):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def run_project(in_path, out_path) -> dict:
    """Project an edge prediction file onto its MST and write the tree."""
    in_path = Path(in_path)
    with open(in_path) as fh:
        data = json.load(fh)
    probs, positions, canvas = _probabilities_from_input(data)
    tree, diff = mst_project(probs, threshold_edges(probs))
    graph = Graph.build(positions, sorted(tree), canvas)
    assert is_tree(graph)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(dumps_graph(graph) + "\n")
    snapshot = write_snapshot(
        Path(str(out_path) + ".config.txt"),
        {"command": "project", "in": str(in_path), "out": str(out_path)},
    )
    return {
        "out_path": str(out_path),
        "nodes": graph.node_count,
        "tree_edges": len(tree),
        "added": len(diff.added),
        "removed": len(diff.removed),
        "artifacts": [str(out_path), snapshot],
    }


def run_plot(
    dataset_dir,
    checkpoint,
    out_dir,
    split: str = "test",
    ids=None,
    limit: int = 8,
) -> dict:
    """Write per-sample overlay SVGs; missing samples are skipped and counted."""
    base = Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(dataset_dir)
    records = {r.id: r for r in manifest.split(split)}
    if ids is None:
        chosen = sorted(records)[:limit]
    else:
        chosen = list(ids)
    params, meta = load_checkpoint(checkpoint)

    written, skipped = [], []
    for sample_id in chosen:
        record = records.get(sample_id)
        if record is None:
            skipped.append({"id": sample_id, "reason": f"no sample {sample_id} in split {split!r}"})
            continue
        graph_path = Path(dataset_dir) / record.graph
        image_path = Path(dataset_dir) / record.image
        if not graph_path.exists() or not image_path.exists():
            skipped.append({"id": sample_id, "reason": f"missing file for sample {sample_id}"})
            continue
        gt = Graph.load(graph_path)
        image = read_pgm(image_path)
        positions = [gt.position(i) for i in sorted(gt.node_ids())]
        if gt.node_count >= 2:
            pred = infer(params, image, positions, gt.canvas, meta["mode"])
        else:
            pred = Graph.build(positions, [], gt.canvas)
        svg = render_overlay(image, gt, pred)
        path = base / f"overlay_{sample_id:05d}.svg"
        path.write_text(svg)
        written.append(str(path))

    artifacts = list(written)
    artifacts.append(
        write_snapshot(
            base / "resolved_config.txt",
            {
                "command": "plot",
                "data": str(dataset_dir),
                "checkpoint": str(checkpoint),
                "out": str(base),
                "split": split,
                "ids": "" if ids is None else [int(v) for v in ids],
                "limit": limit,
            },
        )
    )
    return {"written": written, "skipped": skipped, "artifacts": artifacts}
