"""Trainable edge predictor over image node pairs.

Given an image and its node positions, every node pair gets a small feature
vector (offsets, distance, ink coverage along the connecting segment) and a
three-layer perceptron scores it with existence / non-existence logits. Three
training modes share this backbone: plain per-pair cross entropy
(unconstrained), the same training with the MST projection applied only at
inference (test_time_constraint), and the suppression layer in the loop
(sfs). Training is per-sample Adam with optional early stopping on validation
keypoint F1, and is bit-reproducible from the seed.
"""

from __future__ import annotations

import copy
import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Manifest, load_manifest, load_sample
from .graph import Graph, is_tree
from .metrics import topo
from .mst import mst_project
from .pairs import EdgeLogits, EdgeTargets, pair_count
from .sfs import SfsConfig, cross_entropy, edge_loss, sfs_backward, sfs_forward, softmax_pair, threshold_edges

MODES = ("unconstrained", "test_time_constraint", "sfs")
MODE_ALIASES = {"ttc": "test_time_constraint"}

INPUT_DIM = 8
HIDDEN_DIMS = (32, 32)
OUTPUT_DIM = 2
COVERAGE_POINTS = 16

CHECKPOINT_VERSION = 1

PARAM_SHAPES = {
    "w1": (INPUT_DIM, HIDDEN_DIMS[0]),
    "b1": (HIDDEN_DIMS[0],),
    "w2": (HIDDEN_DIMS[0], HIDDEN_DIMS[1]),
    "b2": (HIDDEN_DIMS[1],),
    "w3": (HIDDEN_DIMS[1], OUTPUT_DIM),
    "b3": (OUTPUT_DIM,),
}


def _bilinear(image01: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinearly interpolated image values at float coordinates."""
    height, width = image01.shape
    xs = np.clip(xs, 0.0, width - 1.0)
    ys = np.clip(ys, 0.0, height - 1.0)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    fx, fy = xs - x0, ys - y0
    return (
        image01[y0, x0] * (1 - fx) * (1 - fy)
        + image01[y0, x1] * fx * (1 - fy)
        + image01[y1, x0] * (1 - fx) * fy
        + image01[y1, x1] * fx * fy
    )


def pair_features(image: np.ndarray, node_i, node_j, canvas) -> np.ndarray:
    """Feature vector for one node pair.

    Entries: dx/W, dy/H, distance/diagonal, mean and min ink coverage at
    interior points of the connecting segment, |cos| of the angle to the
    horizontal, a zero stub, and a constant bias. All lie in [-1, 1] for
    in-canvas nodes.
    """
    width, height = canvas
    xi, yi = node_i
    xj, yj = node_j
    if (xi, yi) == (xj, yj):
        raise ValueError("pair features need two distinct nodes")
    for x, y in ((xi, yi), (xj, yj)):
        if not (0 <= x < width and 0 <= y < height):
            raise ValueError(f"node ({x}, {y}) outside canvas {canvas}")
    img = np.asarray(image, dtype=float) / 255.0
    ts = (np.arange(COVERAGE_POINTS) + 1.0) / (COVERAGE_POINTS + 1.0)
    dx, dy = xj - xi, yj - yi
    dist = math.hypot(dx, dy)
    cov = _bilinear(img, xi + ts * dx, yi + ts * dy)
    return np.array(
        [
            dx / width,
            dy / height,
            dist / math.hypot(width, height),
            cov.mean(),
            cov.min(),
            abs(dx) / dist,
            0.0,
            1.0,
        ]
    )


def all_pair_features(image: np.ndarray, positions, canvas) -> np.ndarray:
    """Per-pair feature rows in lexicographic pair order."""
    width, height = canvas
    diag = math.hypot(width, height)
    img = np.asarray(image, dtype=float) / 255.0
    n = len(positions)
    ts = (np.arange(COVERAGE_POINTS) + 1.0) / (COVERAGE_POINTS + 1.0)
    feats = np.zeros((pair_count(n), INPUT_DIM))
    k = 0
    for i in range(n):
        xi, yi = positions[i]
        for j in range(i + 1, n):
            xj, yj = positions[j]
            dx, dy = xj - xi, yj - yi
            dist = math.hypot(dx, dy)
            cov = _bilinear(img, xi + ts * dx, yi + ts * dy)
            feats[k] = (
                dx / width,
                dy / height,
                dist / diag,
                cov.mean(),
                cov.min(),
                abs(dx) / dist if dist > 0.0 else 0.0,
                0.0,
                1.0,
            )
            k += 1
    return feats


def init_params(rng: np.random.Generator) -> dict:
    """He-initialized weights, zero biases."""
    params = {}
    dims = (INPUT_DIM, *HIDDEN_DIMS, OUTPUT_DIM)
    for layer, (fan_in, fan_out) in enumerate(zip(dims, dims[1:]), start=1):
        params[f"w{layer}"] = rng.normal(0.0, math.sqrt(2.0 / fan_in), (fan_in, fan_out))
        params[f"b{layer}"] = np.zeros(fan_out)
    return params


def mlp_forward(params: dict, x: np.ndarray):
    for name in PARAM_SHAPES:
        if not np.all(np.isfinite(params[name])):
            raise ValueError(f"parameter {name!r} contains non-finite values")
    z1 = x @ params["w1"] + params["b1"]
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ params["w2"] + params["b2"]
    a2 = np.maximum(z2, 0.0)
    z3 = a2 @ params["w3"] + params["b3"]
    return z3, (x, z1, a1, z2, a2)


def mlp_backward(params: dict, cache, grad_out: np.ndarray) -> dict:
    x, z1, a1, z2, a2 = cache
    grads = {"w3": a2.T @ grad_out, "b3": grad_out.sum(axis=0)}
    da2 = grad_out @ params["w3"].T
    dz2 = da2 * (z2 > 0.0)
    grads["w2"] = a1.T @ dz2
    grads["b2"] = dz2.sum(axis=0)
    da1 = dz2 @ params["w2"].T
    dz1 = da1 * (z1 > 0.0)
    grads["w1"] = x.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return grads


class Adam:
    def __init__(self, params: dict, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        for k in sorted(params):
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            m_hat = self.m[k] / (1 - self.beta1**self.t)
            v_hat = self.v[k] / (1 - self.beta2**self.t)
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    mode: str = "unconstrained"
    seed: int = 0
    epochs: int = 60
    learning_rate: float = 1e-3
    batch_size: int = 1
    patience: int | None = 30
    lam: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "mode", MODE_ALIASES.get(self.mode, self.mode))
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.patience is not None and self.patience < 1:
            raise ValueError(f"patience must be >= 1 or None, got {self.patience}")


@dataclass(frozen=True)
class PreparedSample:
    sample_id: int
    graph: Graph
    features: np.ndarray
    targets: EdgeTargets


def prepare_samples(dataset_dir, manifest: Manifest, split: str) -> list[PreparedSample]:
    """Load a split and precompute features and targets once per sample."""
    out = []
    for record in manifest.split(split):
        graph, image = load_sample(dataset_dir, record)
        n = graph.node_count
        if n < 2:
            continue
        if graph.node_ids() != list(range(n)):
            raise ValueError(f"sample {record.id}: node ids must be contiguous from 0")
        positions = [graph.position(i) for i in range(n)]
        out.append(
            PreparedSample(
                sample_id=record.id,
                graph=graph,
                features=all_pair_features(image, positions, graph.canvas),
                targets=EdgeTargets.from_edges(n, graph.edges),
            )
        )
    return out


def sample_loss_and_grads(params: dict, sample: PreparedSample, train_mode: str, lam: float):
    """Loss and parameter gradients for one sample under the given mode.

    test_time_constraint trains exactly like unconstrained; its constraint
    only applies at inference.
    """
    n = sample.targets.n
    raw, cache = mlp_forward(params, sample.features)
    logits = EdgeLogits(n, raw)
    if train_mode == "sfs":
        config = SfsConfig(lam)
        fwd = sfs_forward(logits, config)
        loss = edge_loss(fwd.constrained, fwd.unconstrained, sample.targets).total
        grad_logits = sfs_backward(logits, fwd.diff, sample.targets, config)
    else:
        probs = softmax_pair(logits)
        loss = float(cross_entropy(probs, sample.targets).sum())
        grad_logits = probs.values - sample.targets.values
    return loss, mlp_backward(params, cache, grad_logits)


def predict_edges(params: dict, features: np.ndarray, n: int, constrained: bool) -> frozenset:
    """Predicted edge set: thresholded, or projected onto the MST."""
    if n < 2:
        return frozenset()
    raw, _ = mlp_forward(params, features)
    probs = softmax_pair(EdgeLogits(n, raw))
    unconstrained = threshold_edges(probs)
    if not constrained:
        return unconstrained
    tree, _ = mst_project(probs, unconstrained)
    return tree


def predict_graph(params: dict, sample: PreparedSample, constrained: bool) -> Graph:
    """Graph with the sample's nodes and the predicted edges."""
    g = sample.graph
    positions = [g.position(i) for i in range(g.node_count)]
    edges = predict_edges(params, sample.features, g.node_count, constrained)
    return Graph.build(positions, sorted(edges), g.canvas)


def infer(params: dict, image: np.ndarray, nodes, canvas, mode: str) -> Graph:
    """Predict a graph over the given node positions from scratch.

    Constrained modes (sfs, test_time_constraint) always return a tree;
    unconstrained returns the raw thresholded edges.
    """
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    positions = [tuple(map(float, p)) for p in nodes]
    features = all_pair_features(image, positions, canvas)
    edges = predict_edges(params, features, len(positions), mode != "unconstrained")
    return Graph.build(positions, sorted(edges), canvas)


def validation_scores(params: dict, samples, constrained: bool) -> tuple[float, float]:
    """Aggregate keypoint F1 and tree rate over a validation split."""
    precisions, recalls, trees = [], [], 0
    for sample in samples:
        pred = predict_graph(params, sample, constrained)
        result = topo(pred, sample.graph)
        precisions.append(result.precision)
        recalls.append(result.recall)
        trees += is_tree(pred)
    p, r = float(np.mean(precisions)), float(np.mean(recalls))
    f1 = 2.0 * p * r / (p + r) if p + r > 0 else 0.0
    return f1, 100.0 * trees / len(samples)


@dataclass
class TrainResult:
    params: dict
    config: TrainConfig
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_f1: float = float("nan")


def train(dataset_dir, config: TrainConfig) -> TrainResult:
    """Train on a dataset directory's train split, validating on val.

    With patience set, training stops after that many epochs without a
    validation F1 improvement and the best epoch's parameters are returned;
    with patience None it runs all epochs and returns the final parameters.
    Zero epochs returns the initialization untouched.
    """
    manifest = load_manifest(dataset_dir)
    train_samples = prepare_samples(dataset_dir, manifest, "train")
    val_samples = prepare_samples(dataset_dir, manifest, "val")
    if not train_samples:
        raise ValueError("train split is empty")

    rng = np.random.default_rng(config.seed)
    params = init_params(rng)
    optimizer = Adam(params, lr=config.learning_rate)
    train_mode = "sfs" if config.mode == "sfs" else "unconstrained"
    constrained_eval = config.mode in ("test_time_constraint", "sfs")

    best_params = copy.deepcopy(params)
    best_f1, best_epoch, stale = -math.inf, 0, 0
    history = []
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(len(train_samples))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            summed = None
            for idx in batch:
                loss, grads = sample_loss_and_grads(
                    params, train_samples[idx], train_mode, config.lam
                )
                total += loss
                if summed is None:
                    summed = grads
                else:
                    for k in summed:
                        summed[k] += grads[k]
            optimizer.step(params, summed)
        row = {
            "epoch": epoch,
            "train_loss": total / len(train_samples),
            "val_f1": float("nan"),
            "val_tree_rate": float("nan"),
            "seconds": 0.0,
        }
        if val_samples:
            f1, rate = validation_scores(params, val_samples, constrained_eval)
            row["val_f1"], row["val_tree_rate"] = f1, rate
            if f1 > best_f1:
                best_f1, best_epoch, stale = f1, epoch, 0
                best_params = copy.deepcopy(params)
            else:
                stale += 1
        row["seconds"] = time.perf_counter() - started
        history.append(row)
        if val_samples and config.patience is not None and stale >= config.patience:
            break

    if config.patience is None or not val_samples or not history:
        best_params = params
        best_epoch = history[-1]["epoch"] if history else 0
        best_f1 = history[-1]["val_f1"] if history else float("nan")
    return TrainResult(
        params=best_params, config=config, history=history, best_epoch=best_epoch, best_f1=best_f1
    )


HISTORY_FIELDS = ("epoch", "train_loss", "val_f1", "val_tree_rate", "seconds")


def write_history_csv(path, history) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=HISTORY_FIELDS)
        writer.writeheader()
        writer.writerows(history)


def save_checkpoint(path, result: TrainResult) -> None:
    data = {
        "format_version": CHECKPOINT_VERSION,
        "architecture": {"input": INPUT_DIM, "hidden": list(HIDDEN_DIMS), "output": OUTPUT_DIM},
        "seed": result.config.seed,
        "mode": result.config.mode,
        "lambda": result.config.lam,
        "weights": {k: v.tolist() for k, v in result.params.items()},
    }
    with open(path, "w") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)


def load_checkpoint(path) -> tuple[dict, dict]:
    """Returns (params, metadata); validates architecture and shapes."""
    path = Path(path)
    with open(path) as fh:
        data = json.load(fh)
    if data.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {data.get('format_version')}")
    arch = data.get("architecture", {})
    expected = {"input": INPUT_DIM, "hidden": list(HIDDEN_DIMS), "output": OUTPUT_DIM}
    if arch != expected:
        raise ValueError(f"{path}: architecture {arch} does not match {expected}")
    params = {}
    for name, shape in PARAM_SHAPES.items():
        if name not in data.get("weights", {}):
            raise ValueError(f"{path}: missing weight {name!r}")
        arr = np.asarray(data["weights"][name], dtype=float)
        if arr.shape != shape:
            raise ValueError(f"{path}: weight {name!r} has shape {arr.shape}, expected {shape}")
        params[name] = arr
    meta = {"seed": data["seed"], "mode": data["mode"], "lambda": data["lambda"]}
    return params, meta


def evaluation_sets(params: dict, samples, constrained: bool):
    """(predicted list, ground truth list) for the metrics module."""
    preds = [predict_graph(params, s, constrained) for s in samples]
    return preds, [s.graph for s in samples]
