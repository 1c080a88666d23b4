"""Evaluation metrics: spatial matching distance, keypoint topology, tree rate.

SMD samples a fixed budget of points along each graph's edges, normalizes by
the canvas diagonal, and reports the mean squared distance under an optimal
point assignment. TOPO matches predicted against ground-truth keypoints
(degree != 2 nodes) within a radius, requiring the same degree class and
compatible incident edge directions. Tree rate is the percentage of predicted
graphs that are single connected trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph import Graph, is_tree, keypoints

SMD_POINTS = 100
SMD_SENTINEL = 1.0
TOPO_RADIUS = 13.0
TOPO_ANGLE_TOL_DEG = 30.0

_BIG = 1e9


def _allocate(weights, m: int) -> np.ndarray:
    """Largest-remainder allocation of m points proportional to weights."""
    w = np.asarray(weights, dtype=float)
    if w.sum() <= 0.0:
        w = np.ones_like(w)
    quota = m * w / w.sum()
    base = np.floor(quota).astype(int)
    short = m - int(base.sum())
    if short > 0:
        order = np.argsort(-(quota - base), kind="stable")
        base[order[:short]] += 1
    return base


def sample_points(graph: Graph, m: int = SMD_POINTS) -> np.ndarray:
    """m points spread along edges by length, normalized by the canvas diagonal.

    An edge given n points receives them at fractions (k + 0.5) / n, a
    deterministic even stratification of the uniform spread. Graphs without
    edges fall back to their node positions.
    """
    if graph.node_count == 0:
        raise ValueError("cannot sample points from an empty graph")
    diag = math.hypot(*graph.canvas)
    points = []
    if graph.edges:
        edges = sorted(graph.edges)
        counts = _allocate([graph.edge_length(e) for e in edges], m)
        for (i, j), n in zip(edges, counts):
            if n == 0:
                continue
            a = np.asarray(graph.position(i))
            b = np.asarray(graph.position(j))
            for k in range(n):
                t = (k + 0.5) / n
                points.append(a + t * (b - a))
    else:
        ids = sorted(graph.node_ids())
        counts = _allocate([1.0] * len(ids), m)
        for i, n in zip(ids, counts):
            points.extend([np.asarray(graph.position(i))] * n)
    return np.asarray(points) / diag


def smd(pred: Graph, gt: Graph, m: int = SMD_POINTS) -> float:
    """Mean squared distance between optimally assigned sample point sets.

    Either graph being empty yields the SMD_SENTINEL value, since there is
    nothing to assign.
    """
    if pred.canvas != gt.canvas:
        raise ValueError(f"canvas mismatch: {pred.canvas} vs {gt.canvas}")
    if pred.node_count == 0 or gt.node_count == 0:
        return SMD_SENTINEL
    a = sample_points(pred, m)
    b = sample_points(gt, m)
    cost = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


def _circular_diff(a: float, b: float) -> float:
    d = abs(a - b) % (2.0 * math.pi)
    return min(d, 2.0 * math.pi - d)


def _directions(graph: Graph, node: int) -> list[float]:
    """Angles of edges leaving the node, from its adjacent node positions."""
    x, y = graph.position(node)
    out = []
    for v in graph.adjacency()[node]:
        vx, vy = graph.position(v)
        out.append(math.atan2(vy - y, vx - x))
    return out


def _directions_compatible(dirs_a, dirs_b, tol_rad: float) -> bool:
    """Can the smaller direction set inject into the larger within tolerance?"""
    small, large = sorted((list(dirs_a), list(dirs_b)), key=len)
    if not small:
        return True
    ok = np.array(
        [[_circular_diff(u, v) <= tol_rad for v in large] for u in small], dtype=float
    )
    rows, cols = linear_sum_assignment(1.0 - ok)
    return len(rows) == len(small) and float((1.0 - ok)[rows, cols].sum()) == 0.0


@dataclass(frozen=True)
class TopoResult:
    precision: float
    recall: float
    f1: float
    matches: int
    pred_keypoints: int
    gt_keypoints: int


def topo(
    pred: Graph,
    gt: Graph,
    radius: float = TOPO_RADIUS,
    angle_tol_deg: float = TOPO_ANGLE_TOL_DEG,
) -> TopoResult:
    """Keypoint detection quality under a distance and direction gate.

    A predicted keypoint can match a ground-truth one when they lie within
    the radius, share a degree class (junction means degree >= 3), and their
    incident directions are compatible. Among compatible pairs, matching
    maximizes cardinality first and total distance second.
    """
    if pred.canvas != gt.canvas:
        raise ValueError(f"canvas mismatch: {pred.canvas} vs {gt.canvas}")
    tol = math.radians(angle_tol_deg)
    pred_kp = sorted(keypoints(pred))
    gt_kp = sorted(keypoints(gt))
    if not pred_kp and not gt_kp:
        return TopoResult(1.0, 1.0, 1.0, 0, 0, 0)

    matches = 0
    if pred_kp and gt_kp:
        pred_deg = pred.degrees()
        gt_deg = gt.degrees()
        cost = np.full((len(pred_kp), len(gt_kp)), _BIG)
        for r, p in enumerate(pred_kp):
            px, py = pred.position(p)
            for c, g in enumerate(gt_kp):
                gx, gy = gt.position(g)
                d = math.hypot(px - gx, py - gy)
                if d > radius:
                    continue
                if (pred_deg[p] >= 3) != (gt_deg[g] >= 3):
                    continue
                if not _directions_compatible(_directions(pred, p), _directions(gt, g), tol):
                    continue
                cost[r, c] = d
        rows, cols = linear_sum_assignment(cost)
        matches = int((cost[rows, cols] < _BIG).sum())

    precision = matches / len(pred_kp) if pred_kp else 0.0
    recall = matches / len(gt_kp) if gt_kp else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return TopoResult(precision, recall, f1, matches, len(pred_kp), len(gt_kp))


def tree_rate(graphs) -> float:
    """Percentage of graphs that are single connected trees."""
    graphs = list(graphs)
    if not graphs:
        raise ValueError("tree_rate needs at least one graph")
    return 100.0 * sum(is_tree(g) for g in graphs) / len(graphs)


@dataclass(frozen=True)
class MetricReport:
    """Dataset-level metrics with the per-sample breakdown they average.

    topo_f1 is the harmonic mean of the mean precision and mean recall.
    """

    smd: float
    topo_precision: float
    topo_recall: float
    topo_f1: float
    tree_rate: float
    count: int
    degenerate: int
    breakdown: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "smd": self.smd,
            "topo_precision": self.topo_precision,
            "topo_recall": self.topo_recall,
            "topo_f1": self.topo_f1,
            "tree_rate": self.tree_rate,
            "count": self.count,
            "degenerate": self.degenerate,
            "breakdown": list(self.breakdown),
        }


def evaluate(
    pred_set,
    gt_set,
    m: int = SMD_POINTS,
    radius: float = TOPO_RADIUS,
    angle_tol_deg: float = TOPO_ANGLE_TOL_DEG,
) -> MetricReport:
    """Aggregate metrics over aligned predicted and ground-truth graph lists."""
    preds, gts = list(pred_set), list(gt_set)
    if len(preds) != len(gts):
        raise ValueError(f"got {len(preds)} predictions for {len(gts)} ground truths")
    if not preds:
        raise ValueError("evaluate needs at least one graph pair")
    breakdown = []
    for index, (pred, gt) in enumerate(zip(preds, gts)):
        degenerate = pred.node_count == 0 or gt.node_count == 0
        result = topo(pred, gt, radius, angle_tol_deg)
        breakdown.append(
            {
                "index": index,
                "smd": smd(pred, gt, m),
                "precision": result.precision,
                "recall": result.recall,
                "f1": result.f1,
                "tree": bool(is_tree(pred)),
                "degenerate": degenerate,
            }
        )
    precision = float(np.mean([b["precision"] for b in breakdown]))
    recall = float(np.mean([b["recall"] for b in breakdown]))
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return MetricReport(
        smd=float(np.mean([b["smd"] for b in breakdown])),
        topo_precision=precision,
        topo_recall=recall,
        topo_f1=f1,
        tree_rate=tree_rate(preds),
        count=len(preds),
        degenerate=sum(b["degenerate"] for b in breakdown),
        breakdown=tuple(breakdown),
    )


def render_table(rows) -> str:
    """Fixed-width text table of (label, MetricReport) rows."""
    header = f"{'method':<16} {'SMD':>10} {'Prec.':>7} {'Rec.':>7} {'F1':>7} {'Tree rate [%]':>14}"
    lines = [header, "-" * len(header)]
    for label, report in rows:
        lines.append(
            f"{label:<16} {report.smd:>10.6f} {report.topo_precision:>7.3f} "
            f"{report.topo_recall:>7.3f} {report.topo_f1:>7.3f} {report.tree_rate:>14.1f}"
        )
    return "\n".join(lines)
