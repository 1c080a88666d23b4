"""Selective feature suppression: make the MST projection trainable.

Per node pair the model emits two logits, existence and non-existence. The
thresholded prediction keeps pairs whose existence probability wins. The MST
projection then yields a spanning tree; wherever tree and threshold disagree,
the losing logit is overwritten with -lambda so the constrained softmax follows
the tree while staying differentiable. The backward pass treats the projection
diff as piecewise constant and zeroes the gradient of every overwritten slot,
so disagreement pairs are pushed toward the tree's decision, not away from it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Edge
from .mst import ProjectionDiff, mst_project
from .pairs import EdgeLogits, EdgeProbabilities, EdgeTargets, complete_pairs

LOG_FLOOR = -50.0

PLUS, MINUS = 0, 1


@dataclass(frozen=True)
class SfsConfig:
    """Suppression magnitude; exp(-lam) must dwarf ordinary feature scales."""

    lam: float = 10.0

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0.0:
            raise ValueError(f"lam must be a positive finite float, got {self.lam}")


def softmax_pair(logits: EdgeLogits) -> EdgeProbabilities:
    """Row-wise two-way softmax with max subtraction for stability."""
    values = logits.values
    shifted = values - values.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    return EdgeProbabilities(logits.n, probs)


def threshold_edges(probs: EdgeProbabilities) -> frozenset[Edge]:
    """Pairs whose existence probability strictly beats non-existence."""
    pairs = complete_pairs(probs.n)
    values = probs.values
    return frozenset(p for p, row in zip(pairs, values) if row[PLUS] > row[MINUS])


def suppressed_slot(pair: Edge, diff: ProjectionDiff) -> int | None:
    """Which logit slot the suppression overwrites for this pair, if any.

    Added pairs were predicted non-existent, so the non-existence logit is
    suppressed; removed pairs were predicted existent, so existence is.
    """
    if pair in diff.added:
        return MINUS
    if pair in diff.removed:
        return PLUS
    return None


def suppress(logits: EdgeLogits, diff: ProjectionDiff, config: SfsConfig) -> EdgeLogits:
    """Overwrite the losing logit with -lam on every disagreement pair."""
    values = logits.values.copy()
    for k, pair in enumerate(complete_pairs(logits.n)):
        slot = suppressed_slot(pair, diff)
        if slot is not None:
            values[k, slot] = -config.lam
    return EdgeLogits(logits.n, values)


@dataclass(frozen=True)
class SfsForward:
    """Everything the forward pass produced, kept for the backward pass."""

    config: SfsConfig
    logits: EdgeLogits
    unconstrained: EdgeProbabilities
    unconstrained_edges: frozenset[Edge]
    tree: frozenset[Edge]
    diff: ProjectionDiff
    suppressed_logits: EdgeLogits
    constrained: EdgeProbabilities
    constrained_edges: frozenset[Edge]

    @property
    def n(self) -> int:
        return self.logits.n


def sfs_forward(logits: EdgeLogits, config: SfsConfig = SfsConfig()) -> SfsForward:
    """Threshold, project onto the MST, suppress, and re-normalize."""
    unconstrained = softmax_pair(logits)
    unconstrained_edges = threshold_edges(unconstrained)
    tree, diff = mst_project(unconstrained, unconstrained_edges)
    suppressed = suppress(logits, diff, config)
    constrained = softmax_pair(suppressed)
    constrained_edges = threshold_edges(constrained)
    return SfsForward(
        config=config,
        logits=logits,
        unconstrained=unconstrained,
        unconstrained_edges=unconstrained_edges,
        tree=tree,
        diff=diff,
        suppressed_logits=suppressed,
        constrained=constrained,
        constrained_edges=constrained_edges,
    )


def cross_entropy(probs: EdgeProbabilities, targets: EdgeTargets) -> np.ndarray:
    """Per-pair cross entropy, with each log term floored at LOG_FLOOR."""
    if probs.n != targets.n:
        raise ValueError("probability and target pair counts differ")
    log_probs = np.log(np.clip(probs.values, np.exp(LOG_FLOOR), None))
    return -(targets.values * log_probs).sum(axis=1)


@dataclass(frozen=True)
class EdgeLoss:
    """Cross entropy of both heads; total is their plain sum over pairs."""

    unconstrained: np.ndarray
    constrained: np.ndarray
    reduce: str = "sum"

    @property
    def unconstrained_total(self) -> float:
        return float(self.unconstrained.mean() if self.reduce == "mean" else self.unconstrained.sum())

    @property
    def constrained_total(self) -> float:
        return float(self.constrained.mean() if self.reduce == "mean" else self.constrained.sum())

    @property
    def total(self) -> float:
        return self.unconstrained_total + self.constrained_total


def edge_loss(
    constrained: EdgeProbabilities,
    unconstrained: EdgeProbabilities,
    targets: EdgeTargets,
    reduce: str = "sum",
) -> EdgeLoss:
    if reduce not in ("sum", "mean"):
        raise ValueError(f"reduce must be 'sum' or 'mean', got {reduce!r}")
    return EdgeLoss(
        unconstrained=cross_entropy(unconstrained, targets),
        constrained=cross_entropy(constrained, targets),
        reduce=reduce,
    )


def sfs_backward(
    logits: EdgeLogits,
    diff: ProjectionDiff,
    targets: EdgeTargets,
    config: SfsConfig = SfsConfig(),
    reduce: str = "sum",
) -> np.ndarray:
    """Exact gradient of the combined loss with respect to the raw logits.

    The unconstrained head contributes the usual softmax cross entropy
    gradient y - t on every pair. The constrained head contributes y' - t
    where y' is the post-suppression softmax, except that the overwritten
    slot of a disagreement pair is a constant and so receives zero gradient.
    The diff itself is treated as a constant of the forward pass.
    """
    if reduce not in ("sum", "mean"):
        raise ValueError(f"reduce must be 'sum' or 'mean', got {reduce!r}")
    unconstrained = softmax_pair(logits)
    constrained = softmax_pair(suppress(logits, diff, config))
    t = targets.values
    grad = (unconstrained.values - t) + (constrained.values - t)
    for k, pair in enumerate(complete_pairs(logits.n)):
        slot = suppressed_slot(pair, diff)
        if slot is not None:
            grad[k, slot] = unconstrained.values[k, slot] - t[k, slot]
    if reduce == "mean" and logits.n > 1:
        grad /= len(complete_pairs(logits.n))
    return grad


# Disagreement membership / predicted side / target side taxonomy. Pairs the
# projection removed were by definition predicted existent, and added pairs
# predicted non-existent, so two of the twelve combinations are impossible.
CASE_TABLE = {
    ("none", PLUS, PLUS): 1,
    ("none", PLUS, MINUS): 2,
    ("removed", PLUS, PLUS): 3,
    ("removed", PLUS, MINUS): 4,
    ("none", MINUS, PLUS): 5,
    ("none", MINUS, MINUS): 6,
    ("added", MINUS, PLUS): 7,
    ("added", MINUS, MINUS): 8,
}

CASE_DESCRIPTIONS = {
    1: "kept, predicted edge, edge is real",
    2: "kept, predicted edge, edge is spurious",
    3: "removed by projection, edge is real",
    4: "removed by projection, edge is spurious",
    5: "kept, predicted non-edge, edge is real",
    6: "kept, predicted non-edge, edge is spurious",
    7: "added by projection, edge is real",
    8: "added by projection, edge is spurious",
}


def gradient_case(membership: str, predicted: int, target: int) -> int:
    """Map (diff membership, predicted side, target side) to its case number."""
    key = (membership, predicted, target)
    if key not in CASE_TABLE:
        raise ValueError(f"inconsistent combination {key}: {membership} pairs cannot be predicted that way")
    return CASE_TABLE[key]


def case_for_pair(fwd: SfsForward, pair: Edge, targets: EdgeTargets) -> int:
    k = complete_pairs(fwd.n).index(pair)
    if pair in fwd.diff.added:
        membership = "added"
    elif pair in fwd.diff.removed:
        membership = "removed"
    else:
        membership = "none"
    predicted = PLUS if pair in fwd.unconstrained_edges else MINUS
    target = PLUS if targets.values[k, PLUS] == 1.0 else MINUS
    return gradient_case(membership, predicted, target)


def pair_diagnostics(fwd: SfsForward, targets: EdgeTargets) -> list[dict]:
    """Per-pair case assignment and gradient split, for inspection tooling."""
    t = targets.values
    records = []
    for k, pair in enumerate(complete_pairs(fwd.n)):
        grad_u = fwd.unconstrained.values[k] - t[k]
        grad_c = fwd.constrained.values[k] - t[k]
        slot = suppressed_slot(pair, fwd.diff)
        if slot is not None:
            grad_c = grad_c.copy()
            grad_c[slot] = 0.0
        case = case_for_pair(fwd, pair, targets)
        norm_u = float(np.linalg.norm(grad_u))
        norm_c = float(np.linalg.norm(grad_c))
        records.append(
            {
                "pair": list(pair),
                "case": case,
                "description": CASE_DESCRIPTIONS[case],
                "unconstrained": [float(v) for v in fwd.unconstrained.values[k]],
                "constrained": [float(v) for v in fwd.constrained.values[k]],
                "grad_unconstrained": [float(v) for v in grad_u],
                "grad_constrained": [float(v) for v in grad_c],
                "constrained_dominates": norm_c > norm_u,
            }
        )
    return records
