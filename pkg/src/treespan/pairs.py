"""Pair-indexed containers over the complete graph on n nodes.

All per-pair quantities (edge head outputs [f+, f-], probabilities [y+, y-],
one-hot targets [t+, t-]) are stored as (pair_count, 2) arrays whose rows
follow the lexicographic pair order (0,1), (0,2), ..., (n-2,n-1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def complete_pairs(n: int) -> list[tuple[int, int]]:
    """All unordered pairs (i, j), i < j, in lexicographic order."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def pair_index_map(n: int) -> dict[tuple[int, int], int]:
    return {pair: k for k, pair in enumerate(complete_pairs(n))}


@dataclass(frozen=True)
class PairValues:
    """Base container: one 2-vector per pair of the complete graph on n nodes."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        expected = (pair_count(self.n), 2)
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != expected:
            raise ValueError(f"expected shape {expected} for n={self.n}, got {arr.shape}")
        object.__setattr__(self, "values", arr)

    def pairs(self) -> list[tuple[int, int]]:
        return complete_pairs(self.n)


class EdgeLogits(PairValues):
    """Raw edge head outputs [f+, f-] per pair. Must be finite."""

    def __post_init__(self):
        super().__post_init__()
        if not np.all(np.isfinite(self.values)):
            raise ValueError("edge logits must be finite")


class EdgeProbabilities(PairValues):
    """Per-pair [y+, y-] with y+ + y- = 1 and both in [0, 1]."""

    def __post_init__(self):
        super().__post_init__()
        v = self.values
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ValueError("probabilities outside [0, 1]")
        if np.any(np.abs(v.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("probability rows must sum to 1")

    @property
    def existence(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def non_existence(self) -> np.ndarray:
        return self.values[:, 1]


class EdgeTargets(PairValues):
    """One-hot ground truth [t+, t-] per pair."""

    def __post_init__(self):
        super().__post_init__()
        v = self.values
        if not np.all((v == 0.0) | (v == 1.0)) or np.any(v.sum(axis=1) != 1.0):
            raise ValueError("targets must be one-hot per pair")

    @classmethod
    def from_edges(cls, n: int, edges) -> "EdgeTargets":
        """Targets for the complete graph on nodes 0..n-1 given the true edge set."""
        edge_set = {(i, j) if i < j else (j, i) for i, j in edges}
        t = np.zeros((pair_count(n), 2))
        for k, pair in enumerate(complete_pairs(n)):
            t[k, 0 if pair in edge_set else 1] = 1.0
        return cls(n, t)
