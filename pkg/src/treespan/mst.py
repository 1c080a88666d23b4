"""Minimum spanning tree over the complete node graph, plus the tree projection.

Edge costs come from predicted edge non-existence probabilities, so the MST
spans the pairs the model considers most likely to be real edges. Ties are
broken by the stable sort key (cost, i, j), making every run bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graph import Edge, UnionFind
from .pairs import EdgeProbabilities, complete_pairs

BRUTE_FORCE_MAX_NODES = 8


@dataclass(frozen=True)
class CostMatrix:
    """Symmetric nonnegative pairwise costs; the diagonal is ignored."""

    n: int
    cost: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.cost, dtype=float)
        if arr.shape != (self.n, self.n):
            raise ValueError(f"expected ({self.n}, {self.n}) cost matrix, got {arr.shape}")
        off_diag = ~np.eye(self.n, dtype=bool)
        if self.n > 1 and not np.all(np.isfinite(arr[off_diag])):
            raise ValueError("off-diagonal costs must be finite")
        if self.n > 1 and np.any(arr[off_diag] < 0.0):
            raise ValueError("costs must be nonnegative")
        if not np.array_equal(arr[off_diag], arr.T[off_diag]):
            raise ValueError("cost matrix must be symmetric")
        object.__setattr__(self, "cost", arr)

    @classmethod
    def from_pair_costs(cls, n: int, pair_costs) -> "CostMatrix":
        """Build from per-pair costs listed in lexicographic pair order."""
        arr = np.zeros((n, n))
        for (i, j), c in zip(complete_pairs(n), pair_costs):
            arr[i, j] = arr[j, i] = c
        return cls(n, arr)

    def sorted_edges(self) -> list[tuple[float, int, int]]:
        return sorted((self.cost[i, j], i, j) for i, j in complete_pairs(self.n))


@dataclass(frozen=True)
class ProjectionDiff:
    """Edges the projection added to / removed from the thresholded prediction."""

    added: frozenset[Edge]
    removed: frozenset[Edge]

    def __post_init__(self):
        overlap = self.added & self.removed
        if overlap:
            raise ValueError(f"edges cannot be both added and removed: {sorted(overlap)}")

    @classmethod
    def empty(cls) -> "ProjectionDiff":
        return cls(frozenset(), frozenset())


def kruskal_mst(costs: CostMatrix) -> frozenset[Edge]:
    """Minimum spanning tree of the complete graph under the given costs."""
    n = costs.n
    if n <= 1:
        return frozenset()
    uf = UnionFind(range(n))
    tree = []
    for _, i, j in costs.sorted_edges():
        if uf.union(i, j):
            tree.append((i, j))
            if len(tree) == n - 1:
                break
    return frozenset(tree)


def brute_force_mst(costs: CostMatrix) -> frozenset[Edge]:
    """Exhaustive MST oracle: enumerate all spanning trees of the complete graph.

    Among minimum-total-cost trees, returns the one with the lexicographically
    smallest sorted (cost, i, j) key sequence, which is exactly the tree the
    greedy Kruskal order selects.
    """
    n = costs.n
    if n > BRUTE_FORCE_MAX_NODES:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_NODES}, got {n}")
    if n <= 1:
        return frozenset()
    all_edges = complete_pairs(n)
    cost = costs.cost
    best_key = None
    best_tree = None
    for candidate in combinations(all_edges, n - 1):
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        spanning = True
        for i, j in candidate:
            ri, rj = find(i), find(j)
            if ri == rj:
                spanning = False
                break
            parent[rj] = ri
        if not spanning:
            continue
        keys = sorted((cost[i, j], i, j) for i, j in candidate)
        total = sum(k[0] for k in keys)
        key = (total, keys)
        if best_key is None or key < best_key:
            best_key = key
            best_tree = candidate
    return frozenset(best_tree)


def tree_total_cost(costs: CostMatrix, tree) -> float:
    """Total cost of an edge set, summed in sorted (cost, i, j) order."""
    return sum(k[0] for k in sorted((costs.cost[i, j], i, j) for i, j in tree))


def mst_project(
    probs: EdgeProbabilities, unconstrained_edges
) -> tuple[frozenset[Edge], ProjectionDiff]:
    """Project a thresholded edge prediction onto the MST of the complete graph.

    Costs are the per-pair non-existence probabilities, so high-confidence
    edges are cheap. Returns the spanning tree and the diff relative to the
    unconstrained edge set (edges added by / removed by the projection).
    """
    costs = CostMatrix.from_pair_costs(probs.n, probs.non_existence)
    tree = kruskal_mst(costs)
    unconstrained = frozenset((i, j) if i < j else (j, i) for i, j in unconstrained_edges)
    diff = ProjectionDiff(added=tree - unconstrained, removed=unconstrained - tree)
    return tree, diff
