"""Graph data model: nodes with 2D pixel positions, undirected edges, tree predicates."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path


class GraphError(ValueError):
    """Raised when a graph violates its structural invariants."""


Edge = tuple[int, int]


def edge_key(i: int, j: int) -> Edge:
    """Canonical undirected edge as (min, max). Self-loops are rejected."""
    if i == j:
        raise GraphError(f"self-loop at node {i}")
    return (i, j) if i < j else (j, i)


class UnionFind:
    """Disjoint sets over arbitrary hashable items, with path compression."""

    def __init__(self, items=()):
        self.parent = {x: x for x in items}

    def add(self, x) -> None:
        self.parent.setdefault(x, x)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        """Merge the sets of a and b; returns False if already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True

    def component_count(self) -> int:
        return sum(1 for x in self.parent if self.find(x) == x)


@dataclass(frozen=True)
class Graph:
    """Undirected spatial graph on an integer pixel canvas.

    nodes holds (id, x, y) triples with unique integer ids and float pixel
    coordinates inside the canvas; edges hold canonical (i, j) id pairs with
    i < j. Instances are immutable and validated on construction.
    """

    nodes: tuple[tuple[int, float, float], ...]
    edges: frozenset[Edge]
    canvas: tuple[int, int]

    def __post_init__(self):
        width, height = self.canvas
        if width <= 0 or height <= 0:
            raise GraphError(f"canvas must be positive, got {self.canvas}")
        ids = [nid for nid, _, _ in self.nodes]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate node ids")
        known = set(ids)
        for nid, x, y in self.nodes:
            if not (0 <= x < width and 0 <= y < height):
                raise GraphError(f"node {nid} at ({x}, {y}) outside canvas {self.canvas}")
        for i, j in self.edges:
            if i >= j:
                raise GraphError(f"edge ({i}, {j}) not in canonical i < j order")
            if i not in known or j not in known:
                raise GraphError(f"edge ({i}, {j}) references a missing node")

    @classmethod
    def build(cls, positions, edges, canvas) -> "Graph":
        """Construct from bare (x, y) positions; node ids are 0..n-1."""
        nodes = tuple((i, float(x), float(y)) for i, (x, y) in enumerate(positions))
        return cls(nodes, frozenset(edge_key(i, j) for i, j in edges), (int(canvas[0]), int(canvas[1])))

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def node_ids(self) -> list[int]:
        return [nid for nid, _, _ in self.nodes]

    def position(self, nid: int) -> tuple[float, float]:
        for i, x, y in self.nodes:
            if i == nid:
                return (x, y)
        raise GraphError(f"unknown node id {nid}")

    def positions(self) -> dict[int, tuple[float, float]]:
        return {nid: (x, y) for nid, x, y in self.nodes}

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {nid: [] for nid, _, _ in self.nodes}
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        for neighbors in adj.values():
            neighbors.sort()
        return adj

    def degrees(self) -> dict[int, int]:
        return {nid: len(nb) for nid, nb in self.adjacency().items()}

    def edge_length(self, edge: Edge) -> float:
        (xi, yi), (xj, yj) = self.position(edge[0]), self.position(edge[1])
        return math.hypot(xj - xi, yj - yi)

    def total_edge_length(self) -> float:
        pos = self.positions()
        return sum(math.hypot(pos[j][0] - pos[i][0], pos[j][1] - pos[i][1]) for i, j in self.edges)

    def to_json_dict(self) -> dict:
        return {
            "canvas": [self.canvas[0], self.canvas[1]],
            "nodes": [[nid, x, y] for nid, x, y in self.nodes],
            "edges": sorted([i, j] for i, j in self.edges),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Graph":
        nodes = tuple((int(nid), float(x), float(y)) for nid, x, y in data["nodes"])
        edges = frozenset(edge_key(int(i), int(j)) for i, j in data["edges"])
        canvas = (int(data["canvas"][0]), int(data["canvas"][1]))
        return cls(nodes, edges, canvas)

    def save(self, path) -> None:
        Path(path).write_text(dumps_graph(self))

    @classmethod
    def load(cls, path) -> "Graph":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def dumps_graph(g: Graph) -> str:
    return json.dumps(g.to_json_dict(), sort_keys=True, separators=(",", ":"))


def connected_component_count(g: Graph) -> int:
    """Number of connected components, via union-find."""
    uf = UnionFind(g.node_ids())
    for i, j in g.edges:
        uf.union(i, j)
    return uf.component_count()


def _connected_bfs(g: Graph) -> bool:
    if g.node_count <= 1:
        return True
    adj = g.adjacency()
    start = g.nodes[0][0]
    seen = {start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nb in adj[cur]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == g.node_count


def is_tree(g: Graph) -> bool:
    """True iff g is connected with |E| = |V| - 1.

    The empty graph and the single-node graph count as (vacuous) trees.
    """
    if g.node_count == 0:
        return True
    return len(g.edges) == g.node_count - 1 and _connected_bfs(g)


def keypoints(g: Graph) -> set[int]:
    """Node ids with degree != 2: junctions, leaves, and isolated nodes."""
    return {nid for nid, deg in g.degrees().items() if deg != 2}
