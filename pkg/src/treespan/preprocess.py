"""Graph preprocessing: node redistribution, branch assembly, mask extraction.

Resampling rebuilds every degree-2 chain with nodes spaced at a fixed arc
length interval while keeping junctions and leaves exactly where they were.
Branch assembly stitches disconnected polyline branches into a single tree.
Mask extraction lifts a one-pixel-wide skeleton image into a pixel graph.
"""

from __future__ import annotations

import math

import numpy as np

from .graph import Graph, GraphError, UnionFind, edge_key, is_tree, keypoints


def _dist(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def _chains(graph: Graph) -> list[list[int]]:
    """Maximal degree-2 runs between keypoints, in deterministic order.

    In a tree every edge lies on exactly one such run, and every run ends at
    a keypoint on both sides.
    """
    kp = set(keypoints(graph))
    adjacency = graph.adjacency()
    visited: set = set()
    out = []
    for a in sorted(kp):
        for b in adjacency[a]:
            e = edge_key(a, b)
            if e in visited:
                continue
            visited.add(e)
            chain = [a, b]
            while chain[-1] not in kp:
                cur, prev = chain[-1], chain[-2]
                nxt = [v for v in adjacency[cur] if v != prev][0]
                visited.add(edge_key(cur, nxt))
                chain.append(nxt)
            out.append(chain)
    return out


def _point_along(points, seg_lengths, target: float):
    """Position at arc length target along a polyline."""
    acc = 0.0
    for (a, b), length in zip(zip(points, points[1:]), seg_lengths):
        if length > 0.0 and acc + length >= target:
            t = (target - acc) / length
            return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        acc += length
    return points[-1]


def resample_graph(graph: Graph, interval: float) -> Graph:
    """Redistribute chain nodes at a fixed arc length spacing.

    Keypoints (degree != 2) keep their exact positions. Each chain of total
    arc length L is rebuilt with n = max(1, floor(L / interval + 0.5)) equal
    arc length subsegments, interior nodes placed by linear interpolation
    along the original polyline. Only trees are accepted; node ids are
    renumbered with keypoints first.
    """
    if not (interval > 0.0):
        raise ValueError(f"interval must be positive, got {interval}")
    if not is_tree(graph):
        raise GraphError("resampling requires a tree")
    kps = sorted(keypoints(graph))
    id_map = {old: new for new, old in enumerate(kps)}
    positions = [graph.position(k) for k in kps]
    edges = []
    for chain in _chains(graph):
        pts = [graph.position(v) for v in chain]
        seg_lengths = [_dist(a, b) for a, b in zip(pts, pts[1:])]
        total = sum(seg_lengths)
        n = max(1, int(math.floor(total / interval + 0.5)))
        interior = []
        for k in range(1, n):
            interior.append(len(positions))
            positions.append(_point_along(pts, seg_lengths, k * total / n))
        seq = [id_map[chain[0]], *interior, id_map[chain[-1]]]
        edges.extend(zip(seq, seq[1:]))
    return Graph.build(positions, edges, graph.canvas)


def _point_segment_dist(p, a, b) -> float:
    """Distance from point p to the closed segment a-b."""
    ax, ay = a
    vx, vy = b[0] - ax, b[1] - ay
    denom = vx * vx + vy * vy
    if denom == 0.0:
        return _dist(p, a)
    t = ((p[0] - ax) * vx + (p[1] - ay) * vy) / denom
    t = min(1.0, max(0.0, t))
    return _dist(p, (ax + t * vx, ay + t * vy))


def _polyline_length(points) -> float:
    return sum(_dist(a, b) for a, b in zip(points, points[1:]))


def greedy_assemble(branches, canvas) -> Graph:
    """Stitch disconnected polyline branches into one tree.

    The longest branch seeds the tree. Each round, the unattached branch
    whose nearer endpoint is closest to any tree segment is attached: its
    endpoint connects to the nearest tree node, or merges with it outright
    when the distance is zero. Ties break by input order, so the result is
    deterministic.
    """
    cleaned = []
    for idx, branch in enumerate(branches):
        pts = [tuple(map(float, p)) for p in branch]
        pts = [p for k, p in enumerate(pts) if k == 0 or p != pts[k - 1]]
        if len(pts) < 2:
            raise ValueError(f"branch {idx} has fewer than two distinct points")
        cleaned.append(pts)
    if not cleaned:
        raise ValueError("no branches to assemble")

    order = sorted(range(len(cleaned)), key=lambda k: (-_polyline_length(cleaned[k]), k))
    seed = order[0]

    positions: list[tuple[float, float]] = []
    edges: list[tuple[int, int]] = []
    segments: list[tuple[int, int]] = []

    def add_chain(pts, first_id=None):
        ids = []
        for k, p in enumerate(pts):
            if k == 0 and first_id is not None:
                ids.append(first_id)
                continue
            ids.append(len(positions))
            positions.append(p)
        for a, b in zip(ids, ids[1:]):
            edges.append((a, b))
            segments.append((a, b))

    add_chain(cleaned[seed])
    remaining = [k for k in range(len(cleaned)) if k != seed]

    while remaining:
        best = None
        for k in remaining:
            pts = cleaned[k]
            for end_idx, p in ((0, pts[0]), (-1, pts[-1])):
                d = min(
                    _point_segment_dist(p, positions[a], positions[b]) for a, b in segments
                )
                cand = (d, remaining.index(k), end_idx, k)
                if best is None or cand < best:
                    best = cand
        d, _, end_idx, k = best
        pts = cleaned[k] if end_idx == 0 else list(reversed(cleaned[k]))
        endpoint = pts[0]
        nearest = min(range(len(positions)), key=lambda i: (_dist(endpoint, positions[i]), i))
        if _dist(endpoint, positions[nearest]) == 0.0:
            add_chain(pts, first_id=nearest)
        else:
            eid = len(positions)
            positions.append(endpoint)
            edges.append(edge_key(nearest, eid))
            segments.append((nearest, eid))
            add_chain(pts, first_id=eid)
        remaining.remove(k)

    return Graph.build(positions, [edge_key(a, b) for a, b in edges], canvas)


_ORTHO = ((1, 0), (0, 1))
_DIAG = ((1, 1), (1, -1))


def skeleton_mask_to_graph(mask, resample_interval: float | None = None) -> Graph:
    """Lift a thin skeleton mask into a pixel graph, optionally resampled.

    Ink pixels become nodes; 8-adjacent pixels are joined, except that a
    diagonal step is dropped whenever an orthogonal two-step path covers it,
    which keeps L-shaped corners from closing spurious triangles. Masks whose
    pixel graph is cyclic or disconnected are rejected with the offending
    location, since downstream processing assumes a single tree.
    """
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {arr.shape}")
    ink = arr != 0
    height, width = ink.shape
    ys, xs = np.nonzero(ink)
    pixels = list(zip(xs.tolist(), ys.tolist()))
    if not pixels:
        return Graph.build([], [], (width, height))
    index = {p: i for i, p in enumerate(pixels)}

    edges = []
    for (x, y), i in index.items():
        for dx, dy in _ORTHO:
            q = (x + dx, y + dy)
            if q in index:
                edges.append((i, index[q], (x, y), q))
        for dx, dy in _DIAG:
            q = (x + dx, y + dy)
            if q not in index:
                continue
            if (x + dx, y) in index or (x, y + dy) in index:
                continue
            edges.append((i, index[q], (x, y), q))

    uf = UnionFind(range(len(pixels)))
    kept = []
    for i, j, p, q in sorted(edges, key=lambda e: (min(e[0], e[1]), max(e[0], e[1]))):
        if not uf.union(i, j):
            raise GraphError(f"mask is not a tree: cycle closes between pixels {p} and {q}")
        kept.append(edge_key(i, j))
    if uf.component_count() > 1:
        roots = {}
        for p, i in index.items():
            roots.setdefault(uf.find(i), p)
        parts = sorted(roots.values())[:2]
        raise GraphError(
            f"mask is disconnected ({uf.component_count()} components, near pixels {parts[0]} and {parts[1]})"
        )

    graph = Graph.build([(float(x), float(y)) for x, y in pixels], kept, (width, height))
    if resample_interval is not None:
        graph = resample_graph(graph, resample_interval)
    return graph
