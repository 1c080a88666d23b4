"""Shared fixtures: small canonical graphs and a tiny generated dataset."""

import pytest

from treespan.dataset import generate_dataset
from treespan.graph import Graph

CANVAS = (64, 64)


def path_graph(n=3, canvas=CANVAS, y=20.0, spacing=10.0, x0=5.0):
    """Horizontal chain of n nodes."""
    positions = [(x0 + k * spacing, y) for k in range(n)]
    return Graph.build(positions, [(k, k + 1) for k in range(n - 1)], canvas)


def triangle_graph(canvas=CANVAS):
    return Graph.build([(10.0, 10.0), (50.0, 10.0), (30.0, 45.0)],
                       [(0, 1), (1, 2), (0, 2)], canvas)


def star_graph(canvas=CANVAS):
    """Center node 0 with three leaves."""
    return Graph.build([(32.0, 32.0), (32.0, 10.0), (12.0, 50.0), (52.0, 50.0)],
                       [(0, 1), (0, 2), (0, 3)], canvas)


def cycle_graph(canvas=CANVAS):
    """4-cycle; every node has degree 2, so no keypoints."""
    return Graph.build([(10.0, 10.0), (50.0, 10.0), (50.0, 50.0), (10.0, 50.0)],
                       [(0, 1), (1, 2), (2, 3), (0, 3)], canvas)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """A small mini-profile dataset shared by training-dependent tests."""
    out = tmp_path_factory.mktemp("data") / "tiny"
    generate_dataset(out, "mini", {"train": 12, "val": 4, "test": 4}, seed=5)
    return out
