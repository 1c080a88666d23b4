"""Tree-constrained graph generation from images.

Core pieces: a minimum spanning tree projection for predicted edge sets, a
selective-suppression layer that makes the projection trainable, a desk-scale
edge predictor, a synthetic L-system dataset factory, and the matching
evaluation metrics. An HTTP service plus a thin CLI tie them together.
"""

__version__ = "0.1.0"

from .graph import Graph, GraphError, is_tree, keypoints
from .mst import CostMatrix, ProjectionDiff, brute_force_mst, kruskal_mst, mst_project
from .pairs import EdgeLogits, EdgeProbabilities, EdgeTargets
from .sfs import SfsConfig, edge_loss, sfs_backward, sfs_forward

__all__ = [
    "__version__",
    "Graph",
    "GraphError",
    "is_tree",
    "keypoints",
    "CostMatrix",
    "ProjectionDiff",
    "kruskal_mst",
    "brute_force_mst",
    "mst_project",
    "EdgeLogits",
    "EdgeProbabilities",
    "EdgeTargets",
    "SfsConfig",
    "sfs_forward",
    "sfs_backward",
    "edge_loss",
]
