"""SVG overlay figures: prediction and ground truth on the source image.

Ground-truth edges draw blue, predicted edges red; both are translucent so
agreement renders purple. Predicted nodes are yellow dots and predicted
keypoints cyan rings. The raster image is embedded as base64 PNG, making
each figure a self-contained, text-diffable file.
"""

from __future__ import annotations

import base64
import io

import numpy as np
from PIL import Image

from .graph import Graph, keypoints

GT_COLOR = "#3366ff"
PRED_COLOR = "#ff3333"
NODE_COLOR = "#ffdd33"
KEYPOINT_COLOR = "#33dddd"
EDGE_OPACITY = 0.55


def _png_base64(image: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _edge_lines(graph: Graph, color: str) -> list[str]:
    lines = []
    for i, j in sorted(graph.edges):
        x1, y1 = graph.position(i)
        x2, y2 = graph.position(j)
        lines.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="1.5" stroke-opacity="{EDGE_OPACITY}"/>'
        )
    return lines


def render_overlay(image: np.ndarray, gt: Graph, pred: Graph) -> str:
    """Self-contained SVG overlay of prediction and ground truth."""
    if gt.canvas != pred.canvas:
        raise ValueError(f"canvas mismatch: {gt.canvas} vs {pred.canvas}")
    width, height = gt.canvas
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<image href="data:image/png;base64,{_png_base64(image)}" '
        f'x="0" y="0" width="{width}" height="{height}"/>',
    ]
    parts.extend(_edge_lines(gt, GT_COLOR))
    parts.extend(_edge_lines(pred, PRED_COLOR))
    kp = set(keypoints(pred))
    for node in sorted(pred.node_ids()):
        x, y = pred.position(node)
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.6" fill="{NODE_COLOR}"/>')
        if node in kp:
            parts.append(
                f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3.2" fill="none" '
                f'stroke="{KEYPOINT_COLOR}" stroke-width="1.2"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts)
