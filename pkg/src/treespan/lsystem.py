"""Bracketed L-system generator for synthetic branching structures.

Strings use two lettered symbols, each tagged with a generation digit: F<d>
draws a segment, A<d> is a growth tip that draws nothing. Rewriting replaces
every A<d> with the chosen production, whose letters all receive digit d+1,
while F symbols are stable. A turtle interprets the final string into a graph
that is a tree by construction, then the raster writer inks it onto a dark
canvas. Randomness (rule choice, segment lengths, joint angles) comes from a
caller-supplied generator, so every sample is reproducible from its seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .graph import Graph
from .preprocess import resample_graph

MAX_ITERATIONS = 3

LETTERS = "FA"
CONTROL = "[]+-"


class LSystemError(ValueError):
    pass


class NodeCapExceeded(RuntimeError):
    """Raised when an interpreted structure exceeds the configured node cap."""

    def __init__(self, node_count: int, cap: int):
        super().__init__(f"structure has {node_count} nodes, cap is {cap}")
        self.node_count = node_count
        self.cap = cap


def tokenize(s: str) -> list[str]:
    """Split into F<d>/A<d>/bracket/sign tokens, validating the syntax."""
    tokens = []
    depth = 0
    i = 0
    while i < len(s):
        c = s[i]
        if c in LETTERS:
            if i + 1 >= len(s) or not s[i + 1].isdigit():
                raise LSystemError(f"symbol {c!r} at offset {i} lacks a generation digit")
            tokens.append(s[i : i + 2])
            i += 2
        elif c in CONTROL:
            if c == "[":
                depth += 1
            elif c == "]":
                depth -= 1
                if depth < 0:
                    raise LSystemError(f"unmatched ']' at offset {i}")
            tokens.append(c)
            i += 1
        else:
            raise LSystemError(f"unexpected character {c!r} at offset {i}")
    if depth != 0:
        raise LSystemError("unmatched '[' in string")
    return tokens


def _stamp_digits(template: str, digit: int) -> str:
    """Tag every letter of a digitless production with the given generation."""
    out = []
    for c in template:
        if c in LETTERS:
            out.append(c + str(digit))
        elif c in CONTROL:
            out.append(c)
        else:
            raise LSystemError(f"unexpected character {c!r} in production {template!r}")
    return "".join(out)


def rewrite(axiom: str, production: str, iterations: int) -> str:
    """Apply the production to every A symbol, iterations times.

    A<d> expands to the production with all letters tagged d+1; F symbols
    are left untouched. Iterations are capped so generation digits stay
    single characters.
    """
    if not 0 <= iterations <= MAX_ITERATIONS:
        raise LSystemError(f"iterations must be in [0, {MAX_ITERATIONS}], got {iterations}")
    s = axiom
    for _ in range(iterations):
        out = []
        for tok in tokenize(s):
            if tok[0] == "A":
                out.append(_stamp_digits(production, int(tok[1]) + 1))
            else:
                out.append(tok)
        s = "".join(out)
    return s


@dataclass(frozen=True)
class GeomConfig:
    """Turtle geometry plus canvas, stroke, and node budget for one profile."""

    canvas: tuple[int, int] = (512, 512)
    stroke: int = 1
    node_cap: int = 100
    base_length: float = 1.0
    length_range: tuple[float, float] = (0.5, 2.5)
    angle_range_deg: tuple[float, float] = (10.0, 35.0)
    fixed_angle_deg: float | None = None
    margin_frac: float = 0.05

    def __post_init__(self):
        if self.canvas[0] < 1 or self.canvas[1] < 1:
            raise ValueError(f"canvas must be positive, got {self.canvas}")
        if self.stroke < 1:
            raise ValueError(f"stroke must be >= 1, got {self.stroke}")
        if self.node_cap < 2:
            raise ValueError(f"node cap must be >= 2, got {self.node_cap}")
        for lo, hi in (self.length_range, self.angle_range_deg):
            if not lo <= hi:
                raise ValueError(f"empty range ({lo}, {hi})")


def _fit_to_canvas(points, canvas, margin_frac):
    """Uniformly scale and center onto the canvas, flipping y to image rows."""
    width, height = canvas
    pts = np.asarray(points, dtype=float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    extent = hi - lo
    usable = (width - 1 - 2 * margin_frac * width, height - 1 - 2 * margin_frac * height)
    scales = [usable[k] / extent[k] for k in (0, 1) if extent[k] > 1e-12]
    scale = min(scales) if scales else 1.0
    mapped = (pts - (lo + hi) / 2.0) * scale
    mapped[:, 1] = -mapped[:, 1]
    mapped += ((width - 1) / 2.0, (height - 1) / 2.0)
    mapped[:, 0] = np.clip(mapped[:, 0], 0.0, width - 1.0)
    mapped[:, 1] = np.clip(mapped[:, 1], 0.0, height - 1.0)
    return [(float(x), float(y)) for x, y in mapped]


def interpret(s: str, geom: GeomConfig, rng: np.random.Generator) -> Graph:
    """Turtle-walk the string into a tree graph fitted to the canvas.

    The turtle starts heading up. F<d> draws a segment of jittered length to
    a fresh node, +/- turn by a jittered (or fixed) joint angle, brackets
    push and pop the full turtle state including the current node, and A<d>
    is a no-op tip. Random draws happen in token order.
    """
    positions = [(0.0, 0.0)]
    edges = []
    x, y, heading, node = 0.0, 0.0, math.pi / 2.0, 0
    stack: list[tuple[float, float, float, int]] = []
    for tok in tokenize(s):
        if tok[0] == "F":
            length = geom.base_length * rng.uniform(*geom.length_range)
            x, y = x + length * math.cos(heading), y + length * math.sin(heading)
            new_id = len(positions)
            positions.append((x, y))
            edges.append((node, new_id))
            node = new_id
        elif tok in "+-":
            if geom.fixed_angle_deg is not None:
                angle = geom.fixed_angle_deg
            else:
                angle = rng.uniform(*geom.angle_range_deg)
            heading += math.radians(angle) if tok == "+" else -math.radians(angle)
        elif tok == "[":
            stack.append((x, y, heading, node))
        elif tok == "]":
            x, y, heading, node = stack.pop()
    if len(positions) > geom.node_cap:
        raise NodeCapExceeded(len(positions), geom.node_cap)
    fitted = _fit_to_canvas(positions, geom.canvas, geom.margin_frac)
    return Graph.build(fitted, edges, geom.canvas)


def bresenham(x0: int, y0: int, x1: int, y1: int):
    """Integer line pixels from (x0, y0) to (x1, y1), endpoints inclusive."""
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        yield x0, y0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def rasterize(graph: Graph, geom: GeomConfig) -> np.ndarray:
    """Ink the graph's edges onto a dark canvas with a square brush."""
    if graph.canvas != geom.canvas:
        raise ValueError(f"graph canvas {graph.canvas} does not match geometry {geom.canvas}")
    width, height = geom.canvas
    img = np.zeros((height, width), dtype=np.uint8)
    r = geom.stroke // 2
    for i, j in sorted(graph.edges):
        xi, yi = graph.position(i)
        xj, yj = graph.position(j)
        for px, py in bresenham(round(xi), round(yi), round(xj), round(yj)):
            img[max(0, py - r) : py + r + 1, max(0, px - r) : px + r + 1] = 255
    return img


@dataclass(frozen=True)
class DatasetProfile:
    """One dataset flavor: geometry plus rewrite depth and optional resampling."""

    name: str
    geom: GeomConfig
    iterations: tuple[int, int]
    resample_interval: float | None = None


PROFILES = {
    "standard": DatasetProfile(
        "standard", GeomConfig(canvas=(512, 512), stroke=1, node_cap=100), (1, 3)
    ),
    "generalized": DatasetProfile(
        "generalized",
        GeomConfig(canvas=(256, 256), stroke=1, node_cap=384),
        (1, 3),
        resample_interval=13.0,
    ),
    "thickened": DatasetProfile(
        "thickened",
        GeomConfig(canvas=(256, 256), stroke=3, node_cap=384, fixed_angle_deg=22.5),
        (1, 3),
        resample_interval=13.0,
    ),
    "mini": DatasetProfile(
        "mini", GeomConfig(canvas=(128, 128), stroke=1, node_cap=30), (1, 2)
    ),
}


@dataclass(frozen=True)
class RuleBank:
    axioms: tuple[str, ...]
    productions: tuple[str, ...]

    def __post_init__(self):
        if not self.axioms or not self.productions:
            raise LSystemError("rule bank needs at least one axiom and one production")
        for axiom in self.axioms:
            tokenize(axiom)
        for production in self.productions:
            tokenize(_stamp_digits(production, 0))


def load_rules(path=None) -> RuleBank:
    """Load the rule bank, from a file or the packaged default."""
    if path is None:
        raw = resources.files(__package__).joinpath("rules.json").read_text()
    else:
        with open(path) as fh:
            raw = fh.read()
    data = json.loads(raw)
    return RuleBank(tuple(data["axioms"]), tuple(data["productions"]))


def generate_sample(
    profile: DatasetProfile, rules: RuleBank, rng: np.random.Generator
) -> tuple[Graph, np.ndarray]:
    """Draw one (graph, image) pair; raises NodeCapExceeded on oversized trees."""
    axiom = rules.axioms[int(rng.integers(len(rules.axioms)))]
    production = rules.productions[int(rng.integers(len(rules.productions)))]
    iterations = int(rng.integers(profile.iterations[0], profile.iterations[1] + 1))
    s = rewrite(axiom, production, iterations)
    graph = interpret(s, profile.geom, rng)
    if profile.resample_interval is not None:
        graph = resample_graph(graph, profile.resample_interval)
        if graph.node_count > profile.geom.node_cap:
            raise NodeCapExceeded(graph.node_count, profile.geom.node_cap)
    return graph, rasterize(graph, profile.geom)
