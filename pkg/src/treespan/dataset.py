"""Dataset factory and on-disk format: PGM images, graph JSON, manifest.

A dataset directory holds images/NNNNN.pgm, graphs/NNNNN.json, and a
manifest.json that records the profile, the master seed, and for each sample
its split and the exact seed sequence that regenerates it. Every byte is
deterministic given (profile, counts, master seed).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .graph import Graph, dumps_graph
from .lsystem import PROFILES, NodeCapExceeded, RuleBank, generate_sample, load_rules

FORMAT_VERSION = 1
MAX_ATTEMPTS = 100
SPLIT_ORDER = ("train", "val", "test")


def write_pgm(path, image: np.ndarray) -> None:
    """Write a grayscale image as binary PGM (P5, maxval 255)."""
    arr = np.asarray(image, dtype=np.uint8)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {arr.shape}")
    height, width = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5) image, tolerating comments and any whitespace."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")

    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        fields.append(int(data[start:pos]))
    pos += 1

    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported, got {maxval}")
    raw = data[pos : pos + width * height]
    if len(raw) != width * height:
        raise ValueError(f"{path}: expected {width * height} pixel bytes, got {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width)


@dataclass(frozen=True)
class SampleRecord:
    id: int
    image: str
    graph: str
    split: str
    seed: tuple[int, int, int]


@dataclass(frozen=True)
class Manifest:
    format_version: int
    profile: str
    seed: int
    canvas: tuple[int, int]
    node_cap: int
    counts: dict
    samples: tuple[SampleRecord, ...]

    def split(self, name: str) -> list[SampleRecord]:
        return [s for s in self.samples if s.split == name]


def _manifest_json(manifest: Manifest) -> str:
    data = asdict(manifest)
    data["canvas"] = list(manifest.canvas)
    data["samples"] = [dict(asdict(s), seed=list(s.seed)) for s in manifest.samples]
    return json.dumps(data, sort_keys=True, indent=2)


def load_manifest(dataset_dir) -> Manifest:
    path = Path(dataset_dir) / "manifest.json"
    with open(path) as fh:
        data = json.load(fh)
    if data.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported manifest format_version {data.get('format_version')}")
    samples = tuple(
        SampleRecord(s["id"], s["image"], s["graph"], s["split"], tuple(s["seed"]))
        for s in data["samples"]
    )
    return Manifest(
        format_version=data["format_version"],
        profile=data["profile"],
        seed=data["seed"],
        canvas=tuple(data["canvas"]),
        node_cap=data["node_cap"],
        counts=data["counts"],
        samples=samples,
    )


def load_sample(dataset_dir, record: SampleRecord) -> tuple[Graph, np.ndarray]:
    base = Path(dataset_dir)
    return Graph.load(base / record.graph), read_pgm(base / record.image)


def generate_dataset(
    out_dir,
    profile_name: str,
    counts: dict,
    seed: int,
    rules: RuleBank | None = None,
) -> Manifest:
    """Generate a full dataset directory and return its manifest.

    Per sample, the generator is seeded with [master seed, sample index,
    attempt]; samples that blow the node cap are retried with the next
    attempt number, up to MAX_ATTEMPTS, then the run aborts and reports the
    offending seed so it can be reproduced.
    """
    if profile_name not in PROFILES:
        raise ValueError(f"unknown profile {profile_name!r}, choose from {sorted(PROFILES)}")
    unknown = set(counts) - set(SPLIT_ORDER)
    if unknown:
        raise ValueError(f"unknown splits {sorted(unknown)}, choose from {list(SPLIT_ORDER)}")
    profile = PROFILES[profile_name]
    if rules is None:
        rules = load_rules()

    base = Path(out_dir)
    (base / "images").mkdir(parents=True, exist_ok=True)
    (base / "graphs").mkdir(parents=True, exist_ok=True)

    records = []
    index = 0
    for split in SPLIT_ORDER:
        for _ in range(int(counts.get(split, 0))):
            for attempt in range(MAX_ATTEMPTS):
                rng = np.random.default_rng([seed, index, attempt])
                try:
                    graph, image = generate_sample(profile, rules, rng)
                    break
                except NodeCapExceeded:
                    continue
            else:
                raise RuntimeError(
                    f"sample {index} exceeded the node cap {MAX_ATTEMPTS} times; "
                    f"last seed was [{seed}, {index}, {MAX_ATTEMPTS - 1}]"
                )
            image_rel = f"images/{index:05d}.pgm"
            graph_rel = f"graphs/{index:05d}.json"
            write_pgm(base / image_rel, image)
            with open(base / graph_rel, "w") as fh:
                fh.write(dumps_graph(graph))
            records.append(SampleRecord(index, image_rel, graph_rel, split, (seed, index, attempt)))
            index += 1

    manifest = Manifest(
        format_version=FORMAT_VERSION,
        profile=profile_name,
        seed=seed,
        canvas=profile.geom.canvas,
        node_cap=profile.geom.node_cap,
        counts={k: int(counts.get(k, 0)) for k in SPLIT_ORDER},
        samples=tuple(records),
    )
    with open(base / "manifest.json", "w") as fh:
        fh.write(_manifest_json(manifest))
    return manifest
