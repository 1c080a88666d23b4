"""Request and response models for the HTTP service.

All paths refer to the server's filesystem. The suppression magnitude is
spelled "lambda" on the wire and "lam" in Python, since lambda is a keyword.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class GenerateRequest(BaseModel):
    out_dir: str
    profile: str = "standard"
    train: int = Field(10, ge=0)
    val: int = Field(0, ge=0)
    test: int = Field(0, ge=0)
    seed: int = 0
    rules_path: str | None = None
    force: bool = False


class GenerateResponse(BaseModel):
    out_dir: str
    manifest: str
    profile: str
    seed: int
    counts: dict[str, int]
    samples: int
    artifacts: list[str]


class TrainRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    dataset_dir: str
    out_dir: str
    mode: str = "unconstrained"
    seed: int = 0
    epochs: int = Field(60, ge=0)
    learning_rate: float = Field(1e-3, gt=0)
    batch_size: int = Field(1, ge=1)
    patience: int | None = 30
    lam: float = Field(10.0, alias="lambda", gt=0)


class TrainResponse(BaseModel):
    checkpoint: str
    history: str
    best_epoch: int
    best_f1: float | None
    epochs_run: int
    artifacts: list[str]


class MetricReportModel(BaseModel):
    smd: float
    topo_precision: float
    topo_recall: float
    topo_f1: float
    tree_rate: float
    count: int
    degenerate: int
    breakdown: list[dict]


class EvalRequest(BaseModel):
    dataset_dir: str
    checkpoint: str | None = None
    split: str = "test"
    mode: str | None = None
    self_check: bool = False
    out_dir: str | None = None
    smd_points: int = Field(100, ge=1)
    topo_radius: float = Field(13.0, gt=0)
    topo_angle_tol: float = Field(30.0, gt=0)


class EvalResponse(BaseModel):
    mode: str
    split: str
    report: MetricReportModel
    table: str
    artifacts: list[str]


class CompareRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    dataset_dir: str
    out_dir: str
    seed: int = 0
    epochs: int = Field(60, ge=0)
    patience: int | None = 30
    lam: float = Field(10.0, alias="lambda", gt=0)
    batch_size: int = Field(1, ge=1)
    learning_rate: float = Field(1e-3, gt=0)


class CompareResponse(BaseModel):
    table: str
    reports: dict[str, MetricReportModel]
    artifacts: list[str]


class AblateRequest(BaseModel):
    dataset_dir: str
    out_dir: str
    seed: int = 0
    lambdas: list[float] = [2.0, 5.0, 10.0, 100.0]
    epochs: int = Field(60, ge=0)
    patience: int | None = 30
    batch_size: int = Field(1, ge=1)
    learning_rate: float = Field(1e-3, gt=0)


class AblateResponse(BaseModel):
    table: str
    reports: dict[str, MetricReportModel]
    artifacts: list[str]


class ProjectRequest(BaseModel):
    in_path: str
    out_path: str


class ProjectResponse(BaseModel):
    out_path: str
    nodes: int
    tree_edges: int
    added: int
    removed: int
    artifacts: list[str]


class PlotRequest(BaseModel):
    dataset_dir: str
    checkpoint: str
    out_dir: str
    split: str = "test"
    ids: list[int] | None = None
    limit: int = Field(8, ge=1)


class PlotSkip(BaseModel):
    id: int
    reason: str


class PlotResponse(BaseModel):
    written: list[str]
    skipped: list[PlotSkip]
    artifacts: list[str]


class SfsDiagnoseRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    n: int = Field(ge=1)
    logits: list[list[float]]
    targets: list[list[float]] | None = None
    lam: float = Field(10.0, alias="lambda", gt=0)


class SfsDiagnoseResponse(BaseModel):
    tree: list[list[int]]
    added: list[list[int]]
    removed: list[list[int]]
    pairs: list[dict]
