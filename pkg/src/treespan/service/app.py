"""FastAPI application exposing the toolkit's commands over HTTP.

Each endpoint is a thin translation layer onto the corresponding run
function; domain errors map to 4xx responses with the original message.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..harness import (
    run_ablation,
    run_comparison,
    run_eval,
    run_generate,
    run_plot,
    run_project,
    run_train,
)
from ..pairs import EdgeLogits, EdgeTargets
from ..predictor import TrainConfig
from ..sfs import SfsConfig, pair_diagnostics, sfs_forward
from .schemas import (
    AblateRequest,
    AblateResponse,
    CompareRequest,
    CompareResponse,
    EvalRequest,
    EvalResponse,
    GenerateRequest,
    GenerateResponse,
    HealthResponse,
    PlotRequest,
    PlotResponse,
    ProjectRequest,
    ProjectResponse,
    SfsDiagnoseRequest,
    SfsDiagnoseResponse,
    TrainRequest,
    TrainResponse,
)


def _run(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except FileExistsError as exc:
        raise HTTPException(status_code=409, detail=str(exc))
    except FileNotFoundError as exc:
        raise HTTPException(status_code=404, detail=str(exc))
    except json.JSONDecodeError as exc:
        raise HTTPException(status_code=400, detail=f"malformed JSON: {exc}")
    except (ValueError, KeyError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))


def create_app() -> FastAPI:
    app = FastAPI(title="treespan", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/generate", response_model=GenerateResponse)
    def generate(req: GenerateRequest) -> GenerateResponse:
        counts = {"train": req.train, "val": req.val, "test": req.test}
        out = _run(
            run_generate, req.out_dir, req.profile, counts, req.seed, req.rules_path, req.force
        )
        return GenerateResponse(**out)

    @app.post("/train", response_model=TrainResponse)
    def train_endpoint(req: TrainRequest) -> TrainResponse:
        config = _run(
            TrainConfig,
            mode=req.mode,
            seed=req.seed,
            epochs=req.epochs,
            learning_rate=req.learning_rate,
            batch_size=req.batch_size,
            patience=req.patience,
            lam=req.lam,
        )
        out = _run(run_train, req.dataset_dir, req.out_dir, config)
        return TrainResponse(**out)

    @app.post("/eval", response_model=EvalResponse)
    def eval_endpoint(req: EvalRequest) -> EvalResponse:
        out = _run(
            run_eval,
            req.dataset_dir,
            checkpoint=req.checkpoint,
            split=req.split,
            mode=req.mode,
            self_check=req.self_check,
            out_dir=req.out_dir,
            smd_points=req.smd_points,
            topo_radius=req.topo_radius,
            topo_angle_tol=req.topo_angle_tol,
        )
        return EvalResponse(**out)

    @app.post("/compare", response_model=CompareResponse)
    def compare(req: CompareRequest) -> CompareResponse:
        out = _run(
            run_comparison,
            req.dataset_dir,
            req.out_dir,
            seed=req.seed,
            epochs=req.epochs,
            patience=req.patience,
            lam=req.lam,
            batch_size=req.batch_size,
            learning_rate=req.learning_rate,
        )
        return CompareResponse(**out)

    @app.post("/ablate", response_model=AblateResponse)
    def ablate(req: AblateRequest) -> AblateResponse:
        out = _run(
            run_ablation,
            req.dataset_dir,
            req.out_dir,
            seed=req.seed,
            lambdas=req.lambdas,
            epochs=req.epochs,
            patience=req.patience,
            batch_size=req.batch_size,
            learning_rate=req.learning_rate,
        )
        return AblateResponse(**out)

    @app.post("/project", response_model=ProjectResponse)
    def project(req: ProjectRequest) -> ProjectResponse:
        out = _run(run_project, req.in_path, req.out_path)
        return ProjectResponse(**out)

    @app.post("/plot", response_model=PlotResponse)
    def plot(req: PlotRequest) -> PlotResponse:
        out = _run(
            run_plot,
            req.dataset_dir,
            req.checkpoint,
            req.out_dir,
            split=req.split,
            ids=req.ids,
            limit=req.limit,
        )
        return PlotResponse(**out)

    @app.post("/sfs/diagnose", response_model=SfsDiagnoseResponse)
    def sfs_diagnose(req: SfsDiagnoseRequest) -> SfsDiagnoseResponse:
        logits = _run(EdgeLogits, req.n, req.logits)
        fwd = _run(sfs_forward, logits, SfsConfig(req.lam))
        if req.targets is not None:
            targets = _run(EdgeTargets, req.n, req.targets)
        else:
            targets = EdgeTargets.from_edges(req.n, fwd.tree)
        pairs = _run(pair_diagnostics, fwd, targets)
        return SfsDiagnoseResponse(
            tree=[list(e) for e in sorted(fwd.tree)],
            added=[list(e) for e in sorted(fwd.diff.added)],
            removed=[list(e) for e in sorted(fwd.diff.removed)],
            pairs=pairs,
        )

    return app
