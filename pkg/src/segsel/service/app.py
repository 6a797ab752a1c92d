"""FastAPI application exposing the pipeline over HTTP.

Every endpoint maps onto one runner function. Domain errors (bad
manifests, bad config, missing files) become HTTP 400 with the error
message as the detail; anything else is a genuine 500.
"""

from __future__ import annotations

from typing import Callable

from fastapi import FastAPI, HTTPException

from segsel import __version__
from segsel.runner import (
    RunOutcome,
    run_eval_wer,
    run_score_cer,
    run_select,
    run_stats,
    run_train_wer,
)
from segsel.service.schemas import (
    EvalWerRequest,
    HealthResponse,
    RunResponse,
    ScoreCerRequest,
    SelectRequest,
    StatsRequest,
    TrainWerRequest,
)
from segsel.textnorm import NormalizationConfig


def _respond(run: Callable[[], RunOutcome]) -> RunResponse:
    try:
        outcome = run()
    except (ValueError, FileNotFoundError, IsADirectoryError, NotADirectoryError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return RunResponse(outputs=outcome.outputs, report=outcome.report.to_dict())


def create_app() -> FastAPI:
    api = FastAPI(title="segsel", version=__version__)

    @api.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @api.post("/v1/select", response_model=RunResponse)
    def select(req: SelectRequest) -> RunResponse:
        return _respond(
            lambda: run_select(
                req.manifest_path,
                req.out_dir,
                req.strategy,
                req.budget_hours,
                req.seed,
                tau=req.tau,
                required_systems=tuple(req.required_systems),
                rank_lowest=req.rank_lowest,
                aggregate=req.aggregate,
                model_path=req.model_path,
                threads=req.threads,
                norm=NormalizationConfig(**req.normalization.model_dump()),
            )
        )

    @api.post("/v1/score-cer", response_model=RunResponse)
    def score_cer(req: ScoreCerRequest) -> RunResponse:
        return _respond(
            lambda: run_score_cer(
                req.manifest_path,
                req.out_dir,
                tau=req.tau,
                required_systems=tuple(req.required_systems),
                threads=req.threads,
                bin_width=req.bin_width,
                norm=NormalizationConfig(**req.normalization.model_dump()),
            )
        )

    @api.post("/v1/train-wer", response_model=RunResponse)
    def train_wer(req: TrainWerRequest) -> RunResponse:
        return _respond(
            lambda: run_train_wer(
                req.manifest_path,
                req.model_path,
                lam=req.lam,
                epochs=req.epochs,
                seed=req.seed,
                out_dir=req.out_dir,
            )
        )

    @api.post("/v1/eval-wer", response_model=RunResponse)
    def eval_wer(req: EvalWerRequest) -> RunResponse:
        return _respond(
            lambda: run_eval_wer(req.manifest_path, req.model_path, req.out_dir)
        )

    @api.post("/v1/stats", response_model=RunResponse)
    def stats(req: StatsRequest) -> RunResponse:
        return _respond(
            lambda: run_stats(req.manifest_path, req.out_dir, req.aggregate)
        )

    return api


app = create_app()
