"""Request and response bodies for the HTTP service.

Requests carry server-local file paths, not file contents: the service
is a thin orchestration layer over the same runner functions the
command line uses, and manifests stay on disk.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

from segsel.cer_selection import DEFAULT_REQUIRED_SYSTEMS, DEFAULT_TAU
from segsel.runner import DEFAULT_SEED
from segsel.wer_classifier import DEFAULT_EPOCHS, DEFAULT_LAMBDA


class NormalizationOptions(BaseModel):
    lowercase: bool = True
    strip_punctuation: bool = True
    collapse_whitespace: bool = True


class SelectRequest(BaseModel):
    manifest_path: str
    out_dir: str
    strategy: str = Field(
        description=(
            "One of: random, wer-clf, ner-random, ner-top-conf, "
            "ner-class-random, ner-class-top-conf, cer"
        )
    )
    budget_hours: float = Field(gt=0)
    seed: int = Field(default=DEFAULT_SEED, ge=0)
    tau: float = Field(default=DEFAULT_TAU, gt=0, le=1)
    required_systems: list[str] = Field(
        default_factory=lambda: list(DEFAULT_REQUIRED_SYSTEMS)
    )
    rank_lowest: bool = False
    aggregate: Literal["max", "mean"] = "max"
    model_path: str | None = None
    threads: int = Field(default=1, ge=1)
    normalization: NormalizationOptions = Field(
        default_factory=NormalizationOptions
    )

    model_config = {"protected_namespaces": ()}


class ScoreCerRequest(BaseModel):
    manifest_path: str
    out_dir: str
    tau: float = Field(default=DEFAULT_TAU, gt=0, le=1)
    required_systems: list[str] = Field(
        default_factory=lambda: list(DEFAULT_REQUIRED_SYSTEMS)
    )
    threads: int = Field(default=1, ge=1)
    bin_width: float = Field(default=0.05, gt=0, le=1)
    normalization: NormalizationOptions = Field(
        default_factory=NormalizationOptions
    )


class TrainWerRequest(BaseModel):
    manifest_path: str
    model_path: str
    lam: float = Field(default=DEFAULT_LAMBDA, gt=0, alias="lambda")
    epochs: int = Field(default=DEFAULT_EPOCHS, gt=0)
    seed: int = Field(default=DEFAULT_SEED, ge=0)
    out_dir: str | None = None

    model_config = {"populate_by_name": True, "protected_namespaces": ()}


class EvalWerRequest(BaseModel):
    manifest_path: str
    model_path: str
    out_dir: str

    model_config = {"protected_namespaces": ()}


class StatsRequest(BaseModel):
    manifest_path: str
    out_dir: str
    aggregate: Literal["max", "mean"] = "max"


class RunResponse(BaseModel):
    outputs: dict[str, str]
    report: dict[str, Any]


class HealthResponse(BaseModel):
    status: Literal["ok"]
    version: str
