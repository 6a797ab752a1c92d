"""Pipeline entry points shared by the command line and the service.

Each run_* function reads a manifest, does one unit of work, writes its
outputs plus a report, and returns a RunOutcome naming everything it
wrote. All functions raise ValueError (or a subclass) on bad input; the
callers translate that into exit codes or HTTP errors.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from segsel.cer_selection import (
    DEFAULT_REQUIRED_SYSTEMS,
    DEFAULT_TAU,
    CerFilterConfig,
    cer_histogram,
    score_pool,
    select_cer,
    write_scores_jsonl,
)
from segsel.manifest import SegmentPool, SelectionResult, read_manifest, write_manifest
from segsel.ner_selection import (
    class_stats,
    filter_entity_segments,
    select_class_balanced_random,
    select_class_balanced_top_confidence,
    select_random,
    select_top_confidence,
)
from segsel.report import (
    RunReport,
    manifest_digest,
    render_distribution_report,
    write_report,
)
from segsel.sampling import Budget, Rng, random_sample
from segsel.textnorm import DEFAULT_NORMALIZATION, NormalizationConfig
from segsel.wer_classifier import (
    DEFAULT_EPOCHS,
    DEFAULT_LAMBDA,
    evaluate,
    load_model,
    save_model,
    select_low_wer,
    train_svm,
)

DEFAULT_SEED = 42

STRATEGIES = (
    "random",
    "wer-clf",
    "ner-random",
    "ner-top-conf",
    "ner-class-random",
    "ner-class-top-conf",
    "cer",
)

SUBSET_MANIFEST_NAME = "subset.jsonl"
SCORES_NAME = "scores.jsonl"


class UnknownStrategyError(ValueError):
    def __init__(self, name: str) -> None:
        super().__init__(
            f"unknown strategy '{name}'; valid strategies: "
            + ", ".join(STRATEGIES)
        )
        self.strategy = name


@dataclass(frozen=True)
class RunOutcome:
    """A finished run: its report plus the paths it wrote."""

    report: RunReport
    outputs: dict[str, str]

    def to_dict(self) -> dict[str, Any]:
        return {"outputs": dict(self.outputs), "report": self.report.to_dict()}


def _dispatch(
    pool: SegmentPool,
    strategy: str,
    budget_hours: float,
    seed: int,
    *,
    cer_cfg: CerFilterConfig,
    cer_scoring,
    rank_lowest: bool,
    aggregate: str,
    model_path: str | None,
) -> SelectionResult:
    if strategy == "random":
        return random_sample(pool, Budget(hours=budget_hours), Rng(seed, "random"))
    if strategy == "wer-clf":
        if model_path is None:
            raise ValueError("strategy 'wer-clf' requires --model (a trained model)")
        return select_low_wer(pool, load_model(model_path), budget_hours, seed)
    if strategy == "ner-random":
        return select_random(pool, budget_hours, seed)
    if strategy == "ner-top-conf":
        return select_top_confidence(pool, budget_hours, seed, aggregate)
    if strategy == "ner-class-random":
        return select_class_balanced_random(pool, budget_hours, seed)
    if strategy == "ner-class-top-conf":
        return select_class_balanced_top_confidence(pool, budget_hours, seed, aggregate)
    if strategy == "cer":
        return select_cer(
            pool,
            cer_cfg,
            budget_hours,
            seed,
            rank_lowest=rank_lowest,
            scoring=cer_scoring,
        )
    raise UnknownStrategyError(strategy)


def run_select(
    manifest_path: str | Path,
    out_dir: str | Path,
    strategy: str,
    budget_hours: float,
    seed: int = DEFAULT_SEED,
    *,
    tau: float = DEFAULT_TAU,
    required_systems: Sequence[str] = DEFAULT_REQUIRED_SYSTEMS,
    rank_lowest: bool = False,
    aggregate: str = "max",
    model_path: str | None = None,
    threads: int = 1,
    norm: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> RunOutcome:
    """Select a budgeted subset and write manifest plus report."""
    if strategy not in STRATEGIES:
        raise UnknownStrategyError(strategy)
    started = time.perf_counter()
    pool = read_manifest(manifest_path)
    cer_cfg = CerFilterConfig(tau=tau, required_systems=tuple(required_systems), norm=norm)
    scoring = score_pool(pool, cer_cfg, threads=threads) if strategy == "cer" else None
    result = _dispatch(
        pool,
        strategy,
        budget_hours,
        seed,
        cer_cfg=cer_cfg,
        cer_scoring=scoring,
        rank_lowest=rank_lowest,
        aggregate=aggregate,
        model_path=model_path,
    )
    subset = pool.subset(result.selected_ids)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    subset_path = out / SUBSET_MANIFEST_NAME
    write_manifest(subset, subset_path)

    config: dict[str, Any] = {
        "command": "select",
        "input_manifest": str(manifest_path),
        "strategy": strategy,
        "budget_hours": budget_hours,
        "seed": seed,
    }
    if strategy == "cer":
        config.update(cer_cfg.to_dict())
        config["rank_lowest"] = rank_lowest
    if strategy in ("ner-top-conf", "ner-class-top-conf"):
        config["confidence_aggregate"] = aggregate
    if strategy == "wer-clf":
        config["model_path"] = str(model_path)

    entity_stats = None
    distribution = None
    if strategy.startswith("ner-") and len(filter_entity_segments(pool)) > 0:
        entity_stats = class_stats(pool, aggregate)
        distribution = render_distribution_report(
            pool, entity_stats, [result], aggregate
        )
    histogram = cer_histogram(scoring, pool) if scoring is not None else None

    report = RunReport(
        strategy=strategy,
        input_manifest_digest=manifest_digest(manifest_path),
        config=config,
        selection=result,
        entity_stats=entity_stats,
        distribution=distribution,
        cer_histogram=histogram,
        wall_clock_s=time.perf_counter() - started,
    )
    json_path, txt_path = write_report(report, out)
    return RunOutcome(
        report=report,
        outputs={
            "subset_manifest": str(subset_path),
            "report_json": str(json_path),
            "report_txt": str(txt_path),
        },
    )


def run_score_cer(
    manifest_path: str | Path,
    out_dir: str | Path,
    *,
    tau: float = DEFAULT_TAU,
    required_systems: Sequence[str] = DEFAULT_REQUIRED_SYSTEMS,
    threads: int = 1,
    bin_width: float = 0.05,
    norm: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> RunOutcome:
    """Score hypothesis agreement and write scores plus histogram."""
    started = time.perf_counter()
    pool = read_manifest(manifest_path)
    cfg = CerFilterConfig(tau=tau, required_systems=tuple(required_systems), norm=norm)
    scoring = score_pool(pool, cfg, threads=threads)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scores_path = out / SCORES_NAME
    write_scores_jsonl(scoring, scores_path)
    histogram = cer_histogram(scoring, pool, bin_width)
    config: dict[str, Any] = {
        "command": "score-cer",
        "input_manifest": str(manifest_path),
        "bin_width": bin_width,
        "threads": threads,
    }
    config.update(cfg.to_dict())
    report = RunReport(
        strategy="score-cer",
        input_manifest_digest=manifest_digest(manifest_path),
        config=config,
        cer_histogram=histogram,
        wall_clock_s=time.perf_counter() - started,
    )
    json_path, txt_path = write_report(report, out)
    return RunOutcome(
        report=report,
        outputs={
            "scores": str(scores_path),
            "report_json": str(json_path),
            "report_txt": str(txt_path),
        },
    )


def run_train_wer(
    manifest_path: str | Path,
    model_path: str | Path,
    *,
    lam: float = DEFAULT_LAMBDA,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = DEFAULT_SEED,
    out_dir: str | Path | None = None,
) -> RunOutcome:
    """Train the low/high-WER classifier and save the model."""
    started = time.perf_counter()
    pool = read_manifest(manifest_path)
    model = train_svm(pool, lam=lam, epochs=epochs, seed=seed)
    model_file = Path(model_path)
    model_file.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, model_file)
    out = Path(out_dir) if out_dir is not None else model_file.parent
    report = RunReport(
        strategy="train-wer",
        input_manifest_digest=manifest_digest(manifest_path),
        config={
            "command": "train-wer",
            "input_manifest": str(manifest_path),
            "model_path": str(model_file),
            "lambda": lam,
            "epochs": epochs,
            "seed": seed,
        },
        wall_clock_s=time.perf_counter() - started,
    )
    json_path, txt_path = write_report(report, out)
    return RunOutcome(
        report=report,
        outputs={
            "model": str(model_file),
            "report_json": str(json_path),
            "report_txt": str(txt_path),
        },
    )


def run_eval_wer(
    manifest_path: str | Path,
    model_path: str | Path,
    out_dir: str | Path,
) -> RunOutcome:
    """Evaluate a saved classifier on a labeled manifest."""
    started = time.perf_counter()
    pool = read_manifest(manifest_path)
    model = load_model(model_path)
    classification = evaluate(model, pool)
    report = RunReport(
        strategy="eval-wer",
        input_manifest_digest=manifest_digest(manifest_path),
        config={
            "command": "eval-wer",
            "input_manifest": str(manifest_path),
            "model_path": str(model_path),
        },
        classification=classification,
        wall_clock_s=time.perf_counter() - started,
    )
    json_path, txt_path = write_report(report, Path(out_dir))
    return RunOutcome(
        report=report,
        outputs={"report_json": str(json_path), "report_txt": str(txt_path)},
    )


def run_stats(
    manifest_path: str | Path,
    out_dir: str | Path,
    aggregate: str = "max",
) -> RunOutcome:
    """Report the entity class/confidence distribution of a manifest."""
    started = time.perf_counter()
    pool = read_manifest(manifest_path)
    stats = class_stats(pool, aggregate)
    report = RunReport(
        strategy="stats",
        input_manifest_digest=manifest_digest(manifest_path),
        config={
            "command": "stats",
            "input_manifest": str(manifest_path),
            "confidence_aggregate": aggregate,
        },
        entity_stats=stats,
        wall_clock_s=time.perf_counter() - started,
    )
    json_path, txt_path = write_report(report, Path(out_dir))
    return RunOutcome(
        report=report,
        outputs={"report_json": str(json_path), "report_txt": str(txt_path)},
    )
