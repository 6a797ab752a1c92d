"""Budgeted data selection for pseudo-labeled speech corpora.

segsel filters large pseudo-labeled corpora down to small, high-quality
fine-tuning subsets. It selects segments by predicted transcript quality
(a linear low/high-WER classifier), by named-entity content (four
sampling strategies), or by inter-system agreement (average pairwise CER
across ASR hypotheses), always under a strict hour budget and a fixed
random seed.
"""

__version__ = "0.1.0"

from segsel.cer_selection import (
    DEFAULT_REQUIRED_SYSTEMS,
    DEFAULT_TAU,
    CerFilterConfig,
    CerHistogram,
    CerScore,
    CerScoring,
    cer_histogram,
    score_pool,
    select_cer,
)
from segsel.editdist import cer_avg, cer_pair, cer_pairs, levenshtein, wer
from segsel.manifest import (
    EntityAnnotation,
    FeatureVector,
    ManifestError,
    Segment,
    SegmentPool,
    SelectionResult,
    read_manifest,
    write_manifest,
)
from segsel.ner_selection import (
    EntityClassStats,
    class_stats,
    filter_entity_segments,
    select_class_balanced_random,
    select_class_balanced_top_confidence,
    select_random,
    select_top_confidence,
)
from segsel.report import RunReport, manifest_digest, render_text_tables, write_report
from segsel.runner import (
    STRATEGIES,
    RunOutcome,
    UnknownStrategyError,
    run_eval_wer,
    run_score_cer,
    run_select,
    run_stats,
    run_train_wer,
)
from segsel.sampling import RNG_ALGORITHM, Budget, Rng, random_sample, top_n
from segsel.textnorm import NormalizationConfig, normalize
from segsel.wer_classifier import (
    ClassificationReport,
    LinearSvmModel,
    WerLabel,
    evaluate,
    load_model,
    predict,
    save_model,
    select_low_wer,
    train_svm,
)

__all__ = [
    "Budget",
    "CerFilterConfig",
    "CerHistogram",
    "CerScore",
    "CerScoring",
    "ClassificationReport",
    "DEFAULT_REQUIRED_SYSTEMS",
    "DEFAULT_TAU",
    "EntityAnnotation",
    "EntityClassStats",
    "FeatureVector",
    "LinearSvmModel",
    "ManifestError",
    "NormalizationConfig",
    "RNG_ALGORITHM",
    "Rng",
    "RunOutcome",
    "RunReport",
    "STRATEGIES",
    "Segment",
    "SegmentPool",
    "SelectionResult",
    "UnknownStrategyError",
    "WerLabel",
    "cer_avg",
    "cer_histogram",
    "cer_pair",
    "cer_pairs",
    "class_stats",
    "evaluate",
    "filter_entity_segments",
    "levenshtein",
    "load_model",
    "manifest_digest",
    "normalize",
    "predict",
    "random_sample",
    "read_manifest",
    "render_text_tables",
    "run_eval_wer",
    "run_score_cer",
    "run_select",
    "run_stats",
    "run_train_wer",
    "save_model",
    "score_pool",
    "select_cer",
    "select_class_balanced_random",
    "select_class_balanced_top_confidence",
    "select_low_wer",
    "select_random",
    "select_top_confidence",
    "top_n",
    "train_svm",
    "wer",
    "write_manifest",
    "write_report",
    "__version__",
]
