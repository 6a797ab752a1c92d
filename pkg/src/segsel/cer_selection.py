"""Inter-system CER agreement filtering and selection.

Each segment is scored with the mean pairwise CER across the required
ASR systems' hypotheses; segments scoring strictly below tau are
retained and then sampled to the budget. Segments missing a required
hypothesis are skipped and reported, never scored.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from segsel.editdist import cer_pairs
from segsel.manifest import Segment, SegmentPool, SelectionResult
from segsel.sampling import Budget, Rng, random_sample, top_n
from segsel.textnorm import DEFAULT_NORMALIZATION, NormalizationConfig

DEFAULT_TAU = 0.05
DEFAULT_REQUIRED_SYSTEMS = ("whisper", "zipformer", "parakeet")


@dataclass(frozen=True)
class CerFilterConfig:
    """Threshold and system set for agreement filtering."""

    tau: float = DEFAULT_TAU
    required_systems: tuple[str, ...] = DEFAULT_REQUIRED_SYSTEMS
    norm: NormalizationConfig = DEFAULT_NORMALIZATION

    def __post_init__(self) -> None:
        if not (0.0 < self.tau <= 1.0):
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        object.__setattr__(
            self, "required_systems", tuple(self.required_systems)
        )
        systems = self.required_systems
        if len(systems) < 2:
            raise ValueError(f"need at least 2 required systems, got {list(systems)}")
        if len(set(systems)) != len(systems):
            raise ValueError(f"required systems contain duplicates: {list(systems)}")
        if not all(isinstance(s, str) and s for s in systems):
            raise ValueError("required system names must be non-empty strings")

    def to_dict(self) -> dict[str, Any]:
        return {
            "tau": self.tau,
            "required_systems": list(self.required_systems),
            "norm": {
                "lowercase": self.norm.lowercase,
                "strip_punctuation": self.norm.strip_punctuation,
                "collapse_whitespace": self.norm.collapse_whitespace,
            },
        }


@dataclass(frozen=True)
class CerScore:
    """Per-segment pairwise CERs and their mean."""

    segment_id: str
    pair_cers: dict[tuple[str, str], float]
    average: float

    def __post_init__(self) -> None:
        if not self.pair_cers:
            raise ValueError(f"segment '{self.segment_id}': no system pairs")
        for pair, value in self.pair_cers.items():
            if not (0.0 <= value <= 1.0):
                raise ValueError(
                    f"segment '{self.segment_id}': pair {pair} CER {value} "
                    f"outside [0, 1]"
                )
        mean = math.fsum(self.pair_cers.values()) / len(self.pair_cers)
        if abs(mean - self.average) > 1e-12:
            raise ValueError(
                f"segment '{self.segment_id}': average {self.average} does not "
                f"match mean of pairs {mean}"
            )

    @classmethod
    def from_pairs(
        cls, segment_id: str, pair_cers: dict[tuple[str, str], float]
    ) -> "CerScore":
        average = math.fsum(pair_cers.values()) / len(pair_cers)
        return cls(segment_id=segment_id, pair_cers=dict(pair_cers), average=average)

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "id": self.segment_id,
            "pairs": [
                {"systems": list(pair), "cer": value}
                for pair, value in sorted(self.pair_cers.items())
            ],
            "average": self.average,
        }


@dataclass(frozen=True)
class CerScoring:
    """Outcome of scoring a pool: scores by id, skipped ids by id."""

    scores: tuple[CerScore, ...]
    skipped_ids: tuple[str, ...] = ()

    def averages(self) -> dict[str, float]:
        return {s.segment_id: s.average for s in self.scores}


def _score_segment(seg: Segment, cfg: CerFilterConfig) -> CerScore:
    hyps = {name: seg.hypotheses[name] for name in cfg.required_systems}
    return CerScore.from_pairs(seg.id, cer_pairs(hyps, cfg.norm))


def score_pool(
    pool: SegmentPool, cfg: CerFilterConfig = CerFilterConfig(), threads: int = 1
) -> CerScoring:
    """Score every segment carrying all required hypotheses.

    Segments missing any required system are listed as skipped. Scores
    and skipped ids both come back sorted by segment id, whatever the
    thread count.
    """
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    required = set(cfg.required_systems)
    scoreable = [seg for seg in pool if required <= seg.hypotheses.keys()]
    skipped = sorted(seg.id for seg in pool if not required <= seg.hypotheses.keys())
    if not scoreable:
        raise ValueError(
            f"no segments carry hypotheses for all required systems "
            f"{sorted(required)}"
        )
    if threads == 1:
        scores = [_score_segment(seg, cfg) for seg in scoreable]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool_exec:
            scores = list(
                pool_exec.map(lambda seg: _score_segment(seg, cfg), scoreable)
            )
    scores.sort(key=lambda s: s.segment_id)
    return CerScoring(scores=tuple(scores), skipped_ids=tuple(skipped))


def write_scores_jsonl(scoring: CerScoring, path: str | Path) -> None:
    """Audit export: one JSON object per scored segment, id order."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for score in scoring.scores:
            fh.write(json.dumps(score.to_json_obj(), separators=(",", ":")))
            fh.write("\n")


def retain_low_cer(
    scoring: CerScoring, pool: SegmentPool, cfg: CerFilterConfig
) -> SegmentPool:
    """Segments whose average CER is strictly below tau, pool order.

    Unscored (skipped) segments are never retained.
    """
    averages = scoring.averages()
    return pool.filter(
        lambda seg: seg.id in averages and averages[seg.id] < cfg.tau
    )


def select_cer(
    pool: SegmentPool,
    cfg: CerFilterConfig,
    budget_hours: float,
    seed: int,
    rank_lowest: bool = False,
    scoring: CerScoring | None = None,
) -> SelectionResult:
    """Retain low-CER segments, then sample them to the budget.

    Random sampling by default; ``rank_lowest`` instead fills with the
    lowest-average segments first (ties by id). Pass a precomputed
    ``scoring`` to avoid rescoring the pool.
    """
    strategy = "cer"
    if scoring is None:
        scoring = score_pool(pool, cfg)
    retained = retain_low_cer(scoring, pool, cfg)
    budget = Budget(hours=budget_hours)
    if len(retained) == 0:
        result = SelectionResult(
            strategy=strategy,
            selected_ids=(),
            realized_duration_s=0.0,
            budget_s=budget.seconds,
            seed=seed,
            stats={"warning": f"no segments with average CER below {cfg.tau}"},
        )
    elif rank_lowest:
        averages = scoring.averages()
        result = top_n(
            retained,
            budget,
            lambda seg: -averages[seg.id],
            strategy=strategy,
            seed=seed,
        )
        result.stats["rank"] = "lowest-cer"
    else:
        result = random_sample(retained, budget, Rng(seed, strategy), strategy=strategy)
        result.stats["rank"] = "random"
    result.stats["tau"] = cfg.tau
    result.stats["required_systems"] = list(cfg.required_systems)
    result.stats["scored_segments"] = len(scoring.scores)
    result.stats["skipped_missing_hypotheses"] = len(scoring.skipped_ids)
    result.stats["retained_segments"] = len(retained)
    result.stats["retained_duration_s"] = retained.total_duration_s
    return result


@dataclass(frozen=True)
class CerHistogram:
    """Duration mass per average-CER bin.

    Bins are [0, w), [w, 2w), ... with the final bin closed at 1.0, so
    an average of exactly 1.0 still lands in a bin.
    """

    bin_width: float
    edges: tuple[float, ...]
    duration_s: tuple[float, ...]
    total_duration_s: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "bin_width": self.bin_width,
            "edges": list(self.edges),
            "duration_s": list(self.duration_s),
            "total_duration_s": self.total_duration_s,
        }


def cer_histogram(
    scoring: CerScoring, pool: SegmentPool, bin_width: float = 0.05
) -> CerHistogram:
    """Histogram of scored duration by average CER."""
    if not (0.0 < bin_width <= 1.0):
        raise ValueError(f"bin_width must be in (0, 1], got {bin_width}")
    # Number of bins covering [0, 1] with the last one absorbing 1.0;
    # the epsilon keeps widths like 0.05 from adding a phantom bin.
    nbins = max(1, math.ceil(1.0 / bin_width - 1e-9))
    sums = [[] for _ in range(nbins)]
    by_id = pool.by_id
    for score in scoring.scores:
        seg = by_id.get(score.segment_id)
        if seg is None:
            raise ValueError(
                f"score for unknown segment id '{score.segment_id}'"
            )
        # Division alone can land a value exactly on an edge in the
        # wrong bin by one ulp; settle membership against the edges.
        idx = int(score.average / bin_width)
        if score.average >= (idx + 1) * bin_width:
            idx += 1
        elif idx > 0 and score.average < idx * bin_width:
            idx -= 1
        sums[min(idx, nbins - 1)].append(seg.duration_s)
    durations = tuple(math.fsum(bin_list) for bin_list in sums)
    edges = tuple(i * bin_width for i in range(nbins)) + (1.0,)
    return CerHistogram(
        bin_width=bin_width,
        edges=edges,
        duration_s=durations,
        total_duration_s=math.fsum(durations),
    )
