"""Entity-driven selection strategies.

All four strategies operate on the subset of segments that carry at
least one entity annotation. Class shares are duration-weighted, and a
segment containing several classes counts toward each of them; the
class-balanced strategies therefore deduplicate across classes, and a
segment can be selected only once. Segment confidence is the maximum
entity confidence by default, the mean behind a flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

from segsel.manifest import Segment, SegmentPool, SelectionResult
from segsel.sampling import RNG_ALGORITHM, Budget, Rng, random_sample, top_n

LOW_CONFIDENCE_MAX = 0.5
HIGH_CONFIDENCE_MIN = 0.8

CONFIDENCE_AGGREGATES = ("max", "mean")


def confidence_stratum(confidence: float) -> str:
    """Reporting stratum for a confidence value: low, mid, or high."""
    if confidence < LOW_CONFIDENCE_MAX:
        return "low"
    if confidence <= HIGH_CONFIDENCE_MIN:
        return "mid"
    return "high"


def _aggregate_fn(aggregate: str) -> Callable[[list[float]], float]:
    if aggregate == "max":
        return max
    if aggregate == "mean":
        return lambda values: math.fsum(values) / len(values)
    raise ValueError(
        f"unknown confidence aggregate '{aggregate}', expected one of "
        f"{CONFIDENCE_AGGREGATES}"
    )


@dataclass(frozen=True)
class SegmentNerView:
    """Entity-level summary of one annotated segment."""

    segment_id: str
    duration_s: float
    classes: tuple[str, ...]
    class_confidence: dict[str, float]
    confidence: float


def ner_view(segment: Segment, aggregate: str = "max") -> SegmentNerView:
    """Summarize a segment's entities; the segment must carry some."""
    agg = _aggregate_fn(aggregate)
    if not segment.entities:
        raise ValueError(f"segment '{segment.id}' carries no entities")
    per_class: dict[str, list[float]] = {}
    for ent in segment.entities:
        per_class.setdefault(ent.entity_class, []).append(ent.confidence)
    return SegmentNerView(
        segment_id=segment.id,
        duration_s=segment.duration_s,
        classes=tuple(sorted(per_class)),
        class_confidence={c: agg(v) for c, v in per_class.items()},
        confidence=agg([e.confidence for e in segment.entities]),
    )


@dataclass(frozen=True)
class ClassStat:
    entity_class: str
    duration_s: float
    segment_count: int
    share: float
    stratum_duration_s: dict[str, float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "entity_class": self.entity_class,
            "duration_s": self.duration_s,
            "segment_count": self.segment_count,
            "share": self.share,
            "stratum_duration_s": dict(self.stratum_duration_s),
        }


@dataclass(frozen=True)
class EntityClassStats:
    """Per-class duration shares, in selection processing order.

    Classes are ordered by share descending, ties by name ascending;
    that order is also the one the class-balanced strategies use.
    """

    classes: tuple[ClassStat, ...]

    def __post_init__(self) -> None:
        total_share = math.fsum(c.share for c in self.classes)
        if self.classes and abs(total_share - 1.0) > 1e-9:
            raise ValueError(f"class shares sum to {total_share}, expected 1")
        for stat in self.classes:
            strata = math.fsum(stat.stratum_duration_s.values())
            # 1e-6 s is the conservation tolerance for every reported
            # duration breakdown against its parent total.
            if abs(strata - stat.duration_s) > 1e-6:
                raise ValueError(
                    f"class '{stat.entity_class}': stratum durations sum to "
                    f"{strata}, expected {stat.duration_s}"
                )

    def by_class(self) -> dict[str, ClassStat]:
        return {c.entity_class: c for c in self.classes}

    def to_dict(self) -> dict[str, Any]:
        return {"classes": [c.to_dict() for c in self.classes]}


def filter_entity_segments(pool: SegmentPool) -> SegmentPool:
    """Segments carrying at least one entity, in pool order."""
    return pool.filter(lambda seg: seg.has_entities())


def class_stats(pool: SegmentPool, aggregate: str = "max") -> EntityClassStats:
    """Duration-weighted class shares over the entity-carrying segments.

    A segment containing several classes counts toward each, so the
    shares are normalized by the sum over classes, not by the pool
    duration.
    """
    views = [ner_view(seg, aggregate) for seg in filter_entity_segments(pool)]
    if not views:
        raise ValueError("no entity-carrying segments to compute class stats over")
    # Durations are bucketed and summed with fsum, and each class total
    # is the fsum of its own stratum sums, so the breakdown stays
    # conserved at any pool size.
    count: dict[str, int] = {}
    strata: dict[str, dict[str, list[float]]] = {}
    for view in views:
        for cls in view.classes:
            count[cls] = count.get(cls, 0) + 1
            per = strata.setdefault(cls, {"low": [], "mid": [], "high": []})
            per[confidence_stratum(view.class_confidence[cls])].append(
                view.duration_s
            )
    stratum_sums = {
        cls: {name: math.fsum(values) for name, values in per.items()}
        for cls, per in strata.items()
    }
    duration = {
        cls: math.fsum(sums.values()) for cls, sums in stratum_sums.items()
    }
    total = math.fsum(duration.values())
    stats = [
        ClassStat(
            entity_class=cls,
            duration_s=duration[cls],
            segment_count=count[cls],
            share=duration[cls] / total,
            stratum_duration_s=stratum_sums[cls],
        )
        for cls in duration
    ]
    stats.sort(key=lambda s: (-s.share, s.entity_class))
    return EntityClassStats(classes=tuple(stats))


def _empty_result(strategy: str, budget: Budget, seed: int) -> SelectionResult:
    return SelectionResult(
        strategy=strategy,
        selected_ids=(),
        realized_duration_s=0.0,
        budget_s=budget.seconds,
        seed=seed,
        stats={"warning": "no entity-carrying segments in pool"},
    )


def select_random(
    pool: SegmentPool, budget_hours: float, seed: int
) -> SelectionResult:
    """Uniform random sample of the entity-carrying segments."""
    strategy = "ner-random"
    entity_pool = filter_entity_segments(pool)
    budget = Budget(hours=budget_hours)
    if len(entity_pool) == 0:
        return _empty_result(strategy, budget, seed)
    result = random_sample(entity_pool, budget, Rng(seed, strategy), strategy=strategy)
    result.stats["input_segments"] = len(pool)
    return result


def select_top_confidence(
    pool: SegmentPool,
    budget_hours: float,
    seed: int = 0,
    aggregate: str = "max",
) -> SelectionResult:
    """Greedy fill in confidence-descending order (ties by id).

    Deterministic; the seed is recorded for provenance only.
    """
    strategy = "ner-top-conf"
    entity_pool = filter_entity_segments(pool)
    budget = Budget(hours=budget_hours)
    if len(entity_pool) == 0:
        return _empty_result(strategy, budget, seed)
    confidence = {
        seg.id: ner_view(seg, aggregate).confidence for seg in entity_pool
    }
    result = top_n(
        entity_pool,
        budget,
        lambda seg: confidence[seg.id],
        strategy=strategy,
        seed=seed,
    )
    result.stats["confidence_aggregate"] = aggregate
    result.stats["input_segments"] = len(pool)
    return result


def _class_balanced(
    pool: SegmentPool,
    budget_hours: float,
    seed: int,
    strategy: str,
    select_in_class: Callable[[SegmentPool, Budget, str], SelectionResult],
) -> SelectionResult:
    """Shared per-class loop of the two class-balanced strategies.

    Classes get budgets N_c = P_c * N and are processed in share-
    descending order; segments already selected under an earlier class
    are excluded from later class pools. Shortfall in a class is
    reported, never redistributed.
    """
    entity_pool = filter_entity_segments(pool)
    budget = Budget(hours=budget_hours)
    if len(entity_pool) == 0:
        return _empty_result(strategy, budget, seed)
    stats = class_stats(entity_pool)

    selected: list[str] = []
    taken: set[str] = set()
    per_class_rows: list[dict[str, Any]] = []
    for stat in stats.classes:
        cls = stat.entity_class
        candidates = entity_pool.filter(
            lambda seg: cls in seg.entity_classes() and seg.id not in taken
        )
        class_budget = Budget(hours=stat.share * budget_hours)
        row: dict[str, Any] = {
            "entity_class": cls,
            "share": stat.share,
            "requested_s": class_budget.seconds,
            "candidates": len(candidates),
        }
        if len(candidates) == 0:
            row.update(selected=0, realized_s=0.0, shortfall_s=class_budget.seconds)
            per_class_rows.append(row)
            continue
        result = select_in_class(candidates, class_budget, cls)
        for seg_id in result.selected_ids:
            selected.append(seg_id)
            taken.add(seg_id)
        row.update(
            selected=len(result.selected_ids),
            realized_s=result.realized_duration_s,
            shortfall_s=max(0.0, class_budget.seconds - result.realized_duration_s),
        )
        per_class_rows.append(row)

    durations = entity_pool.by_id
    realized = math.fsum(durations[i].duration_s for i in selected)
    trimmed = 0
    # Per-class fills each respect their own budget and the shares sum
    # to 1, so this trim only ever fires on float round-off.
    while realized > budget.seconds and selected:
        dropped = selected.pop()
        taken.discard(dropped)
        realized = math.fsum(durations[i].duration_s for i in selected)
        trimmed += 1

    return SelectionResult(
        strategy=strategy,
        selected_ids=tuple(selected),
        realized_duration_s=realized,
        budget_s=budget.seconds,
        seed=seed,
        stats={
            "per_class": per_class_rows,
            "trimmed_for_budget": trimmed,
            "input_segments": len(pool),
            "entity_segments": len(entity_pool),
        },
    )


def select_class_balanced_random(
    pool: SegmentPool, budget_hours: float, seed: int
) -> SelectionResult:
    """Random sampling within each class, budgets proportional to P_c."""
    strategy = "ner-class-random"
    root = Rng(seed, strategy)

    def in_class(candidates: SegmentPool, class_budget: Budget, cls: str):
        return random_sample(candidates, class_budget, root.derive(cls))

    result = _class_balanced(pool, budget_hours, seed, strategy, in_class)
    if "per_class" in result.stats:
        result.stats["rng_algorithm"] = RNG_ALGORITHM
        result.stats["stream_label"] = root.label
    return result


def select_class_balanced_top_confidence(
    pool: SegmentPool,
    budget_hours: float,
    seed: int = 0,
    aggregate: str = "max",
) -> SelectionResult:
    """Top-confidence greedy fill within each class, budgets P_c * N.

    Ranking uses the per-class confidence of each segment, so a segment
    weak in one class can still rank high in another. Deterministic.
    """
    strategy = "ner-class-top-conf"

    def in_class(candidates: SegmentPool, class_budget: Budget, cls: str):
        confidence = {
            seg.id: ner_view(seg, aggregate).class_confidence[cls]
            for seg in candidates
        }
        return top_n(
            candidates, class_budget, lambda seg: confidence[seg.id], strategy=strategy
        )

    result = _class_balanced(pool, budget_hours, seed, strategy, in_class)
    if "per_class" in result.stats:
        result.stats["confidence_aggregate"] = aggregate
    return result
