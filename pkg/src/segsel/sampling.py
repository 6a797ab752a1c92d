"""Budgeted sampling primitives shared by every selection strategy.

Budgets are hours, interpreted as never-exceed: segments are atomic, so
the greedy fill takes segments in order, skips any that would overflow
the remaining budget, and never truncates. Randomness comes from a
PCG64 stream addressed by (seed, stream label); the shuffle is an
explicit Fisher-Yates over segment indices with unbiased rejection
sampling on the raw 64-bit outputs, so published test vectors hold on
every platform and release. The algorithm id is recorded in every
selection's stats.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Any, Callable, Iterable

import numpy as np

from segsel.manifest import Segment, SegmentPool, SelectionResult

RNG_ALGORITHM = "pcg64-fisher-yates-v1"

_RAW_BLOCK = 4096
_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class Budget:
    """A data budget in hours; seconds are derived."""

    hours: float

    def __post_init__(self) -> None:
        if not self.hours > 0:
            raise ValueError(f"budget must be positive, got {self.hours} hours")

    @property
    def seconds(self) -> float:
        return self.hours * 3600.0


def _label_entropy(label: str) -> list[int]:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 8], "big") for i in range(0, 32, 8)]


class Rng:
    """Deterministic random stream addressed by (seed, label).

    Streams with different labels are statistically independent, and a
    derived stream depends only on (seed, label), never on how much the
    parent has drawn.
    """

    def __init__(self, seed: int, label: str = "") -> None:
        if not (0 <= int(seed) <= _MAX_SEED):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = int(seed)
        self.label = label
        entropy = [self.seed, *_label_entropy(label)]
        self._bitgen = np.random.PCG64(np.random.SeedSequence(entropy))
        self._buffer: list[int] = []

    def derive(self, label: str) -> "Rng":
        """Child stream; same (seed, label) always yields the same stream."""
        child = f"{self.label}/{label}" if self.label else label
        return Rng(self.seed, child)

    def _next_raw(self) -> int:
        if not self._buffer:
            block = self._bitgen.random_raw(_RAW_BLOCK)
            self._buffer = [int(v) for v in block]
            self._buffer.reverse()
        return self._buffer.pop()

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection sampling."""
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        if n == 1:
            return 0
        limit = (2**64 // n) * n
        while True:
            raw = self._next_raw()
            if raw < limit:
                return raw % n

    def shuffled_indices(self, n: int) -> list[int]:
        """Fisher-Yates permutation of range(n)."""
        order = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.randbelow(i + 1)
            order[i], order[j] = order[j], order[i]
        return order


def derive_stream(rng: Rng, label: str) -> Rng:
    return rng.derive(label)


def _base_stats(rng: Rng | None) -> dict[str, Any]:
    stats: dict[str, Any] = {"rng_algorithm": RNG_ALGORITHM}
    if rng is not None:
        stats["stream_label"] = rng.label
    return stats


def _greedy_fill(
    segments: Iterable[Segment], budget_s: float
) -> tuple[list[str], float, int]:
    """Take segments in the given order, skipping any that would overflow.

    Returns (ids in selection order, realized seconds, skipped count).
    The candidate sum is compared directly against the budget, so the
    realized total can never exceed it.
    """
    ids: list[str] = []
    realized = 0.0
    skipped = 0
    for seg in segments:
        candidate = realized + seg.duration_s
        if candidate <= budget_s:
            ids.append(seg.id)
            realized = candidate
        else:
            skipped += 1
    return ids, realized, skipped


def random_sample(
    pool: SegmentPool,
    budget: Budget,
    rng: Rng,
    strategy: str = "random",
) -> SelectionResult:
    """Uniformly shuffle the pool, then greedily fill the budget.

    If the whole pool fits, it is returned in original order with the
    ``saturated`` flag set.
    """
    stats = _base_stats(rng)
    stats["pool_segments"] = len(pool)
    stats["pool_duration_s"] = pool.total_duration_s
    if pool.total_duration_s <= budget.seconds:
        stats["saturated"] = True
        return SelectionResult(
            strategy=strategy,
            selected_ids=tuple(seg.id for seg in pool),
            realized_duration_s=pool.total_duration_s,
            budget_s=budget.seconds,
            seed=rng.seed,
            stats=stats,
        )
    order = rng.shuffled_indices(len(pool))
    ids, realized, skipped = _greedy_fill(
        (pool[i] for i in order), budget.seconds
    )
    stats["saturated"] = False
    stats["skipped_for_budget"] = skipped
    return SelectionResult(
        strategy=strategy,
        selected_ids=tuple(ids),
        realized_duration_s=realized,
        budget_s=budget.seconds,
        seed=rng.seed,
        stats=stats,
    )


def top_n(
    pool: SegmentPool,
    budget: Budget,
    score: Callable[[Segment], float],
    strategy: str = "top-n",
    seed: int = 0,
) -> SelectionResult:
    """Greedy fill in (score descending, id ascending) order.

    Deterministic; ``seed`` is recorded for provenance only.
    """
    scored: list[tuple[float, str, Segment]] = []
    for seg in pool:
        value = float(score(seg))
        if not math.isfinite(value):
            raise ValueError(
                f"segment '{seg.id}': non-finite score {value!r} for top-n selection"
            )
        scored.append((value, seg.id, seg))
    scored.sort(key=lambda item: (-item[0], item[1]))
    stats = _base_stats(None)
    stats["pool_segments"] = len(pool)
    stats["pool_duration_s"] = pool.total_duration_s
    stats["uses_seed"] = False
    if pool.total_duration_s <= budget.seconds:
        stats["saturated"] = True
        return SelectionResult(
            strategy=strategy,
            selected_ids=tuple(seg.id for seg in pool),
            realized_duration_s=pool.total_duration_s,
            budget_s=budget.seconds,
            seed=seed,
            stats=stats,
        )
    ids, realized, skipped = _greedy_fill(
        (seg for _, _, seg in scored), budget.seconds
    )
    stats["saturated"] = False
    stats["skipped_for_budget"] = skipped
    return SelectionResult(
        strategy=strategy,
        selected_ids=tuple(ids),
        realized_duration_s=realized,
        budget_s=budget.seconds,
        seed=seed,
        stats=stats,
    )
