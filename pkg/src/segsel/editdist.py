"""Edit-distance kernels and the word/character error rates built on them.

All rates share one Levenshtein core with unit costs (insert, delete,
substitute; no transpositions). Two execution paths exist purely for
speed; both are exact and bit-identical to the full dynamic program:

* common prefix/suffix trimming followed by a two-row DP for small
  inputs, and
* a numpy row scan for large ones (the insertion dependency becomes a
  prefix minimum over ``cost - index``).

CER between two hypotheses is symmetric by construction: the distance
is normalized by the longer of the two normalized strings, since
neither hypothesis is privileged as a reference. WER keeps the usual
reference-count denominator and may exceed 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Hashable, Mapping, Sequence

import numpy as np

from segsel.textnorm import DEFAULT_NORMALIZATION, NormalizationConfig, chars, normalize, words

# Below this many DP cells the plain two-row loop beats numpy call overhead.
_NUMPY_MIN_CELLS = 1024


class InsufficientHypothesesError(ValueError):
    """Fewer than two hypotheses were available for pairwise CER."""


def levenshtein(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Minimal number of insertions, deletions, and substitutions."""
    lo = 0
    hi_a, hi_b = len(a), len(b)
    # Shared prefix/suffix never contributes to the distance.
    while lo < hi_a and lo < hi_b and a[lo] == b[lo]:
        lo += 1
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    a = a[lo:hi_a]
    b = b[lo:hi_b]
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) * len(b) >= _NUMPY_MIN_CELLS:
        return _levenshtein_numpy(a, b)
    return _levenshtein_rows(a, b)


def _levenshtein_rows(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    if len(b) > len(a):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        cur = [i]
        append = cur.append
        for j, tok_b in enumerate(b, start=1):
            up = prev[j]
            if tok_a == tok_b:
                best = prev[j - 1]
            else:
                left = cur[j - 1]
                best = prev[j - 1]
                if up < best:
                    best = up
                if left < best:
                    best = left
                best += 1
            append(best)
        prev = cur
    return prev[-1]


def _levenshtein_numpy(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    ids: dict[Hashable, int] = {}

    def encode(seq: Sequence[Hashable]) -> np.ndarray:
        out = np.empty(len(seq), dtype=np.int64)
        for i, tok in enumerate(seq):
            out[i] = ids.setdefault(tok, len(ids))
        return out

    aa, bb = encode(a), encode(b)
    n = len(bb)
    steps = np.arange(n + 1, dtype=np.int64)
    prev = steps.copy()
    cur = np.empty(n + 1, dtype=np.int64)
    for i in range(1, len(aa) + 1):
        # Substitution and deletion are elementwise; the insertion chain
        # cur[j] = min(cand[j], cur[j-1] + 1) is a prefix minimum of
        # cand[k] - k, shifted back by +j.
        np.minimum(prev[:-1] + (bb != aa[i - 1]), prev[1:] + 1, out=cur[1:])
        cur[0] = i
        np.subtract(cur, steps, out=cur)
        np.minimum.accumulate(cur, out=cur)
        np.add(cur, steps, out=cur)
        prev, cur = cur, prev
    return int(prev[-1])


@dataclass(frozen=True)
class WerCounts:
    """Word-level distance with the bookkeeping behind a WER value."""

    distance: int
    reference_words: int
    hypothesis_words: int
    degenerate: bool

    @property
    def value(self) -> float:
        return self.distance / max(1, self.reference_words)


def wer_counts(
    reference: str,
    hypothesis: str,
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> WerCounts:
    """Word error rate with counts; ``degenerate`` marks an empty
    normalized reference scored against a non-empty hypothesis."""
    ref_words = words(normalize(reference, cfg))
    hyp_words = words(normalize(hypothesis, cfg))
    return WerCounts(
        distance=levenshtein(ref_words, hyp_words),
        reference_words=len(ref_words),
        hypothesis_words=len(hyp_words),
        degenerate=not ref_words and bool(hyp_words),
    )


def wer(
    reference: str,
    hypothesis: str,
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> float:
    """Word error rate: word distance over max(1, reference word count)."""
    return wer_counts(reference, hypothesis, cfg).value


def cer_pair(
    a: str,
    b: str,
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> float:
    """Symmetric character error rate between two hypotheses, in [0, 1].

    Normalized by the longer of the two normalized strings; whitespace
    is excluded from the character sequences.
    """
    ca = chars(normalize(a, cfg))
    cb = chars(normalize(b, cfg))
    return levenshtein(ca, cb) / max(1, len(ca), len(cb))


def cer_pairs(
    hypotheses: Mapping[str, str],
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> dict[tuple[str, str], float]:
    """Pairwise CER for every unordered system pair, keyed by sorted names."""
    if len(hypotheses) < 2:
        raise InsufficientHypothesesError(
            f"need at least 2 hypotheses for pairwise CER, got "
            f"{sorted(hypotheses)}"
        )
    return {
        (sys_a, sys_b): cer_pair(hypotheses[sys_a], hypotheses[sys_b], cfg)
        for sys_a, sys_b in combinations(sorted(hypotheses), 2)
    }


def cer_avg(
    hypotheses: Mapping[str, str],
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> float:
    """Mean pairwise CER across all unordered system pairs."""
    pairs = cer_pairs(hypotheses, cfg)
    return math.fsum(pairs.values()) / len(pairs)
