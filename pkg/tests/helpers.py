"""Shared builders for test fixtures."""

from __future__ import annotations

from segsel.manifest import EntityAnnotation, FeatureVector, Segment, SegmentPool


def make_segment(
    seg_id: str,
    duration_s: float = 2.0,
    hypotheses: dict[str, str] | None = None,
    **kwargs,
) -> Segment:
    if hypotheses is None:
        hypotheses = {
            "whisper": "hello world",
            "zipformer": "hello world",
            "parakeet": "hello world",
        }
    return Segment(
        id=seg_id,
        conversation_id=kwargs.pop("conversation_id", "conv-1"),
        start_s=kwargs.pop("start_s", 0.0),
        duration_s=duration_s,
        hypotheses=hypotheses,
        **kwargs,
    )


def make_pool(segments, annotation_system: str | None = None) -> SegmentPool:
    return SegmentPool(segments=tuple(segments), annotation_system=annotation_system)


def uniform_pool(n: int, duration_s: float = 1.0) -> SegmentPool:
    return make_pool(
        make_segment(f"seg-{i:04d}", duration_s=duration_s) for i in range(n)
    )


def entity(
    entity_class: str = "PER",
    confidence: float = 0.9,
    char_start: int = 0,
    char_end: int = 5,
) -> EntityAnnotation:
    return EntityAnnotation(
        entity_class=entity_class,
        char_start=char_start,
        char_end=char_end,
        confidence=confidence,
    )


def features(*values: float, acoustic_dim: int | None = None) -> FeatureVector:
    if acoustic_dim is None:
        acoustic_dim = max(1, len(values) // 2)
    return FeatureVector(
        acoustic_dim=acoustic_dim,
        text_dim=len(values) - acoustic_dim,
        values=tuple(values),
    )


def separable_pool(
    n: int,
    seed: int = 0,
    margin: float = 0.5,
    id_prefix: str = "s",
    duration_s: float = 3.0,
) -> SegmentPool:
    """Pool labeled by sign of the first feature coordinate.

    Low-WER points have x0 in [margin, 4*margin], high-WER points the
    mirror image; the second coordinate is noise.
    """
    import numpy as np

    rng = np.random.default_rng(seed)
    segments = []
    for i in range(n):
        low = i % 2 == 0
        x0 = rng.uniform(margin, 4 * margin)
        if not low:
            x0 = -x0
        segments.append(
            make_segment(
                f"{id_prefix}{i:05d}",
                duration_s=duration_s,
                reference="ref words",
                features=FeatureVector(
                    acoustic_dim=1, text_dim=1, values=(x0, rng.normal())
                ),
                wer_vs_reference=0.2 if low else 0.8,
            )
        )
    return make_pool(segments)
