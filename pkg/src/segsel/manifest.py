"""Corpus data model and JSONL manifest I/O.

A manifest is one JSON object per line, one segment per object. An
optional first line ``{"header": true, ...}`` carries manifest-level
settings, most importantly ``annotation_system``: the name of the ASR
system whose hypothesis text the entity character spans index into.
Optional segment fields are omitted entirely when absent, never written
as null. Segment order in the file is the order of the pool.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Iterator

import json

SCHEMA_VERSION = 1

_SEGMENT_FIELDS = (
    "id",
    "conversation_id",
    "start_s",
    "duration_s",
    "hypotheses",
    "reference",
    "entities",
    "features",
    "wer_vs_reference",
)


class ManifestError(ValueError):
    """Malformed manifest content: bad line, bad field, or duplicate id."""


def _require_number(value: Any, what: str) -> float:
    # bool is an int subclass; never a valid duration/offset/score.
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ManifestError(f"{what} must be a number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        raise ManifestError(f"{what} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class EntityAnnotation:
    """One detected named entity on a segment's designated hypothesis."""

    entity_class: str
    char_start: int
    char_end: int
    confidence: float

    def __post_init__(self) -> None:
        if not self.entity_class:
            raise ManifestError("entity_class must be a non-empty string")
        if not (0 <= self.char_start < self.char_end):
            raise ManifestError(
                f"entity span must satisfy 0 <= char_start < char_end, "
                f"got [{self.char_start}, {self.char_end})"
            )
        if not (0.0 <= self.confidence <= 1.0):
            raise ManifestError(
                f"entity confidence must be in [0, 1], got {self.confidence}"
            )


@dataclass(frozen=True)
class FeatureVector:
    """Concatenated acoustic and text embedding, stored as one flat vector."""

    acoustic_dim: int
    text_dim: int
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.acoustic_dim <= 0 or self.text_dim <= 0:
            raise ManifestError("feature dims must be positive integers")
        if len(self.values) != self.acoustic_dim + self.text_dim:
            raise ManifestError(
                f"feature vector has {len(self.values)} values, expected "
                f"acoustic_dim + text_dim = {self.acoustic_dim + self.text_dim}"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise ManifestError("feature values must all be finite")

    @property
    def dim(self) -> int:
        return self.acoustic_dim + self.text_dim


@dataclass(frozen=True)
class Segment:
    """One VAD span of audio with its per-system hypothesis transcripts."""

    id: str
    conversation_id: str
    start_s: float
    duration_s: float
    hypotheses: dict[str, str]
    reference: str | None = None
    entities: tuple[EntityAnnotation, ...] | None = None
    features: FeatureVector | None = None
    wer_vs_reference: float | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ManifestError("segment id must be a non-empty string")
        if self.start_s < 0:
            raise ManifestError(f"segment '{self.id}': start_s must be >= 0")
        if not self.duration_s > 0:
            raise ManifestError(f"segment '{self.id}': duration_s must be > 0")
        if self.entities is not None:
            object.__setattr__(self, "entities", tuple(self.entities))
        if self.wer_vs_reference is not None:
            if self.reference is None:
                raise ManifestError(
                    f"segment '{self.id}': wer_vs_reference requires reference"
                )
            if self.wer_vs_reference < 0:
                raise ManifestError(
                    f"segment '{self.id}': wer_vs_reference must be >= 0"
                )

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s

    def has_entities(self) -> bool:
        return bool(self.entities)

    def entity_classes(self) -> set[str]:
        return {e.entity_class for e in self.entities or ()}


@dataclass(frozen=True)
class SegmentPool:
    """Ordered, deduplicated collection of segments.

    Immutable after construction and safe to share read-only across
    threads. ``annotation_system`` names the hypothesis that entity
    spans index into; it must be set whenever any member carries
    entities.
    """

    segments: tuple[Segment, ...]
    annotation_system: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        seen: set[str] = set()
        for seg in self.segments:
            if seg.id in seen:
                raise ManifestError(f"duplicate segment id '{seg.id}'")
            seen.add(seg.id)
            if seg.entities:
                self._check_entity_spans(seg)

    def _check_entity_spans(self, seg: Segment) -> None:
        if self.annotation_system is None:
            raise ManifestError(
                f"segment '{seg.id}' carries entities but the pool has no "
                f"annotation_system; set it in the manifest header"
            )
        text = seg.hypotheses.get(self.annotation_system)
        if text is None:
            raise ManifestError(
                f"segment '{seg.id}' carries entities but has no "
                f"'{self.annotation_system}' hypothesis to annotate"
            )
        for ent in seg.entities or ():
            if ent.char_end > len(text):
                raise ManifestError(
                    f"segment '{seg.id}': entity span [{ent.char_start}, "
                    f"{ent.char_end}) exceeds '{self.annotation_system}' "
                    f"hypothesis length {len(text)}"
                )

    @cached_property
    def total_duration_s(self) -> float:
        return math.fsum(seg.duration_s for seg in self.segments)

    @cached_property
    def by_id(self) -> dict[str, Segment]:
        return {seg.id: seg for seg in self.segments}

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __getitem__(self, index: int) -> Segment:
        return self.segments[index]

    def subset(self, ids: Iterable[str]) -> SegmentPool:
        """Member segments with the given ids, in pool order."""
        wanted = set(ids)
        missing = wanted - self.by_id.keys()
        if missing:
            raise ManifestError(
                f"unknown segment id '{sorted(missing)[0]}' in subset request"
            )
        return SegmentPool(
            segments=tuple(s for s in self.segments if s.id in wanted),
            annotation_system=self.annotation_system,
        )

    def filter(self, predicate) -> SegmentPool:
        return SegmentPool(
            segments=tuple(s for s in self.segments if predicate(s)),
            annotation_system=self.annotation_system,
        )


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one budgeted selection run."""

    strategy: str
    selected_ids: tuple[str, ...]
    realized_duration_s: float
    budget_s: float
    seed: int
    stats: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "selected_ids", tuple(self.selected_ids))
        if len(set(self.selected_ids)) != len(self.selected_ids):
            raise ValueError("selection contains duplicate segment ids")
        if self.realized_duration_s > self.budget_s:
            raise ValueError(
                f"realized duration {self.realized_duration_s} s exceeds "
                f"budget {self.budget_s} s"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy,
            "selected_ids": list(self.selected_ids),
            "realized_duration_s": self.realized_duration_s,
            "budget_s": self.budget_s,
            "seed": self.seed,
            "stats": self.stats,
        }


def _parse_entity(obj: Any, line_no: int, index: int) -> EntityAnnotation:
    where = f"line {line_no}: field 'entities[{index}]'"
    if not isinstance(obj, dict):
        raise ManifestError(f"{where}: expected an object")
    unknown = set(obj) - {"entity_class", "char_start", "char_end", "confidence"}
    if unknown:
        raise ManifestError(f"{where}: unexpected key '{sorted(unknown)[0]}'")
    try:
        cls = obj["entity_class"]
        start = obj["char_start"]
        end = obj["char_end"]
        conf = obj["confidence"]
    except KeyError as exc:
        raise ManifestError(f"{where}: missing key {exc}") from None
    if not isinstance(cls, str):
        raise ManifestError(f"{where}: entity_class must be a string")
    for name, v in (("char_start", start), ("char_end", end)):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ManifestError(f"{where}: {name} must be an integer")
    try:
        return EntityAnnotation(cls, start, end, _require_number(conf, "confidence"))
    except ManifestError as exc:
        raise ManifestError(f"{where}: {exc}") from None


def _parse_features(obj: Any, line_no: int) -> FeatureVector:
    where = f"line {line_no}: field 'features'"
    if not isinstance(obj, dict):
        raise ManifestError(f"{where}: expected an object")
    unknown = set(obj) - {"acoustic_dim", "text_dim", "values"}
    if unknown:
        raise ManifestError(f"{where}: unexpected key '{sorted(unknown)[0]}'")
    try:
        a_dim, t_dim, values = obj["acoustic_dim"], obj["text_dim"], obj["values"]
    except KeyError as exc:
        raise ManifestError(f"{where}: missing key {exc}") from None
    for name, v in (("acoustic_dim", a_dim), ("text_dim", t_dim)):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ManifestError(f"{where}: {name} must be an integer")
    if not isinstance(values, list):
        raise ManifestError(f"{where}: values must be an array")
    try:
        vals = tuple(_require_number(v, "feature value") for v in values)
        return FeatureVector(a_dim, t_dim, vals)
    except ManifestError as exc:
        raise ManifestError(f"{where}: {exc}") from None


def _parse_segment(obj: dict[str, Any], line_no: int) -> Segment:
    unknown = set(obj) - set(_SEGMENT_FIELDS)
    if unknown:
        raise ManifestError(
            f"line {line_no}: unexpected field '{sorted(unknown)[0]}'"
        )
    for name in ("id", "conversation_id", "start_s", "duration_s", "hypotheses"):
        if name not in obj:
            raise ManifestError(f"line {line_no}: missing field '{name}'")
    for name in ("id", "conversation_id"):
        if not isinstance(obj[name], str):
            raise ManifestError(f"line {line_no}: field '{name}' must be a string")
    hyps = obj["hypotheses"]
    if not isinstance(hyps, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in hyps.items()
    ):
        raise ManifestError(
            f"line {line_no}: field 'hypotheses' must map system names to strings"
        )
    reference = obj.get("reference")
    if reference is not None and not isinstance(reference, str):
        raise ManifestError(f"line {line_no}: field 'reference' must be a string")

    entities = None
    if "entities" in obj:
        raw = obj["entities"]
        if not isinstance(raw, list):
            raise ManifestError(f"line {line_no}: field 'entities' must be an array")
        entities = tuple(_parse_entity(e, line_no, i) for i, e in enumerate(raw))

    features = _parse_features(obj["features"], line_no) if "features" in obj else None

    try:
        wer = None
        if "wer_vs_reference" in obj:
            wer = _require_number(obj["wer_vs_reference"], "wer_vs_reference")
        return Segment(
            id=obj["id"],
            conversation_id=obj["conversation_id"],
            start_s=_require_number(obj["start_s"], "start_s"),
            duration_s=_require_number(obj["duration_s"], "duration_s"),
            hypotheses=dict(hyps),
            reference=reference,
            entities=entities,
            features=features,
            wer_vs_reference=wer,
        )
    except ManifestError as exc:
        raise ManifestError(f"line {line_no}: {exc}") from None


def _parse_header(obj: dict[str, Any], line_no: int) -> str | None:
    unknown = set(obj) - {"header", "annotation_system", "schema_version"}
    if unknown:
        raise ManifestError(
            f"line {line_no}: unexpected header key '{sorted(unknown)[0]}'"
        )
    version = obj.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ManifestError(
            f"line {line_no}: unsupported schema_version {version!r}, "
            f"this toolkit reads version {SCHEMA_VERSION}"
        )
    system = obj.get("annotation_system")
    if system is not None and not isinstance(system, str):
        raise ManifestError(f"line {line_no}: annotation_system must be a string")
    return system


def read_manifest(path: str | Path) -> SegmentPool:
    """Read a JSONL manifest into a pool, preserving file order.

    Raises ManifestError naming the line number and field for malformed
    records, and naming the id for duplicates.
    """
    path = Path(path)
    segments: list[Segment] = []
    seen: set[str] = set()
    annotation_system: str | None = None
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                raise ManifestError(f"line {line_no}: empty line")
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"line {line_no}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise ManifestError(f"line {line_no}: expected a JSON object")
            if obj.get("header") is True:
                if line_no != 1:
                    raise ManifestError(
                        f"line {line_no}: header allowed only on the first line"
                    )
                annotation_system = _parse_header(obj, line_no)
                continue
            seg = _parse_segment(obj, line_no)
            if seg.id in seen:
                raise ManifestError(
                    f"line {line_no}: duplicate segment id '{seg.id}'"
                )
            seen.add(seg.id)
            segments.append(seg)
    return SegmentPool(segments=tuple(segments), annotation_system=annotation_system)


def _segment_to_obj(seg: Segment) -> dict[str, Any]:
    obj: dict[str, Any] = {
        "id": seg.id,
        "conversation_id": seg.conversation_id,
        "start_s": seg.start_s,
        "duration_s": seg.duration_s,
        "hypotheses": seg.hypotheses,
    }
    if seg.reference is not None:
        obj["reference"] = seg.reference
    if seg.entities is not None:
        obj["entities"] = [
            {
                "entity_class": e.entity_class,
                "char_start": e.char_start,
                "char_end": e.char_end,
                "confidence": e.confidence,
            }
            for e in seg.entities
        ]
    if seg.features is not None:
        obj["features"] = {
            "acoustic_dim": seg.features.acoustic_dim,
            "text_dim": seg.features.text_dim,
            "values": list(seg.features.values),
        }
    if seg.wer_vs_reference is not None:
        obj["wer_vs_reference"] = seg.wer_vs_reference
    return obj


def write_manifest(pool: SegmentPool, path: str | Path) -> None:
    """Write a pool as a JSONL manifest; read_manifest round-trips it."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if pool.annotation_system is not None:
            header = {
                "header": True,
                "schema_version": SCHEMA_VERSION,
                "annotation_system": pool.annotation_system,
            }
            fh.write(json.dumps(header, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")
        for seg in pool:
            fh.write(
                json.dumps(
                    _segment_to_obj(seg), ensure_ascii=False, separators=(",", ":")
                )
            )
            fh.write("\n")
