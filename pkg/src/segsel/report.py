"""Run reports: machine-readable JSON plus aligned plain-text tables.

JSON is canonical and text rendering is presentation only. A report
carries the toolkit version, a digest of the input manifest, and a
config echo sufficient to re-run the selection identically. Wall-clock
timing is kept on the in-memory report but never written: report files
for the same seed and inputs must be byte-identical across runs.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from segsel import __version__
from segsel.cer_selection import CerHistogram
from segsel.manifest import SegmentPool, SelectionResult
from segsel.ner_selection import (
    EntityClassStats,
    class_stats,
    confidence_stratum,
    filter_entity_segments,
    ner_view,
)
from segsel.wer_classifier import ClassificationReport

STRATA = ("low", "mid", "high")

DURATION_TOLERANCE_S = 1e-6


def manifest_digest(path: str | Path) -> str:
    """Content digest of a manifest file, prefixed with the algorithm."""
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class SelectionDistribution:
    """Entity-class/confidence breakdown of one selection (one bar)."""

    strategy: str
    selected_segments: int
    realized_duration_s: float
    entity_duration_s: float
    class_stats: EntityClassStats
    stratum_duration_s: dict[str, float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy,
            "selected_segments": self.selected_segments,
            "realized_duration_s": self.realized_duration_s,
            "entity_duration_s": self.entity_duration_s,
            "classes": self.class_stats.to_dict()["classes"],
            "stratum_duration_s": dict(self.stratum_duration_s),
        }


@dataclass(frozen=True)
class DistributionReport:
    """Per-selection breakdowns next to the reference pool stats."""

    pool_stats: EntityClassStats
    selections: tuple[SelectionDistribution, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "pool_classes": self.pool_stats.to_dict()["classes"],
            "selections": [s.to_dict() for s in self.selections],
        }


def _distribution_of(
    pool: SegmentPool, selection: SelectionResult, aggregate: str
) -> SelectionDistribution:
    subset = pool.subset(selection.selected_ids)
    subset_total = subset.total_duration_s
    # A selection's realized duration accumulates term by term during
    # the fill, so it can drift from the exact fsum by up to one ulp of
    # the total per segment; widen the check accordingly.
    slack = DURATION_TOLERANCE_S + len(subset) * math.ulp(max(subset_total, 1.0))
    if abs(subset_total - selection.realized_duration_s) > slack:
        raise ValueError(
            f"selection '{selection.strategy}' reports "
            f"{selection.realized_duration_s} s realized but its segments "
            f"sum to {subset_total} s"
        )
    entity_subset = filter_entity_segments(subset)
    buckets: dict[str, list[float]] = {name: [] for name in STRATA}
    for seg in entity_subset:
        view = ner_view(seg, aggregate)
        buckets[confidence_stratum(view.confidence)].append(seg.duration_s)
    strata = {name: math.fsum(values) for name, values in buckets.items()}
    if len(entity_subset) == 0:
        stats = EntityClassStats(classes=())
    else:
        stats = class_stats(entity_subset, aggregate)
    return SelectionDistribution(
        strategy=selection.strategy,
        selected_segments=len(selection.selected_ids),
        realized_duration_s=selection.realized_duration_s,
        entity_duration_s=entity_subset.total_duration_s,
        class_stats=stats,
        stratum_duration_s=strata,
    )


def render_distribution_report(
    pool: SegmentPool,
    stats: EntityClassStats,
    selections: Sequence[SelectionResult],
    aggregate: str = "max",
) -> DistributionReport:
    """Break each selection down by entity class and confidence stratum.

    All selections must reference ids present in ``pool``; a selection
    of the whole pool reproduces ``stats`` exactly, and an empty one
    yields an all-zero fragment.
    """
    return DistributionReport(
        pool_stats=stats,
        selections=tuple(
            _distribution_of(pool, sel, aggregate) for sel in selections
        ),
    )


@dataclass(frozen=True)
class RunReport:
    """Everything one run produced, plus what is needed to redo it.

    ``wall_clock_s`` is informational and deliberately excluded from
    ``to_dict`` so that written reports stay byte-identical across
    reruns with the same seed.
    """

    strategy: str
    input_manifest_digest: str
    config: dict[str, Any]
    selection: SelectionResult | None = None
    entity_stats: EntityClassStats | None = None
    distribution: DistributionReport | None = None
    cer_histogram: CerHistogram | None = None
    classification: ClassificationReport | None = None
    wall_clock_s: float | None = None
    version: str = __version__

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "version": self.version,
            "strategy": self.strategy,
            "input_manifest_digest": self.input_manifest_digest,
            "config": dict(self.config),
        }
        if self.selection is not None:
            out["selection"] = self.selection.to_dict()
        if self.entity_stats is not None:
            out["entity_classes"] = self.entity_stats.to_dict()["classes"]
        if self.distribution is not None:
            out["distribution"] = self.distribution.to_dict()
        if self.cer_histogram is not None:
            out["cer_histogram"] = self.cer_histogram.to_dict()
        if self.classification is not None:
            out["classification"] = self.classification.to_dict()
        return out


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return format(value, ".6g")
    if isinstance(value, (list, tuple)):
        return json.dumps(list(value))
    return str(value)


def _table(headers: list[str], rows: list[list[str]], indent: str = "  ") -> list[str]:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [indent + "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip()]
    lines.append(indent + "  ".join("-" * w for w in widths))
    for row in rows:
        lines.append(
            indent + "  ".join(c.ljust(widths[i]) for i, c in enumerate(row)).rstrip()
        )
    return lines


def _class_rows(classes: EntityClassStats) -> list[list[str]]:
    return [
        [
            stat.entity_class,
            f"{stat.duration_s:.2f}",
            str(stat.segment_count),
            f"{stat.share:.4f}",
            f"{stat.stratum_duration_s['low']:.2f}",
            f"{stat.stratum_duration_s['mid']:.2f}",
            f"{stat.stratum_duration_s['high']:.2f}",
        ]
        for stat in classes.classes
    ]


_CLASS_HEADERS = ["class", "duration_s", "segments", "share", "low_s", "mid_s", "high_s"]


def _selection_lines(selection: SelectionResult) -> list[str]:
    lines = [
        "selection",
        f"  strategy      {selection.strategy}",
        f"  segments      {len(selection.selected_ids)}",
        f"  realized_s    {selection.realized_duration_s:.3f}",
        f"  budget_s      {selection.budget_s:.3f}",
        f"  seed          {selection.seed}",
    ]
    scalars = {
        k: v
        for k, v in selection.stats.items()
        if isinstance(v, (str, int, float, bool))
    }
    for key in sorted(scalars):
        lines.append(f"  {key.ljust(12)}  {_fmt(scalars[key])}")
    return lines


def _histogram_lines(hist: CerHistogram) -> list[str]:
    rows = []
    for i, dur in enumerate(hist.duration_s):
        lo, hi = hist.edges[i], hist.edges[i + 1]
        closer = "]" if i == len(hist.duration_s) - 1 else ")"
        share = dur / hist.total_duration_s if hist.total_duration_s else 0.0
        rows.append([f"[{lo:.2f}, {hi:.2f}{closer}", f"{dur:.2f}", f"{share:.4f}"])
    lines = ["average cer histogram"]
    lines += _table(["bin", "duration_s", "share"], rows)
    lines.append(f"  total duration_s: {hist.total_duration_s:.2f}")
    return lines


def _classification_lines(rep: ClassificationReport) -> list[str]:
    rows = [
        [
            "true low",
            str(rep.true_low_pred_low),
            str(rep.true_low_pred_high),
        ],
        [
            "true high",
            str(rep.true_high_pred_low),
            str(rep.true_high_pred_high),
        ],
    ]
    lines = ["wer classification"]
    lines += _table(["", "pred low", "pred high"], rows)
    metric_rows = [
        [
            name,
            f"{m.precision:.4f}",
            f"{m.recall:.4f}",
            f"{m.f1:.4f}",
            str(m.support),
        ]
        for name, m in (("low-wer", rep.low_wer), ("high-wer", rep.high_wer))
    ]
    lines += _table(["class", "precision", "recall", "f1", "support"], metric_rows)
    lines.append(f"  accuracy: {rep.accuracy:.4f}")
    return lines


def _distribution_lines(dist: DistributionReport) -> list[str]:
    lines = ["pool entity classes"]
    lines += _table(_CLASS_HEADERS, _class_rows(dist.pool_stats))
    for sel in dist.selections:
        lines.append("")
        lines.append(f"distribution: {sel.strategy}")
        lines.append(f"  segments      {sel.selected_segments}")
        lines.append(f"  realized_s    {sel.realized_duration_s:.3f}")
        lines.append(f"  entity_s      {sel.entity_duration_s:.3f}")
        strata = "  ".join(
            f"{name}_s={sel.stratum_duration_s[name]:.2f}" for name in STRATA
        )
        lines.append(f"  strata        {strata}")
        if sel.class_stats.classes:
            lines += _table(_CLASS_HEADERS, _class_rows(sel.class_stats))
    return lines


def render_text_tables(report: RunReport) -> str:
    """Deterministic plain-text view of a report; JSON stays canonical."""
    lines = [
        f"run report (segsel {report.version})",
        f"  strategy        {report.strategy}",
        f"  input manifest  {report.input_manifest_digest}",
        "config",
    ]
    for key in sorted(report.config):
        lines.append(f"  {key} = {_fmt(report.config[key])}")
    for block in (
        _selection_lines(report.selection) if report.selection else None,
        (
            ["entity classes"] + _table(_CLASS_HEADERS, _class_rows(report.entity_stats))
            if report.entity_stats
            else None
        ),
        _distribution_lines(report.distribution) if report.distribution else None,
        _histogram_lines(report.cer_histogram) if report.cer_histogram else None,
        _classification_lines(report.classification) if report.classification else None,
    ):
        if block:
            lines.append("")
            lines.extend(block)
    return "\n".join(lines) + "\n"


def write_report(report: RunReport, out_dir: str | Path) -> tuple[Path, Path]:
    """Write report.json and report.txt into the output directory."""
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    json_path = directory / "report.json"
    txt_path = directory / "report.txt"
    payload = json.dumps(
        report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False
    )
    json_path.write_text(payload + "\n", encoding="utf-8")
    txt_path.write_text(render_text_tables(report), encoding="utf-8")
    return json_path, txt_path
