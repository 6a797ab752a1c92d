"""Toolkit acceptance checklist: nine end-to-end properties.

Each test exercises one numbered property at its stated tolerance and
prints one pass line. These are heavier than unit tests (the last one
builds a 500 h synthetic corpus and runs every selection strategy
through the command line) but the whole file runs on a laptop.
"""

import json
import math
import random
import time

import pytest

from segsel.cer_selection import (
    CerFilterConfig,
    cer_histogram,
    retain_low_cer,
    score_pool,
)
from segsel.editdist import cer_avg, cer_pair, cer_pairs, levenshtein
from segsel.cli import main as cli_main
from segsel.manifest import SegmentPool, read_manifest, write_manifest
from segsel.ner_selection import (
    select_class_balanced_random,
    select_class_balanced_top_confidence,
)
from segsel.runner import STRATEGIES, run_select, run_train_wer
from segsel.sampling import Budget, Rng, random_sample
from segsel.wer_classifier import ClassificationReport, evaluate, train_svm

from corpusgen import build_corpus, exact_trio, graded_cer_pool
from helpers import entity, make_pool, make_segment, separable_pool
from test_editdist import oracle_levenshtein


def ok(criterion: int, detail: str) -> None:
    print(f"[criterion {criterion}] PASS - {detail}")


def test_criterion_1_edit_distance_matches_oracle():
    rng = random.Random(11)
    alphabet = ("a", "b", "c", "d")
    started = time.perf_counter()
    for _ in range(10_000):
        a = tuple(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))
        b = tuple(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))
        assert levenshtein(a, b) == oracle_levenshtein(a, b), (a, b)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    ok(1, f"10000 random pairs equal the memoized oracle in {elapsed:.1f}s")


def test_criterion_2_three_system_average_structure():
    rng = random.Random(22)
    alphabet = "abcdef "
    for _ in range(300):
        texts = [
            "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
            for _ in range(3)
        ]
        hyps = {"whisper": texts[0], "zipformer": texts[1], "parakeet": texts[2]}
        pairs = cer_pairs(hyps)
        assert len(pairs) == 3
        by_hand = (
            cer_pair(hyps["parakeet"], hyps["whisper"])
            + cer_pair(hyps["parakeet"], hyps["zipformer"])
            + cer_pair(hyps["whisper"], hyps["zipformer"])
        ) / 3.0
        assert abs(cer_avg(hyps) - by_hand) <= 1e-12
    ok(2, "300 random 3-system segments: average equals the hand mean "
          "of exactly 3 pairs to 1e-12")


def test_criterion_3_threshold_soundness_and_monotonicity(tmp_path):
    pool_in, planted = graded_cer_pool(10_000, seed=33)
    manifest = tmp_path / "graded.jsonl"
    write_manifest(pool_in, manifest)
    pool = read_manifest(manifest)
    scoring = score_pool(pool, CerFilterConfig())
    previous: set[str] = set()
    sizes = []
    for tau in (0.01, 0.05, 0.2):
        cfg = CerFilterConfig(tau=tau)
        retained = {seg.id for seg in retain_low_cer(scoring, pool, cfg)}
        expected = {sid for sid, avg in planted.items() if avg < tau}
        assert retained == expected, f"tau={tau}"
        assert previous <= retained, f"not monotone at tau={tau}"
        previous = retained
        sizes.append(len(retained))
    ok(3, "10000-segment manifest: retained == {avg < tau} exactly for "
          f"tau in (0.01, 0.05, 0.2), sizes {sizes}, monotone")


def test_criterion_4_budget_safety_and_near_tightness():
    rng = random.Random(44)
    checked_tight = 0
    for i in range(1000):
        n = rng.randint(1, 60)
        segs = [
            make_segment(f"r{i}-{j}", duration_s=rng.uniform(0.5, 30.0))
            for j in range(n)
        ]
        pool = make_pool(segs)
        pool_duration = pool.total_duration_s
        budget_s = rng.uniform(1.0, pool_duration * 1.2)
        budget = Budget(hours=budget_s / 3600.0)
        result = random_sample(pool, budget, Rng(i, "tightness"))
        assert result.realized_duration_s <= budget.seconds + 1e-9
        if pool_duration > budget.seconds:
            max_d = max(seg.duration_s for seg in segs)
            assert result.realized_duration_s >= budget.seconds - max_d - 1e-9
            checked_tight += 1
    ok(4, f"1000 random instances: realized <= budget always; "
          f"{checked_tight} oversubscribed cases all within one max "
          f"segment of the budget")


def test_criterion_5_class_balanced_shares(tmp_path):
    confs = (0.2, 0.5, 0.7, 0.9)
    segs = []
    for cls, count in (("PER", 500), ("ORG", 300), ("LOC", 200)):
        for i in range(count):
            segs.append(
                make_segment(
                    f"{cls.lower()}-{i:04d}",
                    10.0,
                    entities=[entity(cls, confs[i % len(confs)])],
                )
            )
    manifest = tmp_path / "entities.jsonl"
    write_manifest(make_pool(segs, annotation_system="whisper"), manifest)
    pool = read_manifest(manifest)
    shares = {"PER": 0.5, "ORG": 0.3, "LOC": 0.2}
    max_seg = 10.0
    for select in (select_class_balanced_random, select_class_balanced_top_confidence):
        result = select(pool, budget_hours=1.0, seed=42)
        assert len(set(result.selected_ids)) == len(result.selected_ids)
        per_class: dict[str, float] = {}
        for seg in pool.subset(result.selected_ids):
            cls = seg.entities[0].entity_class
            per_class[cls] = per_class.get(cls, 0.0) + seg.duration_s
        for cls, share in shares.items():
            want = share * 3600.0
            assert abs(per_class[cls] - want) <= max_seg + 1e-9, (
                f"{result.strategy}: {cls} realized {per_class[cls]}, "
                f"wanted {want}"
            )
    ok(5, "both class-balanced strategies put each class within one max "
          "segment of share x 3600 s at P = 0.5/0.3/0.2, duplicate-free")


def test_criterion_6_fixed_seed_determinism(tmp_path):
    corpus = build_corpus(3.0, seed=606)
    manifest = tmp_path / "pool.jsonl"
    write_manifest(corpus, manifest)
    model_path = tmp_path / "model.json"
    run_train_wer(manifest, model_path, seed=42)
    for strategy in STRATEGIES:
        runs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{strategy}-{tag}"
            run_select(
                manifest,
                out,
                strategy,
                budget_hours=0.5,
                seed=42,
                model_path=str(model_path),
            )
            runs.append(out)
        for name in ("subset.jsonl", "report.json", "report.txt"):
            a = (runs[0] / name).read_bytes()
            b = (runs[1] / name).read_bytes()
            assert a == b, f"{strategy}/{name} differs between identical runs"

    thousand, _ = graded_cer_pool(1000, seed=66)
    manifest2 = tmp_path / "thousand.jsonl"
    write_manifest(thousand, manifest2)
    picked = {}
    for seed in (42, 43):
        out = tmp_path / f"seed-{seed}"
        run_select(manifest2, out, "random", budget_hours=1.0, seed=seed)
        picked[seed] = tuple(
            seg.id for seg in read_manifest(out / "subset.jsonl")
        )
    assert picked[42] != picked[43]
    ok(6, "all 7 strategies byte-identical across two seed-42 runs; "
          "seeds 42 vs 43 disagree on a 1000-segment pool")


def test_criterion_7_svm_sanity_and_metric_arithmetic():
    train = separable_pool(200, seed=7, margin=0.5)
    holdout = separable_pool(100, seed=8, margin=0.5, id_prefix="h")
    model = train_svm(train, seed=42)
    train_acc = evaluate(model, train).accuracy
    holdout_acc = evaluate(model, holdout).accuracy
    assert train_acc == 1.0
    assert holdout_acc >= 0.98

    rep = ClassificationReport.from_confusion(tp=95, fn=5, fp=10, tn=90)
    assert abs(rep.low_wer.precision - 0.9047619047619048) <= 1e-4
    assert abs(rep.low_wer.recall - 0.95) <= 1e-4
    assert abs(rep.low_wer.f1 - 0.9268292682926829) <= 1e-4
    assert abs(rep.high_wer.precision - 0.9473684210526315) <= 1e-4
    assert abs(rep.high_wer.recall - 0.9) <= 1e-4
    assert abs(rep.accuracy - 0.925) <= 1e-4
    ok(7, f"separable 200-point set: train accuracy {train_acc:.2f}, "
          f"holdout {holdout_acc:.2f}; injected confusion matches hand "
          f"arithmetic to 1e-4")


def test_criterion_8_histogram_conservation_and_first_bin():
    rng = random.Random(88)
    low_levels = [0] * 90 + [1] * 90
    high_cycle = (2, 3, 4, 6, 8, 12, 16, 21)
    ks = low_levels + [high_cycle[i % len(high_cycle)] for i in range(820)]
    rng.shuffle(ks)
    segs = []
    for i, k in enumerate(ks):
        hyps, _ = exact_trio(rng, k)
        segs.append(make_segment(f"h{i:04d}", 18.0, hypotheses=hyps))
    pool = make_pool(segs)
    scoring = score_pool(pool, CerFilterConfig())
    hist = cer_histogram(scoring, pool, bin_width=0.05)
    total = math.fsum(hist.duration_s)
    assert abs(total - hist.total_duration_s) <= 1e-6
    assert abs(hist.total_duration_s - 18.0 * 1000) <= 1e-6
    first_share = hist.duration_s[0] / hist.total_duration_s
    assert abs(first_share - 0.18) <= 0.005
    ok(8, f"bin durations sum to the scored total; first 0.05 bin holds "
          f"{first_share * 100:.2f}% of duration (engineered 18%)")


def test_criterion_9_full_protocol_under_time_budget(tmp_path):
    started = time.perf_counter()
    corpus = build_corpus(500.0, seed=909)
    manifest = tmp_path / "corpus.jsonl"
    write_manifest(corpus, manifest)

    train_slice = SegmentPool(corpus.segments[:1200], corpus.annotation_system)
    train_manifest = tmp_path / "train.jsonl"
    write_manifest(train_slice, train_manifest)
    model_path = tmp_path / "model.json"
    assert cli_main(
        ["train-wer", str(train_manifest), "--model-out", str(model_path)]
    ) == 0

    budget_s = 100.0 * 3600.0
    realized = {}
    for strategy in STRATEGIES:
        out = tmp_path / strategy
        argv = [
            "select",
            str(manifest),
            "--out-dir", str(out),
            "--strategy", strategy,
            "--budget-hours", "100",
            "--seed", "42",
        ]
        if strategy == "wer-clf":
            argv += ["--model", str(model_path)]
        assert cli_main(argv) == 0, strategy
        subset = read_manifest(out / "subset.jsonl")
        assert len(subset) > 0, strategy
        assert subset.total_duration_s <= budget_s + 1e-6, strategy
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert report["strategy"] == strategy
        assert report["selection"]["realized_duration_s"] == pytest.approx(
            subset.total_duration_s
        )
        realized[strategy] = subset.total_duration_s / 3600.0
    elapsed = time.perf_counter() - started
    assert elapsed < 300.0, f"protocol took {elapsed:.0f}s"
    hours = ", ".join(f"{k}={v:.1f}h" for k, v in realized.items())
    ok(9, f"500 h corpus, 7 strategies, all subsets valid and <= 100 h "
          f"in {elapsed:.0f}s ({hours})")
