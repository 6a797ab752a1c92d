"""Binary low/high-WER classification over segment feature vectors.

A linear SVM is trained with hinge-loss stochastic subgradient descent
on standardized features (Pegasos schedule, step 1/(lambda*t)). The
class boundary is WER 0.5, inclusive on the low side. Selection keeps
only segments the model predicts low-WER, then randomly samples them
up to the budget.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from segsel.manifest import FeatureVector, Segment, SegmentPool, SelectionResult
from segsel.sampling import Budget, Rng, random_sample

WER_CLASS_BOUNDARY = 0.5

DEFAULT_LAMBDA = 1e-4
DEFAULT_EPOCHS = 20


class DegenerateLabelsError(ValueError):
    """Training set maps to a single WER class; no boundary to learn."""


class WerLabel(enum.Enum):
    LOW_WER = "low_wer"
    HIGH_WER = "high_wer"


def label_from_wer(wer: float) -> WerLabel:
    """Class of a WER value; exactly 0.5 is still low-WER."""
    if wer < 0:
        raise ValueError(f"wer must be >= 0, got {wer}")
    return WerLabel.LOW_WER if wer <= WER_CLASS_BOUNDARY else WerLabel.HIGH_WER


@dataclass(frozen=True)
class LinearSvmModel:
    """Linear decision function over standardized features.

    Predicts low-WER when w.(x - mean)/std + bias >= 0. The
    standardization vectors are part of the model so a saved model is
    self-contained.
    """

    weights: tuple[float, ...]
    bias: float
    feature_means: tuple[float, ...]
    feature_stds: tuple[float, ...]
    lam: float
    epochs: int
    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(
            self, "feature_means", tuple(float(v) for v in self.feature_means)
        )
        object.__setattr__(
            self, "feature_stds", tuple(float(v) for v in self.feature_stds)
        )
        if len(self.feature_means) != len(self.weights) or len(
            self.feature_stds
        ) != len(self.weights):
            raise ValueError(
                f"model vectors disagree on dimension: weights {len(self.weights)}, "
                f"means {len(self.feature_means)}, stds {len(self.feature_stds)}"
            )
        if any(s <= 0 for s in self.feature_stds):
            raise ValueError("feature_stds must all be > 0")
        values = (*self.weights, self.bias, *self.feature_means, *self.feature_stds)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("model parameters must all be finite")

    @property
    def dim(self) -> int:
        return len(self.weights)

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "model": "linear-svm",
            "weights": list(self.weights),
            "bias": self.bias,
            "feature_means": list(self.feature_means),
            "feature_stds": list(self.feature_stds),
            "lambda": self.lam,
            "epochs": self.epochs,
            "seed": self.seed,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping[str, Any]) -> "LinearSvmModel":
        kind = obj.get("model")
        if kind != "linear-svm":
            raise ValueError(f"not a linear-svm model document (model={kind!r})")
        try:
            return cls(
                weights=tuple(obj["weights"]),
                bias=float(obj["bias"]),
                feature_means=tuple(obj["feature_means"]),
                feature_stds=tuple(obj["feature_stds"]),
                lam=float(obj["lambda"]),
                epochs=int(obj["epochs"]),
                seed=int(obj["seed"]),
            )
        except KeyError as exc:
            raise ValueError(f"model document missing key {exc}") from None


def save_model(model: LinearSvmModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(model.to_json_obj(), indent=2) + "\n", encoding="utf-8"
    )


def load_model(path: str | Path) -> LinearSvmModel:
    return LinearSvmModel.from_json_obj(json.loads(Path(path).read_text("utf-8")))


def _training_matrix(pool: SegmentPool) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and +1/-1 labels (+1 = low-WER); validates segments."""
    rows: list[tuple[float, ...]] = []
    labels: list[float] = []
    dim: int | None = None
    for seg in pool:
        if seg.features is None or seg.reference is None or seg.wer_vs_reference is None:
            raise ValueError(
                f"segment '{seg.id}': training requires features, reference, "
                f"and wer_vs_reference"
            )
        if dim is None:
            dim = seg.features.dim
        elif seg.features.dim != dim:
            raise ValueError(
                f"segment '{seg.id}': feature dimension {seg.features.dim} "
                f"differs from {dim} seen earlier"
            )
        rows.append(seg.features.values)
        is_low = label_from_wer(seg.wer_vs_reference) is WerLabel.LOW_WER
        labels.append(1.0 if is_low else -1.0)
    if not rows:
        raise ValueError("training pool is empty")
    return np.asarray(rows, dtype=np.float64), np.asarray(labels, dtype=np.float64)


def train_svm(
    pool: SegmentPool,
    lam: float = DEFAULT_LAMBDA,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    class_weights: Mapping[WerLabel, float] | None = None,
) -> LinearSvmModel:
    """Fit the low/high-WER boundary on a labeled pool.

    Deterministic for fixed (pool, lam, epochs, seed): the per-epoch
    shuffle comes from the seeded stream, and all arithmetic is
    sequential float64. ``class_weights`` scales the hinge update per
    class; by default both classes weigh 1.
    """
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    if epochs <= 0:
        raise ValueError(f"epochs must be > 0, got {epochs}")
    X, y = _training_matrix(pool)
    if len(set(y.tolist())) < 2:
        only = WerLabel.LOW_WER if y[0] > 0 else WerLabel.HIGH_WER
        raise DegenerateLabelsError(
            f"all training segments map to {only.value}; need both classes"
        )

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds[stds == 0.0] = 1.0  # constant dims carry no signal; avoid div by zero
    Xs = (X - means) / stds
    # Bias learned as an extra always-1 coordinate so the scale trick
    # covers the whole parameter vector.
    Xa = np.hstack([Xs, np.ones((Xs.shape[0], 1))])

    per_sample = np.ones(len(y))
    if class_weights:
        low_w = float(class_weights.get(WerLabel.LOW_WER, 1.0))
        high_w = float(class_weights.get(WerLabel.HIGH_WER, 1.0))
        per_sample = np.where(y > 0, low_w, high_w)

    n, d = Xa.shape
    v = np.zeros(d)
    s = 1.0  # w = s * v
    t = 0
    rng = Rng(seed)
    for _ in range(epochs):
        for i in rng.shuffled_indices(n):
            t += 1
            x = Xa[i]
            margin = y[i] * s * float(v @ x)
            s *= 1.0 - 1.0 / t  # regularization decay (1 - eta*lam)
            if s == 0.0:  # only at t=1; w is exactly zero then
                v[:] = 0.0
                s = 1.0
            if margin < 1.0:
                v += (per_sample[i] * y[i] / (lam * t * s)) * x

    w = s * v
    return LinearSvmModel(
        weights=tuple(w[:-1]),
        bias=float(w[-1]),
        feature_means=tuple(means),
        feature_stds=tuple(stds),
        lam=lam,
        epochs=epochs,
        seed=seed,
    )


def _decision_scores(model: LinearSvmModel, X: np.ndarray) -> np.ndarray:
    w = np.asarray(model.weights)
    means = np.asarray(model.feature_means)
    stds = np.asarray(model.feature_stds)
    return ((X - means) / stds) @ w + model.bias


def predict(model: LinearSvmModel, features: FeatureVector) -> WerLabel:
    """Label one feature vector; ties on the boundary go to low-WER."""
    if features.dim != model.dim:
        raise ValueError(
            f"feature dimension {features.dim} does not match model "
            f"dimension {model.dim}"
        )
    score = _decision_scores(model, np.asarray([features.values]))[0]
    return WerLabel.LOW_WER if score >= 0 else WerLabel.HIGH_WER


def _pool_matrix(model: LinearSvmModel, pool: SegmentPool) -> np.ndarray:
    rows = []
    for seg in pool:
        if seg.features is None:
            raise ValueError(f"segment '{seg.id}': missing features")
        if seg.features.dim != model.dim:
            raise ValueError(
                f"segment '{seg.id}': feature dimension {seg.features.dim} "
                f"does not match model dimension {model.dim}"
            )
        rows.append(seg.features.values)
    return np.asarray(rows, dtype=np.float64)


def predict_pool(model: LinearSvmModel, pool: SegmentPool) -> dict[str, WerLabel]:
    """Labels for every segment, keyed by id."""
    if len(pool) == 0:
        return {}
    scores = _decision_scores(model, _pool_matrix(model, pool))
    return {
        seg.id: WerLabel.LOW_WER if scores[i] >= 0 else WerLabel.HIGH_WER
        for i, seg in enumerate(pool)
    }


def _safe_ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationReport:
    """Confusion-matrix metrics with low-WER as the positive class."""

    true_low_pred_low: int
    true_low_pred_high: int
    true_high_pred_low: int
    true_high_pred_high: int

    @classmethod
    def from_confusion(
        cls, tp: int, fn: int, fp: int, tn: int
    ) -> "ClassificationReport":
        return cls(
            true_low_pred_low=tp,
            true_low_pred_high=fn,
            true_high_pred_low=fp,
            true_high_pred_high=tn,
        )

    @property
    def total(self) -> int:
        return (
            self.true_low_pred_low
            + self.true_low_pred_high
            + self.true_high_pred_low
            + self.true_high_pred_high
        )

    @property
    def accuracy(self) -> float:
        return _safe_ratio(self.true_low_pred_low + self.true_high_pred_high, self.total)

    @property
    def low_wer(self) -> ClassMetrics:
        tp, fn, fp = self.true_low_pred_low, self.true_low_pred_high, self.true_high_pred_low
        p = _safe_ratio(tp, tp + fp)
        r = _safe_ratio(tp, tp + fn)
        return ClassMetrics(p, r, _f1(p, r), tp + fn)

    @property
    def high_wer(self) -> ClassMetrics:
        tn, fn, fp = self.true_high_pred_high, self.true_low_pred_high, self.true_high_pred_low
        p = _safe_ratio(tn, tn + fn)
        r = _safe_ratio(tn, tn + fp)
        return ClassMetrics(p, r, _f1(p, r), tn + fp)

    def to_dict(self) -> dict[str, Any]:
        def metrics(m: ClassMetrics) -> dict[str, Any]:
            return {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
            }

        return {
            "accuracy": self.accuracy,
            "total": self.total,
            "low_wer": metrics(self.low_wer),
            "high_wer": metrics(self.high_wer),
            "confusion": {
                "true_low_pred_low": self.true_low_pred_low,
                "true_low_pred_high": self.true_low_pred_high,
                "true_high_pred_low": self.true_high_pred_low,
                "true_high_pred_high": self.true_high_pred_high,
            },
        }


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def evaluate(model: LinearSvmModel, pool: SegmentPool) -> ClassificationReport:
    """Confusion-matrix report of predictions against labeled WER."""
    if len(pool) == 0:
        raise ValueError("cannot evaluate on an empty pool")
    for seg in pool:
        if seg.wer_vs_reference is None:
            raise ValueError(f"segment '{seg.id}': missing wer_vs_reference")
    scores = _decision_scores(model, _pool_matrix(model, pool))
    tp = fn = fp = tn = 0
    for i, seg in enumerate(pool):
        truth_low = label_from_wer(seg.wer_vs_reference) is WerLabel.LOW_WER
        pred_low = scores[i] >= 0
        if truth_low and pred_low:
            tp += 1
        elif truth_low:
            fn += 1
        elif pred_low:
            fp += 1
        else:
            tn += 1
    return ClassificationReport.from_confusion(tp, fn, fp, tn)


def select_low_wer(
    pool: SegmentPool,
    model: LinearSvmModel,
    budget_hours: float,
    seed: int,
    strategy: str = "wer-clf",
) -> SelectionResult:
    """Keep segments predicted low-WER, then sample them to the budget.

    An all-high-WER prediction yields an empty result with a warning
    flag in stats rather than an error.
    """
    labels = predict_pool(model, pool)
    kept = pool.filter(lambda seg: labels[seg.id] is WerLabel.LOW_WER)
    n_low = len(kept)
    budget = Budget(hours=budget_hours)
    if n_low == 0:
        return SelectionResult(
            strategy=strategy,
            selected_ids=(),
            realized_duration_s=0.0,
            budget_s=budget.seconds,
            seed=seed,
            stats={
                "warning": "no segments predicted low-WER",
                "predicted_low_wer": 0,
                "predicted_high_wer": len(pool),
                "input_segments": len(pool),
            },
        )
    result = random_sample(kept, budget, Rng(seed, strategy), strategy=strategy)
    # pool_* in stats describe the filtered pool the sampler saw.
    result.stats["predicted_low_wer"] = n_low
    result.stats["predicted_high_wer"] = len(pool) - n_low
    result.stats["input_segments"] = len(pool)
    return result
