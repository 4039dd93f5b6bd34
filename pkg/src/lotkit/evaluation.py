"""Occupancy metrics, per-visual-condition breakdowns, and split generation.

Positive class is "occupied". Zero-denominator metrics are flagged undefined
and rendered as 0.0 so aggregates never silently inflate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .annotations import AnnotationError, ImageAnnotation, VisualTag


class EvaluationError(ValueError):
    """Invalid evaluation input (unmatched predictions, bad splits, ...)."""


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def add(self, truth_occupied: bool, predicted_occupied: bool):
        if truth_occupied and predicted_occupied:
            self.tp += 1
        elif truth_occupied:
            self.fn += 1
        elif predicted_occupied:
            self.fp += 1
        else:
            self.tn += 1

    def merge(self, other: "ConfusionCounts"):
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        self.tn += other.tn

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    precision_defined: bool
    recall_defined: bool
    f1_defined: bool


def compute_metrics(c: ConfusionCounts) -> Metrics:
    """Precision, recall, and F1 = 2PR/(P+R); undefined cases flagged, shown as 0."""
    p_def = (c.tp + c.fp) > 0
    r_def = (c.tp + c.fn) > 0
    precision = c.tp / (c.tp + c.fp) if p_def else 0.0
    recall = c.tp / (c.tp + c.fn) if r_def else 0.0
    f_def = p_def and r_def and (precision + recall) > 0
    f1 = 2.0 * precision * recall / (precision + recall) if f_def else 0.0
    return Metrics(precision, recall, f1, p_def, r_def, f_def)


@dataclass(frozen=True)
class PredictionRecord:
    image: str
    lot_id: str
    probability_occupied: float | None = None
    decided: str | None = None

    def __post_init__(self):
        if (self.probability_occupied is None) == (self.decided is None):
            raise EvaluationError(
                f"{self.image}/{self.lot_id}: exactly one of probability_occupied/decided required")
        if self.probability_occupied is not None and not (
                math.isfinite(self.probability_occupied) and 0.0 <= self.probability_occupied <= 1.0):
            raise EvaluationError(
                f"{self.image}/{self.lot_id}: probability must lie in [0, 1]")
        if self.decided is not None and self.decided not in ("occupied", "free"):
            raise EvaluationError(f"{self.image}/{self.lot_id}: decided must be occupied|free")

    def is_occupied(self, threshold: float) -> bool:
        if self.decided is not None:
            return self.decided == "occupied"
        return self.probability_occupied >= threshold


@dataclass
class MetricsReport:
    overall_counts: ConfusionCounts
    overall: Metrics
    per_tag: dict[VisualTag, tuple[ConfusionCounts, Metrics]]


def evaluate(predictions: list[PredictionRecord], truth: list[ImageAnnotation],
             decision_threshold: float = 0.5) -> MetricsReport:
    """Score predictions against labeled lots.

    Every prediction must match a labeled lot; a lot contributes to the bucket
    of every visual tag its image carries.
    """
    lots: dict[tuple[str, str], bool] = {}
    image_tags: dict[str, frozenset[VisualTag]] = {}
    for ann in truth:
        image_tags[ann.image] = ann.tags
        for lot in ann.lots:
            lots[(ann.image, lot.id)] = lot.occupied
    overall = ConfusionCounts()
    per_tag = {tag: ConfusionCounts() for tag in VisualTag}
    seen = set()
    for rec in predictions:
        key = (rec.image, rec.lot_id)
        if key not in lots:
            raise EvaluationError(f"prediction for unknown lot {rec.lot_id!r} in {rec.image!r}")
        if key in seen:
            raise EvaluationError(f"duplicate prediction for lot {rec.lot_id!r} in {rec.image!r}")
        seen.add(key)
        truth_occ = lots[key]
        if truth_occ is None:
            raise EvaluationError(f"ground-truth lot {rec.lot_id!r} in {rec.image!r} is unlabeled")
        pred_occ = rec.is_occupied(decision_threshold)
        overall.add(truth_occ, pred_occ)
        for tag in image_tags[rec.image]:
            per_tag[tag].add(truth_occ, pred_occ)
    return MetricsReport(
        overall_counts=overall,
        overall=compute_metrics(overall),
        per_tag={tag: (counts, compute_metrics(counts)) for tag, counts in per_tag.items()},
    )


PARTITIONS = ("train", "val", "test")


@dataclass(frozen=True)
class SplitSpec:
    split_index: int
    assignment: dict[str, str]  # image path -> train|val|test
    ratio: tuple[int, int, int]
    seed: int


def _partition_sizes(n: int, ratio: tuple[int, int, int]) -> list[int]:
    # largest-remainder apportionment of n over the ratio parts
    total = sum(ratio)
    exact = [n * r / total for r in ratio]
    sizes = [int(e) for e in exact]
    remainders = sorted(range(3), key=lambda i: exact[i] - sizes[i], reverse=True)
    for i in remainders[:n - sum(sizes)]:
        sizes[i] += 1
    return sizes


def make_splits(truth: list[ImageAnnotation], k: int = 5,
                ratio: tuple[int, int, int] = (6, 1, 3), seed: int = 0) -> list[SplitSpec]:
    """Generate k independent stratified random splits at the given ratio.

    Images (never individual lots) are the split unit. Stratification orders
    images by their occupied-lot fraction and deals each consecutive block of
    sum(ratio) images out in shuffled ratio proportions, which keeps every
    partition's occupancy mix close to the global one.
    """
    if k < 1:
        raise EvaluationError("k must be at least 1")
    if len(truth) < sum(ratio):
        raise EvaluationError(
            f"manifest too small: need at least {sum(ratio)} images, got {len(truth)}")
    if len({a.image for a in truth}) != len(truth):
        raise EvaluationError("duplicate image paths in manifest")

    def occupied_fraction(a: ImageAnnotation) -> float:
        labeled = [lot.occupied for lot in a.lots if lot.occupied is not None]
        return sum(labeled) / len(labeled) if labeled else 0.0

    splits = []
    block = sum(ratio)
    for split_index in range(k):
        rng = np.random.Generator(np.random.Philox(key=(seed & 0xFFFFFFFFFFFFFFFF, split_index)))
        # jittered sort: stable stratification with per-split randomness inside
        # equal-fraction runs
        jitter = rng.random(len(truth))
        order = sorted(range(len(truth)),
                       key=lambda i: (occupied_fraction(truth[i]), jitter[i]))
        remaining = _partition_sizes(len(truth), ratio)
        assignment: dict[str, str] = {}
        for start in range(0, len(order), block):
            chunk = order[start:start + block]
            labels: list[str] = []
            want = list(remaining)
            for part, r in zip(PARTITIONS, ratio):
                take = min(r, want[PARTITIONS.index(part)], len(chunk) - len(labels))
                labels.extend([part] * take)
            while len(labels) < len(chunk):  # ratio exhausted; fall back to remaining targets
                part = max(PARTITIONS, key=lambda pt: remaining[PARTITIONS.index(pt)] - labels.count(pt))
                labels.append(part)
            rng.shuffle(labels)
            for idx, part in zip(chunk, labels):
                assignment[truth[idx].image] = part
                remaining[PARTITIONS.index(part)] -= 1
        splits.append(SplitSpec(split_index=split_index, assignment=assignment,
                                ratio=ratio, seed=seed))
    return splits


@dataclass(frozen=True)
class WhiskerStats:
    q1: float
    median: float
    q3: float
    iqr: float
    lower: float
    upper: float
    outliers: tuple[float, ...]


def _quantile_type7(values: np.ndarray, p: float) -> float:
    # linear interpolation at position (n-1)*p over the sorted sample
    pos = (len(values) - 1) * p
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(values) - 1)
    frac = pos - lo
    return float(values[lo] * (1.0 - frac) + values[hi] * frac)


def whisker_stats(values) -> WhiskerStats:
    """Box-plot statistics with whiskers at Q1 - 1.5*IQR and Q3 + 1.5*IQR."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size < 4:
        raise EvaluationError(f"whisker stats need at least 4 values, got {arr.size}")
    if not np.isfinite(arr).all():
        raise EvaluationError("whisker stats need finite values")
    arr = np.sort(arr)
    q1 = _quantile_type7(arr, 0.25)
    median = _quantile_type7(arr, 0.5)
    q3 = _quantile_type7(arr, 0.75)
    iqr = q3 - q1
    lower = q1 - 1.5 * iqr
    upper = q3 + 1.5 * iqr
    outliers = tuple(float(v) for v in arr if v < lower or v > upper)
    return WhiskerStats(q1=q1, median=median, q3=q3, iqr=iqr,
                        lower=lower, upper=upper, outliers=outliers)


def parse_prediction_line(line: str) -> PredictionRecord:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"malformed prediction line: {exc}") from None
    if not isinstance(doc, dict):
        raise AnnotationError("prediction line must be a JSON object")
    allowed = {"image", "lot_id", "probability_occupied", "decided"}
    unknown = set(doc) - allowed
    if unknown:
        raise AnnotationError(f"prediction line: unknown keys {sorted(unknown)}")
    if not isinstance(doc.get("image"), str) or not isinstance(doc.get("lot_id"), str):
        raise AnnotationError("prediction line: image and lot_id must be strings")
    try:
        return PredictionRecord(image=doc["image"], lot_id=doc["lot_id"],
                                probability_occupied=doc.get("probability_occupied"),
                                decided=doc.get("decided"))
    except EvaluationError as exc:
        raise AnnotationError(str(exc)) from None


def write_prediction_line(rec: PredictionRecord) -> str:
    doc: dict = {"image": rec.image, "lot_id": rec.lot_id}
    if rec.decided is not None:
        doc["decided"] = rec.decided
    else:
        doc["probability_occupied"] = rec.probability_occupied
    return json.dumps(doc)


def _metrics_json(counts: ConfusionCounts, metrics: Metrics) -> dict:
    return {
        "counts": {"tp": counts.tp, "fp": counts.fp, "fn": counts.fn, "tn": counts.tn},
        "n_samples": counts.total,
        "precision": metrics.precision,
        "recall": metrics.recall,
        "f1": metrics.f1,
        "undefined": sorted(
            name for name, defined in (("precision", metrics.precision_defined),
                                       ("recall", metrics.recall_defined),
                                       ("f1", metrics.f1_defined)) if not defined),
    }


def report_to_json(report: MetricsReport, whiskers: dict[str, WhiskerStats] | None = None,
                   splits: list[dict] | None = None) -> bytes:
    """Canonical JSON rendering of a metrics report (stable key order)."""
    doc: dict = {
        "overall": _metrics_json(report.overall_counts, report.overall),
        "per_tag": {tag.value: _metrics_json(counts, metrics)
                    for tag, (counts, metrics) in sorted(report.per_tag.items(),
                                                         key=lambda kv: kv[0].value)},
    }
    if splits is not None:
        doc["splits"] = splits
    if whiskers is not None:
        doc["whiskers"] = {
            key: {"q1": w.q1, "median": w.median, "q3": w.q3, "iqr": w.iqr,
                  "lower": w.lower, "upper": w.upper, "outliers": list(w.outliers)}
            for key, w in sorted(whiskers.items())
        }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
