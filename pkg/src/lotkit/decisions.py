"""Intersection-based occupancy decisions from detector bounding boxes.

Two heuristics are supported:

* ``h1`` — overlap relative to the lot: ``area(lot ∩ bbox) / area(lot)``.
  Insensitive to the detection's own size, so elongated boxes that merely
  cross the lot can still trip it.
* ``h2`` — overlap relative to the detection: ``area(lot ∩ bbox) / area(bbox)``.
  Sensitive to box shape: an elongated box spanning several lots scores low
  against each, which is its characteristic false-negative mode.

A lot is decided occupied when the best ratio over the surviving detections
reaches the threshold ``tau``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

from .annotations import AnnotationError, ImageAnnotation, LotAnnotation
from .geometry import AxisAlignedBox, ConvexQuad, intersection_area

HEURISTICS = ("h1", "h2")
DEFAULT_ACCEPTED_LABELS = frozenset({"car", "truck", "bus"})


class DecisionError(ValueError):
    """Invalid decision input (bad parameters or rect-form lots)."""


@dataclass(frozen=True)
class Detection:
    bbox: AxisAlignedBox
    score: float
    label: str

    def __post_init__(self):
        if not (math.isfinite(self.score) and 0.0 <= self.score <= 1.0):
            raise DecisionError(f"detection score must lie in [0, 1], got {self.score}")


@dataclass(frozen=True)
class DecisionParams:
    heuristic: str = "h1"
    tau: float = 0.5
    score_threshold: float = 0.5
    accepted_labels: frozenset[str] = DEFAULT_ACCEPTED_LABELS

    def __post_init__(self):
        if self.heuristic not in HEURISTICS:
            raise DecisionError(f"unknown heuristic {self.heuristic!r}; expected one of {HEURISTICS}")
        if not 0.0 < self.tau <= 1.0:
            raise DecisionError(f"tau must lie in (0, 1], got {self.tau}")
        if not 0.0 <= self.score_threshold <= 1.0:
            raise DecisionError(f"score_threshold must lie in [0, 1], got {self.score_threshold}")


@dataclass(frozen=True)
class DecisionResult:
    lot_id: str
    ratio: float
    decided: str  # "occupied" | "free"
    supporting_detection: int | None


def heuristic_score(quad: ConvexQuad, det: Detection, heuristic: str) -> float:
    """Overlap ratio under the chosen heuristic; always in [0, 1]."""
    if heuristic not in HEURISTICS:
        raise DecisionError(f"unknown heuristic {heuristic!r}; expected one of {HEURISTICS}")
    overlap = intersection_area(quad, det.bbox)
    denom = quad.area if heuristic == "h1" else det.bbox.area
    return min(overlap / denom, 1.0)


def decide_lot(quad: ConvexQuad, detections: list[Detection], p: DecisionParams) -> DecisionResult:
    """Score a lot against all accepted detections and threshold at tau.

    The ratio is the max over detections (one vehicle suffices); ties go to
    the lowest detection index.
    """
    best_ratio = 0.0
    best_index: int | None = None
    for index, det in enumerate(detections):
        if det.score < p.score_threshold or det.label not in p.accepted_labels:
            continue
        ratio = heuristic_score(quad, det, p.heuristic)
        if best_index is None or ratio > best_ratio:
            best_ratio = ratio
            best_index = index
    decided = "occupied" if best_ratio >= p.tau else "free"
    return DecisionResult(lot_id="", ratio=best_ratio, decided=decided,
                          supporting_detection=best_index)


def decide_image(a: ImageAnnotation, detections: list[Detection],
                 p: DecisionParams) -> tuple[list[DecisionResult], ImageAnnotation]:
    """Decide every lot of an image; returns per-lot results plus the
    annotation with ``occupied`` filled from the decisions."""
    results = []
    predicted_lots = []
    for lot in a.lots:
        if lot.quad is None:
            raise DecisionError(f"{a.image}: lot {lot.id!r} is rect-form; decisions need quads")
        result = replace(decide_lot(lot.quad, detections, p), lot_id=lot.id)
        results.append(result)
        predicted_lots.append(LotAnnotation(id=lot.id, quad=lot.quad,
                                            occupied=result.decided == "occupied"))
    return results, replace(a, lots=tuple(predicted_lots))


def parse_detections(data: bytes | str) -> tuple[str, list[Detection]]:
    """Parse a per-image detections document.

    Format: ``{"image": str, "detections": [{"bbox": [xmin, ymin, xmax, ymax],
    "score": float, "label": str}]}``.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"malformed detections JSON: {exc}") from None
    if not isinstance(doc, dict) or set(doc) != {"image", "detections"}:
        raise AnnotationError("detections document must have exactly the keys image, detections")
    if not isinstance(doc["image"], str) or not doc["image"]:
        raise AnnotationError("detections: image must be a non-empty string")
    if not isinstance(doc["detections"], list):
        raise AnnotationError("detections: detections must be a list")
    out = []
    for i, raw in enumerate(doc["detections"]):
        ctx = f"detection {i}"
        if not isinstance(raw, dict) or set(raw) != {"bbox", "score", "label"}:
            raise AnnotationError(f"{ctx}: must have exactly the keys bbox, score, label")
        bbox = raw["bbox"]
        if not (isinstance(bbox, list) and len(bbox) == 4
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox)):
            raise AnnotationError(f"{ctx}: bbox must be [xmin, ymin, xmax, ymax]")
        if not isinstance(raw["score"], (int, float)) or isinstance(raw["score"], bool):
            raise AnnotationError(f"{ctx}: score must be a number")
        if not isinstance(raw["label"], str):
            raise AnnotationError(f"{ctx}: label must be a string")
        try:
            box = AxisAlignedBox.from_bounds(*(float(v) for v in bbox))
            out.append(Detection(bbox=box, score=float(raw["score"]), label=raw["label"]))
        except (ValueError, DecisionError) as exc:
            raise AnnotationError(f"{ctx}: {exc}") from None
    return doc["image"], out
