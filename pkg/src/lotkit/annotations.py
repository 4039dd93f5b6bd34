"""Canonical annotation data model and bit-exact JSON serialization.

One JSON file per image. Schema (see ``schemas/annotation.schema.json``)::

    {
      "image": "lot_a/frame_0001.jpg",
      "width": 1280,
      "height": 720,
      "tags": ["sunny", "occlusion_car"],
      "lots": [
        {"id": "a01", "quad": [[x, y], ...4 points...], "occupied": true},
        {"id": "a02", "rect": [[xmin, ymin], [xmax, ymax]], "occupied": null}
      ]
    }

Each lot carries exactly one of ``quad`` (4 points) or ``rect`` (2 corner
points); ``occupied`` is true/false/null (null = not yet labelled).
"""

from __future__ import annotations

import enum
import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

from .geometry import (
    AxisAlignedBox,
    ConvexQuad,
    GeometryError,
    Point2D,
    circumscribe,
    validate_quad,
)

BOUNDS_TOLERANCE = 0.5  # px of allowed overhang outside the image frame


class AnnotationError(ValueError):
    """Annotation file violates the schema or an invariant."""

    def __init__(self, message: str, lot_id: str | None = None, rule: str = "schema"):
        super().__init__(message)
        self.lot_id = lot_id
        self.rule = rule


class VisualTag(enum.Enum):
    """Closed 11-category taxonomy of per-image visual conditions."""

    SUNNY = "sunny"
    OVERCAST = "overcast"
    RAINY = "rainy"
    WINTER = "winter"
    FOG = "fog"
    GLARE = "glare"
    NIGHT = "night"
    INFRARED = "infrared"
    OCCLUSION_CAR = "occlusion_car"
    OCCLUSION_TREE = "occlusion_tree"
    DISTORTION = "distortion"


@dataclass(frozen=True)
class LotAnnotation:
    id: str
    quad: ConvexQuad | None = None
    rect: AxisAlignedBox | None = None
    occupied: bool | None = None

    def __post_init__(self):
        if not self.id:
            raise AnnotationError("lot id must be a non-empty string")
        if (self.quad is None) == (self.rect is None):
            raise AnnotationError(f"lot {self.id!r}: exactly one of quad/rect must be present")


@dataclass(frozen=True)
class ImageAnnotation:
    image: str
    width: int
    height: int
    tags: frozenset[VisualTag] = frozenset()
    lots: tuple[LotAnnotation, ...] = ()

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise AnnotationError(f"{self.image}: width/height must be positive")
        seen = set()
        for lot in self.lots:
            if lot.id in seen:
                raise AnnotationError(f"{self.image}: duplicate lot id {lot.id!r}",
                                      lot_id=lot.id, rule="duplicate-lot-id")
            seen.add(lot.id)
            message = _bounds_violation(lot, self.width, self.height)
            if message:
                raise AnnotationError(f"{self.image}: lot {lot.id!r} {message}",
                                      lot_id=lot.id, rule="out-of-bounds")


def _bounds_violation(lot: LotAnnotation, width: int, height: int) -> str | None:
    if lot.quad is not None:
        pts = lot.quad.vertices
    else:
        pts = (lot.rect.min, lot.rect.max)
    for p in pts:
        if (p.x < -BOUNDS_TOLERANCE or p.y < -BOUNDS_TOLERANCE
                or p.x > width + BOUNDS_TOLERANCE or p.y > height + BOUNDS_TOLERANCE):
            return (f"outside image bounds: ({p.x}, {p.y}) not within "
                    f"[0, {width}] x [0, {height}] (+{BOUNDS_TOLERANCE} px tolerance)")
    return None


_IMAGE_KEYS = {"image", "width", "height", "tags", "lots"}
_LOT_KEYS = {"id", "quad", "rect", "occupied"}


def _require(cond: bool, message: str):
    if not cond:
        raise AnnotationError(message)


def _parse_point(raw, context: str) -> Point2D:
    _require(isinstance(raw, (list, tuple)) and len(raw) == 2, f"{context}: point must be an [x, y] pair")
    x, y = raw
    _require(isinstance(x, (int, float)) and not isinstance(x, bool), f"{context}: x must be a number")
    _require(isinstance(y, (int, float)) and not isinstance(y, bool), f"{context}: y must be a number")
    try:
        return Point2D(float(x), float(y))
    except GeometryError as exc:
        raise AnnotationError(f"{context}: {exc}") from None


def _parse_lot(raw, strict: bool) -> LotAnnotation:
    _require(isinstance(raw, dict), "lot must be a JSON object")
    lot_id = raw.get("id")
    _require(isinstance(lot_id, str) and lot_id != "", "lot id must be a non-empty string")
    ctx = f"lot {lot_id!r}"
    unknown = set(raw) - _LOT_KEYS
    if unknown:
        if strict:
            raise AnnotationError(f"{ctx}: unknown keys {sorted(unknown)}")
        warnings.warn(f"{ctx}: ignoring unknown keys {sorted(unknown)}", stacklevel=3)
    _require("occupied" in raw, f"{ctx}: missing required field 'occupied'")
    occupied = raw["occupied"]
    _require(occupied is None or isinstance(occupied, bool), f"{ctx}: occupied must be true/false/null")
    has_quad = "quad" in raw
    has_rect = "rect" in raw
    _require(has_quad != has_rect, f"{ctx}: exactly one of quad/rect must be present")
    try:
        if has_quad:
            points = raw["quad"]
            _require(isinstance(points, list) and len(points) == 4,
                     f"{ctx}: quad must have exactly 4 points")
            quad = validate_quad([_parse_point(p, ctx) for p in points])
            return LotAnnotation(id=lot_id, quad=quad, occupied=occupied)
        points = raw["rect"]
        _require(isinstance(points, list) and len(points) == 2,
                 f"{ctx}: rect must have exactly 2 points")
        pmin = _parse_point(points[0], ctx)
        pmax = _parse_point(points[1], ctx)
        return LotAnnotation(id=lot_id, rect=AxisAlignedBox(pmin, pmax), occupied=occupied)
    except GeometryError as exc:
        raise AnnotationError(f"{ctx}: {exc}") from None


def parse_image_annotation(data: bytes | str, strict: bool = True) -> ImageAnnotation:
    """Parse and validate one image-level annotation JSON document.

    In strict mode unknown keys are rejected; in lenient mode they produce a
    warning and are dropped.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"malformed JSON: {exc}") from None
    _require(isinstance(doc, dict), "top-level value must be a JSON object")
    unknown = set(doc) - _IMAGE_KEYS
    if unknown:
        if strict:
            raise AnnotationError(f"unknown top-level keys {sorted(unknown)}")
        warnings.warn(f"ignoring unknown top-level keys {sorted(unknown)}", stacklevel=2)
    for key in ("image", "width", "height", "tags", "lots"):
        _require(key in doc, f"missing required field {key!r}")
    _require(isinstance(doc["image"], str) and doc["image"] != "", "image must be a non-empty string")
    for key in ("width", "height"):
        _require(isinstance(doc[key], int) and not isinstance(doc[key], bool),
                 f"{key} must be an integer")
    _require(isinstance(doc["tags"], list), "tags must be a list")
    tags = []
    for raw_tag in doc["tags"]:
        _require(isinstance(raw_tag, str), "tags must be strings")
        try:
            tags.append(VisualTag(raw_tag))
        except ValueError:
            raise AnnotationError(f"unknown visual tag {raw_tag!r}") from None
    _require(len(tags) == len(set(tags)), "duplicate tags")
    _require(isinstance(doc["lots"], list), "lots must be a list")
    return ImageAnnotation(
        image=doc["image"],
        width=doc["width"],
        height=doc["height"],
        tags=frozenset(tags),
        lots=tuple(_parse_lot(raw, strict) for raw in doc["lots"]),
    )


def _point_json(p: Point2D) -> list[float]:
    return [float(p.x), float(p.y)]


def write_image_annotation(a: ImageAnnotation) -> bytes:
    """Serialize to canonical JSON: fixed key order, lots sorted by id, LF endings."""
    lots = []
    for lot in sorted(a.lots, key=lambda l: l.id):
        entry: dict = {"id": lot.id}
        if lot.quad is not None:
            entry["quad"] = [_point_json(p) for p in lot.quad.vertices]
        else:
            entry["rect"] = [_point_json(lot.rect.min), _point_json(lot.rect.max)]
        entry["occupied"] = lot.occupied
        lots.append(entry)
    doc = {
        "image": a.image,
        "width": a.width,
        "height": a.height,
        "tags": sorted(t.value for t in a.tags),
        "lots": lots,
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def convert_quads_to_rects(a: ImageAnnotation) -> ImageAnnotation:
    """Replace every quad outline by its circumscribing rectangle."""
    lots = []
    for lot in a.lots:
        if lot.quad is None:
            raise AnnotationError(f"{a.image}: lot {lot.id!r} is already rect-form")
        lots.append(LotAnnotation(id=lot.id, rect=circumscribe(lot.quad), occupied=lot.occupied))
    return replace(a, lots=tuple(lots))


@dataclass(frozen=True)
class DatasetManifest:
    """Binds a dataset name to a directory of annotation files.

    ``entries`` are annotation file paths relative to ``root``.
    """

    name: str
    root: Path
    entries: tuple[str, ...]

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise AnnotationError(f"cannot read manifest {path}: {exc}") from None
        for key in ("name", "root", "entries"):
            _require(key in doc, f"manifest {path}: missing field {key!r}")
        root = Path(doc["root"])
        if not root.is_absolute():
            root = path.parent / root
        return cls(name=doc["name"], root=root, entries=tuple(doc["entries"]))

    def save(self, path: str | Path, root: str | None = None):
        doc = {"name": self.name, "root": root if root is not None else str(self.root),
               "entries": list(self.entries)}
        Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

    def read_entry(self, entry: str, strict: bool = True) -> ImageAnnotation:
        try:
            raw = (self.root / entry).read_bytes()
        except OSError as exc:
            raise AnnotationError(f"cannot read annotation {entry}: {exc}") from None
        return parse_image_annotation(raw, strict=strict)

    def images(self, strict: bool = True):
        for entry in self.entries:
            yield self.read_entry(entry, strict=strict)


@dataclass(frozen=True)
class Violation:
    file: str
    lot_id: str | None
    rule: str
    message: str


def validate_manifest(m: DatasetManifest) -> list[Violation]:
    """Check every manifest entry; violations are returned, never raised."""
    violations = []
    seen_images: dict[str, str] = {}
    seen_entries = set()
    for entry in m.entries:
        if entry in seen_entries:
            violations.append(Violation(entry, None, "duplicate-entry",
                                        f"annotation path {entry!r} listed twice"))
            continue
        seen_entries.add(entry)
        try:
            ann = m.read_entry(entry)
        except AnnotationError as exc:
            violations.append(Violation(entry, exc.lot_id, exc.rule if exc.rule != "schema" else "parse-error", str(exc)))
            continue
        if ann.image in seen_images:
            violations.append(Violation(entry, None, "duplicate-image",
                                        f"image path {ann.image!r} already used by {seen_images[ann.image]!r}"))
        else:
            seen_images[ann.image] = entry
    return violations


def dataset_stats(m: DatasetManifest) -> dict[str, int]:
    """Total image count plus per-visual-tag image counts (tags non-exclusive)."""
    counts = {"total": 0}
    for tag in VisualTag:
        counts[tag.value] = 0
    for ann in m.images():
        counts["total"] += 1
        for tag in ann.tags:
            counts[tag.value] += 1
    return counts
