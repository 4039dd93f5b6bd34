"""lotkit: parking-lot occupancy toolkit.

Canonical annotation formats, intersection-based occupancy decisions,
patch extraction/augmentation, and a stratified evaluation harness.
"""

from .geometry import (
    AxisAlignedBox,
    ConvexQuad,
    GeometryError,
    Homography3x3,
    Point2D,
    circumscribe,
    intersection_area,
    polygon_area,
    solve_homography,
    validate_quad,
)
from .annotations import (
    AnnotationError,
    DatasetManifest,
    ImageAnnotation,
    LotAnnotation,
    VisualTag,
    convert_quads_to_rects,
    dataset_stats,
    parse_image_annotation,
    validate_manifest,
    write_image_annotation,
)
from .decisions import (
    DecisionError,
    DecisionParams,
    DecisionResult,
    Detection,
    decide_image,
    decide_lot,
    heuristic_score,
    parse_detections,
)
from .patches import (
    AugmentationConfig,
    PatchError,
    SeedSpec,
    apply_augmentations,
    extract_patch,
    hflip,
    normalize,
)
from .evaluation import (
    ConfusionCounts,
    EvaluationError,
    Metrics,
    MetricsReport,
    PredictionRecord,
    SplitSpec,
    WhiskerStats,
    compute_metrics,
    evaluate,
    make_splits,
    whisker_stats,
)

__version__ = "0.1.0"
