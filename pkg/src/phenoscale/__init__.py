"""Toolkit for studying how image resolution affects plant detection quality."""

__version__ = "0.1.0"

from .annotations import (
    Annotation,
    BBox,
    DatasetDescriptor,
    ImageMeta,
    Prediction,
    Role,
    parse_manifest,
    parse_predictions,
    parse_voc_xml,
    serialize_annotation,
    serialize_manifest,
    serialize_predictions,
)
from .detector import DetectorConfig, detect_plants, excess_green, tile_patches
from .errors import ConfigError, DataError, ParseError, PhenoscaleError
from .geometry import ConfusionCounts, MatchResult, area, counts, iou, match_detections
from .metrics import (
    CountRecord,
    EvalConfig,
    MetricsReport,
    PRCurve,
    accuracy,
    average_precision,
    evaluate,
    overdetection_profile,
    pr_curve,
    precision_recall,
    rrmse,
)
from .resample import (
    DegradeParams,
    bicubic_resize,
    convolve,
    degrade,
    gaussian_kernel,
    image_variance,
    motion_blur_kernel,
    read_raster,
    scale_boxes,
    write_raster,
)
from .synthfield import SynthFieldParams, generate_dataset, generate_field

__all__ = [
    "Annotation",
    "BBox",
    "ConfigError",
    "ConfusionCounts",
    "CountRecord",
    "DataError",
    "DatasetDescriptor",
    "DegradeParams",
    "DetectorConfig",
    "EvalConfig",
    "ImageMeta",
    "MatchResult",
    "MetricsReport",
    "PRCurve",
    "ParseError",
    "PhenoscaleError",
    "Prediction",
    "Role",
    "SynthFieldParams",
    "accuracy",
    "area",
    "average_precision",
    "bicubic_resize",
    "convolve",
    "counts",
    "degrade",
    "detect_plants",
    "evaluate",
    "excess_green",
    "gaussian_kernel",
    "generate_dataset",
    "generate_field",
    "image_variance",
    "iou",
    "match_detections",
    "motion_blur_kernel",
    "overdetection_profile",
    "parse_manifest",
    "parse_predictions",
    "parse_voc_xml",
    "pr_curve",
    "precision_recall",
    "read_raster",
    "rrmse",
    "scale_boxes",
    "serialize_annotation",
    "serialize_manifest",
    "serialize_predictions",
    "tile_patches",
    "write_raster",
]
