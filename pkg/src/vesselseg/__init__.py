"""Retinal blood-vessel segmentation with bright-lesion suppression.

Two pipelines share a multi-scale oriented line operator; they differ in
how bright lesions are neutralized first (intensity clustering vs
digital total-variation filtering). Includes FOV extraction, a
manifest-driven dataset layer, and an evaluation harness (confusion
measures, averaged ROC curves, trapezoidal AUC).
"""

__version__ = "0.1.0"

from .cluster import ClusterState, df_plane, kmeans3
from .dataset import DatasetManifest, ManifestEntry, load_manifest, resolve_gt, save_manifest
from .errors import (
    DegenerateMaskError,
    DegenerateResponseError,
    ImageFormatError,
    ManifestError,
    NumericalError,
    PipelineError,
    VesselSegError,
)
from .evaluate import (
    ConfusionCounts,
    EvalRow,
    ROC_THRESHOLDS,
    RocCurve,
    aggregate,
    calibrate_threshold,
    confusion,
    measures,
    roc_curve,
)
from .lineop import LineOpParams, LineResponse, line_response, multi_scale_response
from .pipeline import (
    DEFAULT_THRESHOLDS,
    MethodConfig,
    SegmentationResult,
    normalize_response,
    run_method1,
    run_method2,
    segment,
    threshold_binary,
)
from .preprocess import expand_fov_boundary, weber_transform
from .raster import (
    compute_fov_mask,
    green_channel,
    otsu_threshold,
    load_mask_png,
    load_rgb,
    read_response_grid,
    save_mask_png,
    save_plane_png,
    write_response_grid,
)
from .tvfilter import (
    TvParams,
    TvState,
    estimate_lambda,
    estimate_noise_variance,
    local_variation,
    run_tv,
    sd_plane,
    tv_energy,
    tv_step,
)

__all__ = [
    "__version__",
    "ClusterState", "df_plane", "kmeans3",
    "DatasetManifest", "ManifestEntry", "load_manifest", "resolve_gt", "save_manifest",
    "DegenerateMaskError", "DegenerateResponseError", "ImageFormatError",
    "ManifestError", "NumericalError", "PipelineError", "VesselSegError",
    "ConfusionCounts", "EvalRow", "ROC_THRESHOLDS", "RocCurve",
    "aggregate", "calibrate_threshold", "confusion", "measures", "roc_curve",
    "LineOpParams", "LineResponse", "line_response", "multi_scale_response",
    "DEFAULT_THRESHOLDS", "MethodConfig", "SegmentationResult",
    "normalize_response", "run_method1", "run_method2", "segment", "threshold_binary",
    "expand_fov_boundary", "weber_transform",
    "compute_fov_mask", "green_channel", "load_mask_png", "load_rgb", "otsu_threshold",
    "read_response_grid", "save_mask_png", "save_plane_png", "write_response_grid",
    "TvParams", "TvState", "estimate_lambda", "estimate_noise_variance",
    "local_variation", "run_tv", "sd_plane", "tv_energy", "tv_step",
]
