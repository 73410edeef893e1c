"""End-to-end segmentation: suppression stage, line operator, threshold.

Method 1 (kmeans): green -> Weber -> boundary expansion -> 3-cluster
k-means -> df plane -> multi-scale line response -> normalize ->
threshold (default 0.77).

Method 2 (tv): green -> Weber -> boundary expansion -> digital TV
filter -> SD plane -> multi-scale line response -> normalize ->
threshold (default 1.25).

Both feed the line operator a plane in which vessels are bright.
"""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .cluster import df_plane, kmeans3
from .errors import DegenerateResponseError, PipelineError, VesselSegError
from .lineop import LineOpParams, multi_scale_response
from .preprocess import expand_fov_boundary, weber_transform
from .raster import green_channel
from .tvfilter import TvParams, run_tv, sd_plane

NON_FOV_SENTINEL = -1.0e6
DEFAULT_THRESHOLDS = {"kmeans": 0.77, "tv": 1.25}


@dataclass
class MethodConfig:
    method: str = "kmeans"
    threshold: float | None = None  # None -> method default
    weber_k: float = 1.0
    boundary_iterations: int = 50
    kmeans_max_iter: int = 100
    tv: TvParams = field(default_factory=TvParams)
    lineop: LineOpParams = field(default_factory=LineOpParams)

    def validate(self) -> None:
        if self.method not in DEFAULT_THRESHOLDS:
            raise ValueError("method must be 'kmeans' or 'tv'")
        if self.threshold is not None and not np.isfinite(self.threshold):
            raise ValueError("threshold must be finite")
        if not self.weber_k > 0:
            raise ValueError("weber_k must be positive")
        if self.boundary_iterations < 0:
            raise ValueError("boundary_iterations must be >= 0")
        if self.kmeans_max_iter < 1:
            raise ValueError("kmeans_max_iter must be >= 1")
        self.tv.validate()
        self.lineop.validate()

    def resolved_threshold(self) -> float:
        if self.threshold is not None:
            return float(self.threshold)
        return DEFAULT_THRESHOLDS[self.method]


@dataclass
class SegmentationResult:
    mask: np.ndarray
    response: np.ndarray  # normalized, sentinel outside FOV
    provenance: dict
    planes: dict = field(default_factory=dict)  # stage planes, debug only


def normalize_response(resp: np.ndarray, fov: np.ndarray) -> np.ndarray:
    """Standardize to zero mean, unit variance over FOV pixels.

    Non-FOV pixels get a sentinel far below any usable threshold.
    """
    resp = np.asarray(resp, dtype=np.float64)
    fov = np.asarray(fov, dtype=bool)
    if resp.shape != fov.shape:
        raise ValueError("response and fov shapes differ")
    vals = resp[fov]
    if vals.size == 0:
        raise ValueError("fov selects no pixels")
    mu = float(vals.mean())
    sigma = float(vals.std())
    # constant planes can leave a ~1e-16 std from summation rounding
    if sigma <= 1e-12 * max(1.0, abs(mu)):
        raise DegenerateResponseError("response has zero variance over FOV")
    out = np.full(resp.shape, NON_FOV_SENTINEL, dtype=np.float64)
    out[fov] = (vals - mu) / sigma
    return out


def threshold_binary(norm: np.ndarray, t: float, fov: np.ndarray) -> np.ndarray:
    """Vessel mask: normalized response >= t, restricted to the FOV."""
    return (np.asarray(norm) >= t) & np.asarray(fov, dtype=bool)


def _input_digest(img: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(str(img.shape).encode())
    h.update(np.ascontiguousarray(img).tobytes())
    return h.hexdigest()


def segment(
    img: np.ndarray,
    fov: np.ndarray,
    cfg: MethodConfig,
    suppression: str | None = None,
    debug: bool = False,
) -> SegmentationResult:
    """Run the full pipeline.

    suppression overrides the stage named by cfg.method; "none" feeds
    the line operator the inverted raw green plane (no Weber, no
    suppression), the reference arm for ring-artifact ablations.
    """
    cfg.validate()
    fov = np.asarray(fov, dtype=bool)
    if img.shape[:2] != fov.shape:
        raise ValueError("image and fov shapes differ")
    mode = suppression if suppression is not None else cfg.method
    if mode not in ("kmeans", "tv", "none"):
        raise ValueError("suppression must be 'kmeans', 'tv', or 'none'")

    planes: dict = {}

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except VesselSegError:
            raise
        except ValueError as exc:
            raise PipelineError(name, str(exc)) from exc

    green = stage("green", green_channel, img)
    if mode == "none":
        expanded = stage("expand", expand_fov_boundary, green, fov, cfg.boundary_iterations)
        lesion_free = float(expanded.max()) - expanded
        if debug:
            planes["green"] = green
            planes["expanded"] = expanded
    else:
        v0 = stage("weber", weber_transform, green, cfg.weber_k)
        v0 = stage("expand", expand_fov_boundary, v0, fov, cfg.boundary_iterations)
        if mode == "kmeans":
            state = stage("kmeans", kmeans3, v0, fov, cfg.kmeans_max_iter)
            lesion_free = df_plane(v0, state)
            if debug:
                planes["cluster_means"] = state.means()
        else:
            v_sd = stage("tv", run_tv, v0, cfg.tv, fov)
            lesion_free = sd_plane(v_sd, v0)
            if debug:
                planes["v_sd"] = v_sd
        if debug:
            planes["v0"] = v0
    if debug:
        planes["lesion_free"] = lesion_free

    resp = stage("lineop", multi_scale_response, lesion_free, cfg.lineop)
    norm = stage("normalize", normalize_response, resp, fov)
    mask = threshold_binary(norm, cfg.resolved_threshold(), fov)
    provenance = {
        "tool": "vesselseg",
        "version": __version__,
        "method": cfg.method,
        "suppression": mode,
        "threshold": cfg.resolved_threshold(),
        "config": asdict(cfg),
        "input_sha256": _input_digest(img),
    }
    return SegmentationResult(mask=mask, response=norm, provenance=provenance, planes=planes)


def run_method1(img: np.ndarray, fov: np.ndarray, cfg: MethodConfig, debug: bool = False) -> SegmentationResult:
    """k-means suppression pipeline; cfg.method must be 'kmeans'."""
    if cfg.method != "kmeans":
        raise ValueError("run_method1 requires cfg.method == 'kmeans'")
    return segment(img, fov, cfg, debug=debug)


def run_method2(img: np.ndarray, fov: np.ndarray, cfg: MethodConfig, debug: bool = False) -> SegmentationResult:
    """TV suppression pipeline; cfg.method must be 'tv'."""
    if cfg.method != "tv":
        raise ValueError("run_method2 requires cfg.method == 'tv'")
    return segment(img, fov, cfg, debug=debug)
