"""Tests for response normalization, thresholding, and the segment driver."""
import numpy as np
import pytest

from vesselseg.errors import DegenerateResponseError, PipelineError
from vesselseg.lineop import LineOpParams
from vesselseg.pipeline import (
    DEFAULT_THRESHOLDS,
    NON_FOV_SENTINEL,
    MethodConfig,
    normalize_response,
    run_method1,
    run_method2,
    segment,
    threshold_binary,
)
from vesselseg.tvfilter import TvParams


def _disc_fov(n: int, radius: float) -> np.ndarray:
    yy, xx = np.mgrid[:n, :n]
    return (yy - n / 2.0) ** 2 + (xx - n / 2.0) ** 2 <= radius**2


def _line_image(n: int = 48) -> tuple[np.ndarray, np.ndarray]:
    """Small disc image with one dark line, enough structure to segment."""
    fov = _disc_fov(n, n * 0.42)
    green = np.full((n, n), 120.0)
    green[n // 2, 8 : n - 8] = 60.0
    green[~fov] = 4.0
    rng = np.random.default_rng(99)
    green = green + rng.normal(0.0, 1.0, green.shape)
    img = np.stack([0.5 * green, green, 0.3 * green], axis=-1)
    return img, fov


# ------------------------------------------------------------- normalization

def test_normalize_three_values():
    fov = np.ones((1, 3), dtype=bool)
    out = normalize_response(np.array([[1.0, 2.0, 3.0]]), fov)
    expected = np.array([-1.0, 0.0, 1.0]) / np.sqrt(2.0 / 3.0)
    assert np.allclose(out, expected, atol=1e-12)


def test_normalize_moments_over_fov():
    rng = np.random.default_rng(3)
    resp = rng.uniform(-5, 5, size=(40, 40))
    fov = _disc_fov(40, 15)
    out = normalize_response(resp, fov)
    assert out[fov].mean() == pytest.approx(0.0, abs=1e-12)
    assert out[fov].std() == pytest.approx(1.0, abs=1e-12)


def test_normalize_is_idempotent():
    rng = np.random.default_rng(4)
    resp = rng.normal(0, 3, size=(30, 30))
    fov = _disc_fov(30, 11)
    once = normalize_response(resp, fov)
    twice = normalize_response(once, fov)
    assert np.allclose(once[fov], twice[fov], atol=1e-12)


def test_normalize_ignores_values_outside_fov():
    rng = np.random.default_rng(5)
    resp = rng.uniform(0, 1, size=(20, 20))
    fov = _disc_fov(20, 7)
    spoiled = resp.copy()
    spoiled[~fov] = 1e9
    assert np.array_equal(normalize_response(resp, fov), normalize_response(spoiled, fov))


def test_normalize_sentinel_outside_fov():
    resp = np.arange(16.0).reshape(4, 4)
    fov = np.zeros((4, 4), dtype=bool)
    fov[1:3, 1:3] = True
    out = normalize_response(resp, fov)
    assert (out[~fov] == NON_FOV_SENTINEL).all()
    assert NON_FOV_SENTINEL == -1.0e6


def test_normalize_constant_response_rejected():
    fov = _disc_fov(16, 6)
    with pytest.raises(DegenerateResponseError):
        normalize_response(np.full((16, 16), 3.3), fov)


def test_normalize_shape_mismatch():
    with pytest.raises(ValueError):
        normalize_response(np.zeros((4, 4)), np.ones((4, 5), dtype=bool))


def test_normalize_empty_fov():
    with pytest.raises(ValueError):
        normalize_response(np.zeros((4, 4)), np.zeros((4, 4), dtype=bool))


# --------------------------------------------------------------- thresholding

def test_threshold_extremes():
    rng = np.random.default_rng(6)
    fov = _disc_fov(24, 9)
    norm = normalize_response(rng.normal(size=(24, 24)), fov)
    assert np.array_equal(threshold_binary(norm, -1e5, fov), fov)
    assert not threshold_binary(norm, 1e5, fov).any()


def test_threshold_masks_nest():
    rng = np.random.default_rng(7)
    fov = _disc_fov(24, 9)
    norm = normalize_response(rng.normal(size=(24, 24)), fov)
    prev = threshold_binary(norm, -2.0, fov)
    for t in np.linspace(-1.5, 2.5, 9):
        cur = threshold_binary(norm, t, fov)
        assert (cur <= prev).all()  # higher threshold never adds pixels
        prev = cur


def test_threshold_mask_inside_fov():
    rng = np.random.default_rng(8)
    fov = _disc_fov(24, 9)
    norm = normalize_response(rng.normal(size=(24, 24)), fov)
    mask = threshold_binary(norm, 0.0, fov)
    assert not mask[~fov].any()


# -------------------------------------------------------------------- config

def test_config_defaults_resolve_per_method():
    assert MethodConfig(method="kmeans").resolved_threshold() == DEFAULT_THRESHOLDS["kmeans"]
    assert MethodConfig(method="tv").resolved_threshold() == DEFAULT_THRESHOLDS["tv"]
    assert MethodConfig(method="tv", threshold=0.5).resolved_threshold() == 0.5


@pytest.mark.parametrize(
    "kwargs",
    [
        {"method": "otsu"},
        {"threshold": float("nan")},
        {"threshold": float("inf")},
        {"weber_k": 0.0},
        {"weber_k": -1.0},
        {"boundary_iterations": -1},
        {"kmeans_max_iter": 0},
    ],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        MethodConfig(**kwargs).validate()


def test_method_wrappers_check_method_field():
    img, fov = _line_image()
    with pytest.raises(ValueError):
        run_method1(img, fov, MethodConfig(method="tv"))
    with pytest.raises(ValueError):
        run_method2(img, fov, MethodConfig(method="kmeans"))


# ------------------------------------------------------------------- segment

def _fast_cfg(method: str) -> MethodConfig:
    return MethodConfig(
        method=method,
        boundary_iterations=10,
        tv=TvParams(iterations=12),
        lineop=LineOpParams(window_sizes=(5, 9)),
    )


def test_segment_finds_the_line():
    img, fov = _line_image()
    n = img.shape[0]
    for method in ("kmeans", "tv"):
        result = segment(img, fov, _fast_cfg(method), suppression=None)
        row = result.mask[n // 2, 12 : n - 12]
        assert row.mean() > 0.8, method
        assert not result.mask[~fov].any()
        assert result.response.shape == fov.shape


def test_segment_deterministic():
    img, fov = _line_image()
    a = segment(img, fov, _fast_cfg("kmeans"))
    b = segment(img, fov, _fast_cfg("kmeans"))
    assert np.array_equal(a.mask, b.mask)
    assert np.array_equal(a.response, b.response)
    assert a.provenance == b.provenance


def test_segment_rejects_shape_mismatch():
    img, fov = _line_image()
    with pytest.raises(ValueError):
        segment(img, fov[:-1], _fast_cfg("kmeans"))


def test_segment_rejects_unknown_suppression():
    img, fov = _line_image()
    with pytest.raises(ValueError):
        segment(img, fov, _fast_cfg("kmeans"), suppression="median")


def test_segment_constant_image_degenerate():
    fov = _disc_fov(32, 12)
    img = np.full((32, 32, 3), 77.0)
    for method in ("kmeans", "tv"):
        with pytest.raises(DegenerateResponseError):
            segment(img, fov, _fast_cfg(method))


def test_segment_wraps_stage_errors():
    fov = _disc_fov(16, 6)
    bad = np.zeros((16, 16, 2))  # not an RGB raster
    with pytest.raises(PipelineError) as exc_info:
        segment(bad, fov, _fast_cfg("kmeans"))
    assert exc_info.value.stage == "green"


def test_segment_debug_planes():
    img, fov = _line_image(40)
    lean = segment(img, fov, _fast_cfg("kmeans"))
    assert lean.planes == {}
    km = segment(img, fov, _fast_cfg("kmeans"), debug=True)
    assert {"v0", "cluster_means", "lesion_free"} <= set(km.planes)
    tv = segment(img, fov, _fast_cfg("tv"), debug=True)
    assert {"v0", "v_sd", "lesion_free"} <= set(tv.planes)
    none = segment(img, fov, _fast_cfg("kmeans"), suppression="none", debug=True)
    assert {"green", "expanded", "lesion_free"} <= set(none.planes)


def test_segment_none_arm_inverts_green():
    """The ablation arm must feed the line operator max(green) - green."""
    img, fov = _line_image(40)
    out = segment(img, fov, _fast_cfg("kmeans"), suppression="none", debug=True)
    lf = out.planes["lesion_free"]
    exp = out.planes["expanded"]
    assert np.allclose(lf, exp.max() - exp, atol=1e-12)
    assert out.provenance["suppression"] == "none"


def test_provenance_records_run():
    img, fov = _line_image(40)
    cfg = _fast_cfg("tv")
    out = segment(img, fov, cfg)
    p = out.provenance
    assert p["tool"] == "vesselseg"
    assert p["method"] == "tv"
    assert p["suppression"] == "tv"
    assert p["threshold"] == cfg.resolved_threshold()
    assert p["config"]["lineop"]["window_sizes"] == (5, 9)
    assert len(p["input_sha256"]) == 64
    other = segment(img + 1.0, fov, cfg)
    assert other.provenance["input_sha256"] != p["input_sha256"]


def test_wrappers_equal_segment():
    img, fov = _line_image(40)
    cfg1 = _fast_cfg("kmeans")
    assert np.array_equal(run_method1(img, fov, cfg1).mask, segment(img, fov, cfg1).mask)
    cfg2 = _fast_cfg("tv")
    assert np.array_equal(run_method2(img, fov, cfg2).mask, segment(img, fov, cfg2).mask)
