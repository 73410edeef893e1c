"""Shared fixtures: a synthetic fundus phantom with known ground truth.

The phantom has a circular FOV on a dark surround, a textured
background with a mild radial illumination falloff, dark vessel
segments of widths 1 to 5, and bright circular blobs standing in for
exudate-style lesions. Everything is built from fixed geometry and a
seeded generator, so ground truth is exact by construction.

Photometry mimics an underexposed fundus green channel: background
around 30, vessels nearly black, blobs roughly twice the background
brightness. In that regime the log-space mapping stretches vessel
contrast much more than blob contrast, while on the raw intensities
the blob edges dominate — which is exactly the contrast a
ring-suppression ablation needs to expose.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np
import pytest
from scipy import ndimage


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance criterion verdicts after the test summary."""
    for modname in ("test_acceptance", "tests.test_acceptance"):
        mod = sys.modules.get(modname)
        lines = getattr(mod, "_ACCEPT_LOG", None)
        if lines:
            terminalreporter.section("acceptance criteria")
            for line in lines:
                terminalreporter.write_line(line)
            break


@dataclass
class Phantom:
    rgb: np.ndarray          # (H, W, 3) uint8
    fov: np.ndarray          # bool
    gt: np.ndarray           # bool, vessel pixels inside FOV
    blobs: np.ndarray        # bool, bright-lesion pixels
    ring_band: np.ndarray    # bool, blob-boundary band where ringing shows
    green: np.ndarray        # float64 scene (pre-quantization), for reference


SEED = 20260817

# (r0, c0, r1, c1, width); widths 4-5 kept short so wide-vessel
# interiors stay a minor share of the ground truth.
_SEGMENTS = (
    (40.0, 40.0, 100.0, 100.0, 5.0),
    (60.0, 36.0, 60.0, 116.0, 4.0),
    (100.0, 30.0, 100.0, 226.0, 3.0),
    (150.0, 30.0, 226.0, 106.0, 3.0),
    (30.0, 150.0, 226.0, 150.0, 2.0),
    (170.0, 36.0, 170.0, 120.0, 2.0),
    (170.0, 140.0, 170.0, 220.0, 1.0),
    (206.0, 60.0, 206.0, 140.0, 1.0),
)

# (r, c, radius)
_BLOBS = ((137.0, 70.0, 13.0), (80.0, 195.0, 12.0), (195.0, 170.0, 11.0))

_SIZE = 256
_FOV_RADIUS = 118.0
_BACKGROUND = 30.0
_BLOB_HEIGHT = 30.0
_SURROUND = 2.0

# Peak darkening per vessel width; wider vessels are deeper, like real ones.
_DEPTHS = {1.0: 16.0, 2.0: 19.0, 3.0: 22.0, 4.0: 25.0, 5.0: 25.0}


def _segment_distance(rr, cc, r0, c0, r1, c1):
    """Distance from every pixel to the segment (r0,c0)-(r1,c1)."""
    dr, dc = r1 - r0, c1 - c0
    length2 = dr * dr + dc * dc
    t = ((rr - r0) * dr + (cc - c0) * dc) / length2
    t = np.clip(t, 0.0, 1.0)
    pr, pc = r0 + t * dr, c0 + t * dc
    return np.hypot(rr - pr, cc - pc)


def build_phantom(seed: int = SEED) -> Phantom:
    rng = np.random.default_rng(seed)
    rr, cc = np.mgrid[0:_SIZE, 0:_SIZE].astype(np.float64)
    center = (_SIZE - 1) / 2.0
    radial = np.hypot(rr - center, cc - center)
    fov = radial <= _FOV_RADIUS

    texture = ndimage.gaussian_filter(rng.normal(0.0, 1.0, (_SIZE, _SIZE)), 8.0)
    texture *= 3.0 / max(texture.std(), 1e-9)
    illumination = 3.0 * (1.0 - (radial / _FOV_RADIUS) ** 2)
    scene = _BACKGROUND + texture + illumination

    gt = np.zeros((_SIZE, _SIZE), dtype=bool)
    for r0, c0, r1, c1, width in _SEGMENTS:
        d = _segment_distance(rr, cc, r0, c0, r1, c1)
        stencil = d <= width / 2.0
        scene[stencil] -= _DEPTHS[width]
        gt |= stencil

    blobs = np.zeros((_SIZE, _SIZE), dtype=bool)
    for br, bc, brad in _BLOBS:
        blobs |= np.hypot(rr - br, cc - bc) <= brad
    scene[blobs] += _BLOB_HEIGHT

    scene += rng.normal(0.0, 1.5, (_SIZE, _SIZE))
    scene = np.where(fov, scene, _SURROUND)
    green = np.clip(scene, 0.0, 255.0)

    gt &= fov
    if (gt & blobs).any():
        raise AssertionError("phantom geometry overlap: vessels inside blobs")

    g8 = green.round().astype(np.uint8)
    rgb = np.stack(
        [
            np.clip(0.55 * green + 20.0, 0, 255).round().astype(np.uint8),
            g8,
            np.clip(0.35 * green + 10.0, 0, 255).round().astype(np.uint8),
        ],
        axis=2,
    )

    # Band just outside each blob where the ringing artifact concentrates:
    # 2..4 px from the blob edge, clear of any true vessel neighborhood.
    dist_out = ndimage.distance_transform_edt(~blobs)
    band = (dist_out >= 2.0) & (dist_out <= 4.0) & fov
    gt_clearance = ndimage.binary_dilation(gt, iterations=3)
    band &= ~gt_clearance

    return Phantom(rgb=rgb, fov=fov, gt=gt, blobs=blobs, ring_band=band, green=green)


@pytest.fixture(scope="session")
def phantom() -> Phantom:
    return build_phantom()
