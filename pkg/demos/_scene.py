"""Synthetic fundus scene shared by the demo scripts.

Dark vessel segments of widths 1-5 and bright circular blobs on a
textured, vignetted background inside a circular field of view. The
photometry is deliberately underexposed (background ~30 of 255): in
that regime the log transform stretches vessel contrast far more than
blob contrast, which is what makes the blob-ring suppression visible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

SIZE = 256
FOV_RADIUS = 118.0
BACKGROUND = 30.0
BLOB_HEIGHT = 30.0
SURROUND = 2.0

SEGMENTS = (
    (40.0, 40.0, 100.0, 100.0, 5.0),
    (60.0, 36.0, 60.0, 116.0, 4.0),
    (100.0, 30.0, 100.0, 226.0, 3.0),
    (150.0, 30.0, 226.0, 106.0, 3.0),
    (30.0, 150.0, 226.0, 150.0, 2.0),
    (170.0, 36.0, 170.0, 120.0, 2.0),
    (170.0, 140.0, 170.0, 220.0, 1.0),
    (206.0, 60.0, 206.0, 140.0, 1.0),
)
BLOBS = ((137.0, 70.0, 13.0), (80.0, 195.0, 12.0), (195.0, 170.0, 11.0))
DEPTHS = {1.0: 16.0, 2.0: 19.0, 3.0: 22.0, 4.0: 25.0, 5.0: 25.0}


@dataclass
class Scene:
    rgb: np.ndarray
    fov: np.ndarray
    gt: np.ndarray
    blobs: np.ndarray
    ring_band: np.ndarray
    green: np.ndarray


def _segment_distance(rr, cc, r0, c0, r1, c1):
    dr, dc = r1 - r0, c1 - c0
    t = np.clip(((rr - r0) * dr + (cc - c0) * dc) / (dr * dr + dc * dc), 0.0, 1.0)
    return np.hypot(rr - (r0 + t * dr), cc - (c0 + t * dc))


def make_fundus(seed: int = 7) -> Scene:
    rng = np.random.default_rng(seed)
    rr, cc = np.mgrid[0:SIZE, 0:SIZE].astype(np.float64)
    center = (SIZE - 1) / 2.0
    radial = np.hypot(rr - center, cc - center)
    fov = radial <= FOV_RADIUS

    texture = ndimage.gaussian_filter(rng.normal(0.0, 1.0, (SIZE, SIZE)), 8.0)
    texture *= 3.0 / max(texture.std(), 1e-9)
    scene = BACKGROUND + texture + 3.0 * (1.0 - (radial / FOV_RADIUS) ** 2)

    gt = np.zeros((SIZE, SIZE), dtype=bool)
    for r0, c0, r1, c1, width in SEGMENTS:
        stencil = _segment_distance(rr, cc, r0, c0, r1, c1) <= width / 2.0
        scene[stencil] -= DEPTHS[width]
        gt |= stencil

    blobs = np.zeros((SIZE, SIZE), dtype=bool)
    for br, bc, brad in BLOBS:
        blobs |= np.hypot(rr - br, cc - bc) <= brad
    scene[blobs] += BLOB_HEIGHT

    scene += rng.normal(0.0, 1.5, (SIZE, SIZE))
    green = np.clip(np.where(fov, scene, SURROUND), 0.0, 255.0)
    gt &= fov

    g8 = green.round().astype(np.uint8)
    rgb = np.stack(
        [
            np.clip(0.55 * green + 20.0, 0, 255).round().astype(np.uint8),
            g8,
            np.clip(0.35 * green + 10.0, 0, 255).round().astype(np.uint8),
        ],
        axis=2,
    )

    dist_out = ndimage.distance_transform_edt(~blobs)
    band = (dist_out >= 2.0) & (dist_out <= 4.0) & fov
    band &= ~ndimage.binary_dilation(gt, iterations=3)
    return Scene(rgb=rgb, fov=fov, gt=gt, blobs=blobs, ring_band=band, green=green)
