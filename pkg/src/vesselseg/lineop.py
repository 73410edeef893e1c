"""Multi-scale oriented line operator.

For a window size s and angle t, the line strength L_t at a pixel is
the mean of s unit-spaced samples along a length-s segment through the
pixel at angle t, read with bilinear interpolation. The winning
direction gives L_w = max_t L_t, and N_w is the mean of the s x s
neighborhood aligned with the winner (all s parallel lines, the winner
included). The response is R = L_w - N_w, summed across window sizes.

Because every sample sits at a constant fractional offset from the
output pixel, each L_t (and each oriented window mean) is exactly a
correlation of the plane with a small sparse kernel assembled from
2x2 bilinear-weight stamps. Kernels are applied over an edge-padded
copy of the plane, which realizes clamp-to-edge sampling without ever
reading undefined pixels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal


@dataclass
class LineOpParams:
    window_sizes: tuple[int, ...] = (5, 11, 15)
    n_angles: int = 12

    def validate(self) -> None:
        if len(self.window_sizes) == 0:
            raise ValueError("window_sizes must be nonempty")
        for s in self.window_sizes:
            if s < 3 or s % 2 == 0:
                raise ValueError("window sizes must be odd and >= 3")
        if self.n_angles < 2:
            raise ValueError("n_angles must be >= 2")


@dataclass
class LineResponse:
    """Single-scale response plane and the winning angle index per pixel."""

    response: np.ndarray
    winner_angle: np.ndarray


def _snap(v: float) -> float:
    """Collapse float noise around integer offsets (sin/cos of right angles)."""
    r = round(v)
    return float(r) if abs(v - r) < 1e-12 else v


def _stamp(taps: dict, dy: float, dx: float, weight: float) -> None:
    """Accumulate the 2x2 bilinear weights of one sample into taps."""
    dy = _snap(dy)
    dx = _snap(dx)
    y0 = math.floor(dy)
    x0 = math.floor(dx)
    fy = dy - y0
    fx = dx - x0
    for iy, wy in ((y0, 1.0 - fy), (y0 + 1, fy)):
        if wy == 0.0:
            continue
        for ix, wx in ((x0, 1.0 - fx), (x0 + 1, fx)):
            if wx == 0.0:
                continue
            key = (iy, ix)
            taps[key] = taps.get(key, 0.0) + weight * wy * wx

def _taps_to_kernel(taps: dict) -> tuple[np.ndarray, tuple[int, int]]:
    ry = max(abs(iy) for iy, _ in taps)
    rx = max(abs(ix) for _, ix in taps)
    k = np.zeros((2 * ry + 1, 2 * rx + 1), dtype=np.float64)
    for (iy, ix), w in taps.items():
        k[ry + iy, rx + ix] = w
    return k, (ry, rx)


@lru_cache(maxsize=32)
def _kernels(size: int, n_angles: int):
    """Line-mean and window-mean correlation kernels for every angle.

    Angle j is j*180/n_angles degrees from the horizontal axis; lines
    are undirected so half a turn covers all orientations.
    """
    half = size // 2
    line_k = []
    win_k = []
    for j in range(n_angles):
        theta = math.pi * j / n_angles
        dy, dx = math.sin(theta), math.cos(theta)
        ny, nx = dx, -dy  # unit normal
        taps_line: dict = {}
        taps_win: dict = {}
        for t in range(-half, half + 1):
            _stamp(taps_line, t * dy, t * dx, 1.0 / size)
            for s in range(-half, half + 1):
                _stamp(taps_win, t * dy + s * ny, t * dx + s * nx, 1.0 / (size * size))
        line_k.append(_taps_to_kernel(taps_line))
        win_k.append(_taps_to_kernel(taps_win))
    return tuple(line_k), tuple(win_k)


def _correlate_clamped(plane: np.ndarray, kernel: np.ndarray, radius: tuple[int, int]) -> np.ndarray:
    ry, rx = radius
    padded = np.pad(plane, ((ry, ry), (rx, rx)), mode="edge")
    return signal.fftconvolve(padded, kernel[::-1, ::-1], mode="valid")


def line_response(plane: np.ndarray, size: int, params: LineOpParams) -> LineResponse:
    """R = L_w - N_w at one window size, plus the winner-angle plane."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ValueError("expected a 2-D plane")
    if size < 3 or size % 2 == 0:
        raise ValueError("size must be odd and >= 3")
    if size > min(plane.shape):
        raise ValueError("window size exceeds plane dimensions")
    line_k, win_k = _kernels(size, params.n_angles)

    best_l = None
    best_idx = None
    best_n = None
    for j in range(params.n_angles):
        lk, lr = line_k[j]
        wk, wr = win_k[j]
        l_j = _correlate_clamped(plane, lk, lr)
        n_j = _correlate_clamped(plane, wk, wr)
        if best_l is None:
            best_l = l_j
            best_n = n_j
            best_idx = np.zeros(plane.shape, dtype=np.int16)
        else:
            better = l_j > best_l  # strict: ties keep the smaller index
            best_l = np.where(better, l_j, best_l)
            best_n = np.where(better, n_j, best_n)
            best_idx[better] = j
    return LineResponse(response=best_l - best_n, winner_angle=best_idx)


def multi_scale_response(plane: np.ndarray, params: LineOpParams) -> np.ndarray:
    """Sum of single-scale responses over params.window_sizes."""
    params.validate()
    total = None
    for size in params.window_sizes:
        r = line_response(plane, size, params).response
        total = r if total is None else total + r
    return total
