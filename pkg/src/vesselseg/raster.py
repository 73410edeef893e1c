"""Raster loading and the field-of-view (FOV) mask.

Conventions used throughout the package:

* an RGB image is a ``(H, W, 3)`` uint8 array,
* a gray plane is a ``(H, W)`` float64 array, row-major,
* a mask is a ``(H, W)`` bool array (True = inside).
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import DegenerateMaskError, ImageFormatError

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def load_rgb(path: str | Path) -> np.ndarray:
    """Decode an image file to an (H, W, 3) uint8 array.

    Any format Pillow understands is accepted (PNG, PPM, TIFF, JPEG, GIF).
    Grayscale and paletted inputs are promoted to RGB.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, SyntaxError) as exc:
        raise ImageFormatError(f"cannot decode {path}: {exc}") from exc
    except OSError as exc:
        # Pillow signals truncated payloads as OSError during decode.
        raise ImageFormatError(f"cannot decode {path}: {exc}") from exc
    return arr


def green_channel(img: np.ndarray) -> np.ndarray:
    """Extract the green samples of an RGB image as a float64 plane."""
    _check_rgb(img)
    return img[:, :, 1].astype(np.float64)


def otsu_threshold(values: np.ndarray) -> float:
    """Otsu's threshold over a 256-bin histogram of values in [0, 255].

    Returns the bin value t maximizing between-class variance; the
    foreground is values > t.
    """
    hist, _ = np.histogram(values, bins=256, range=(0.0, 256.0))
    hist = hist.astype(np.float64)
    total = hist.sum()
    if total == 0:
        raise ValueError("empty histogram")
    levels = np.arange(256, dtype=np.float64)
    weight_lo = np.cumsum(hist)
    weight_hi = total - weight_lo
    sum_lo = np.cumsum(hist * levels)
    mean_all = sum_lo[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu_lo = sum_lo / weight_lo
        mu_hi = (mean_all - sum_lo) / weight_hi
        between = weight_lo * weight_hi * (mu_lo - mu_hi) ** 2
    between[~np.isfinite(between)] = -1.0
    return float(np.argmax(between))


def compute_fov_mask(img: np.ndarray) -> np.ndarray:
    """Estimate the circular field of view of a fundus photograph.

    Steps: mean-of-channels intensity, Otsu threshold, 5x5 box majority
    vote, 5x5 binary erosion, then keep the largest 4-connected
    component. Parameter-free by design.
    """
    _check_rgb(img)
    intensity = img.astype(np.float64).mean(axis=2)
    t = otsu_threshold(intensity)
    raw = intensity > t
    if not raw.any():
        raise DegenerateMaskError("empty foreground after threshold")
    # Majority vote over the 5x5 box: strictly more than half of 25.
    smooth = ndimage.uniform_filter(raw.astype(np.float64), size=5, mode="constant") > 0.5
    eroded = ndimage.binary_erosion(smooth, structure=np.ones((5, 5), dtype=bool))
    if not eroded.any():
        raise DegenerateMaskError("empty foreground after erosion")
    labels, n = ndimage.label(eroded, structure=FOUR_CONNECTED)
    if n == 1:
        return labels == 1
    counts = np.bincount(labels.ravel())
    counts[0] = 0
    return labels == int(np.argmax(counts))


def save_mask_png(mask: np.ndarray, path: str | Path) -> None:
    """Write a binary mask as an 8-bit PNG (True -> 255)."""
    arr = (np.asarray(mask, dtype=bool).astype(np.uint8)) * 255
    Image.fromarray(arr, mode="L").save(Path(path))


def load_mask_png(path: str | Path) -> np.ndarray:
    """Read a mask raster; any nonzero sample counts as True."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"))
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, SyntaxError, OSError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise ImageFormatError(f"cannot decode {path}: {exc}") from exc
    return arr > 0


def save_plane_png(plane: np.ndarray, path: str | Path) -> None:
    """Write a min-max normalized 8-bit preview of a gray plane.

    Lossy; intended for visual inspection only.
    """
    plane = np.asarray(plane, dtype=np.float64)
    lo = float(plane.min())
    hi = float(plane.max())
    if hi > lo:
        scaled = (plane - lo) / (hi - lo)
    else:
        scaled = np.zeros_like(plane)
    Image.fromarray((scaled * 255.0).round().astype(np.uint8), mode="L").save(Path(path))


def write_response_grid(plane: np.ndarray, path: str | Path) -> None:
    """Write a float32 binary grid: uint32 width, uint32 height (little
    endian), then row-major float32 samples."""
    plane = np.asarray(plane)
    h, w = plane.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", w, h))
        fh.write(plane.astype("<f4").tobytes(order="C"))


def read_response_grid(path: str | Path) -> np.ndarray:
    """Read a grid written by write_response_grid, as float64."""
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise ImageFormatError(f"truncated grid header in {path}")
        w, h = struct.unpack("<II", header)
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != w * h:
        raise ImageFormatError(f"grid payload size mismatch in {path}")
    return data.reshape(h, w).astype(np.float64)


def _check_rgb(img: np.ndarray) -> None:
    if not (isinstance(img, np.ndarray) and img.ndim == 3 and img.shape[2] == 3):
        raise ValueError("expected an (H, W, 3) RGB array")
