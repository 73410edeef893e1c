"""Three-cluster 1-D k-means and the bright-lesion-free difference plane.

Pixels inside the FOV are grouped by intensity into vessel (dark),
background, and bright-feature clusters. Subtracting the image from the
bright cluster's mean yields a plane where vessels are the brightest
structures and bright lesions fall near or below zero, so the line
detector no longer halos around them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ClusterState:
    """Converged (or stopped) cluster means, ordered dark to bright."""

    c_v: float
    c_b: float
    c_f: float
    iterations: int
    converged: bool
    sse_history: list[float] = field(default_factory=list)

    def means(self) -> np.ndarray:
        return np.array([self.c_v, self.c_b, self.c_f], dtype=np.float64)


def _assign(values: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Nearest-mean labels; ties go to the cluster with the lower mean."""
    order = np.argsort(means, kind="stable")
    dist = np.abs(values[:, None] - means[order][None, :])
    picked = np.argmin(dist, axis=1)  # argmin takes the first == lowest mean
    return order[picked]


def kmeans3(plane: np.ndarray, fov: np.ndarray, max_iter: int = 100) -> ClusterState:
    """Cluster FOV intensities around m-s, m, m+s seeds (mean m, std s).

    Update alternates nearest-mean assignment and arithmetic-mean
    recentering until the three means stop changing. A cluster that
    empties is re-seeded to the FOV value farthest (min-distance sense)
    from the other two means, lowest value on ties, which keeps the
    iteration deterministic.
    """
    plane = np.asarray(plane, dtype=np.float64)
    fov = np.asarray(fov, dtype=bool)
    if plane.shape != fov.shape:
        raise ValueError("plane and fov shapes differ")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    pixels = plane[fov]
    if pixels.size == 0:
        raise ValueError("fov selects no pixels")

    values, counts = np.unique(pixels, return_counts=True)
    weights = counts.astype(np.float64)
    m = float(np.average(values, weights=weights))
    s = float(np.sqrt(np.average((values - m) ** 2, weights=weights)))
    means = np.array([m - s, m, m + s], dtype=np.float64)

    history: list[float] = []
    iterations = 0
    converged = False
    for _ in range(max_iter):
        iterations += 1
        labels = _assign(values, means)
        new_means = means.copy()
        empty: list[int] = []
        for i in range(3):
            sel = labels == i
            if sel.any():
                new_means[i] = np.average(values[sel], weights=weights[sel])
            else:
                empty.append(i)
        for i in empty:
            others = np.delete(new_means, i)
            gap = np.min(np.abs(values[:, None] - others[None, :]), axis=1)
            new_means[i] = values[np.argmax(gap)]  # argmax: first == lowest value
            labels = _assign(values, new_means)
        sse = float(np.sum(weights * (values - new_means[labels]) ** 2))
        history.append(sse)
        if np.array_equal(new_means, means):
            converged = True
            break
        means = new_means

    c_v, c_b, c_f = np.sort(means)
    return ClusterState(
        c_v=float(c_v),
        c_b=float(c_b),
        c_f=float(c_f),
        iterations=iterations,
        converged=converged,
        sse_history=history,
    )


def df_plane(plane: np.ndarray, state: ClusterState) -> np.ndarray:
    """Difference plane d_f = c_f - I, over every pixel of the plane."""
    plane = np.asarray(plane, dtype=np.float64)
    return state.c_f - plane
