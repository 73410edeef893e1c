"""Pixel-level evaluation against manual labelings, FOV-restricted.

Measures follow the usual segmentation bookkeeping: tp_rate = tp/(tp+fn),
fp_rate = fp/(fp+tn), accuracy = (tp+tn)/|FOV|. ROC curves sweep 121
thresholds over the normalized response range [-2, 4], average rates
across images per threshold, and integrate by the trapezoid rule after
anchoring the endpoints at (0,0) and (1,1).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ROC_THRESHOLDS = np.linspace(-2.0, 4.0, 121)


@dataclass
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def fn_rate(self) -> float | None:
        """Miss rate fn/(fn+tp); None when the image has no vessel pixels."""
        pos = self.tp + self.fn
        return None if pos == 0 else self.fn / pos


@dataclass
class EvalRow:
    image_id: str | None
    tp_rate: float | None
    fp_rate: float | None
    accuracy: float


@dataclass
class RocCurve:
    thresholds: np.ndarray
    fp_rates: np.ndarray  # per threshold, averaged over images
    tp_rates: np.ndarray
    points: list  # anchored (fp, tp) pairs, fp non-decreasing
    auc: float


def confusion(pred: np.ndarray, gt: np.ndarray, fov: np.ndarray) -> ConfusionCounts:
    """Count tp/fp/tn/fn over FOV pixels only."""
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    fov = np.asarray(fov, dtype=bool)
    if not (pred.shape == gt.shape == fov.shape):
        raise ValueError("mask shapes differ")
    p = pred[fov]
    g = gt[fov]
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = int(np.count_nonzero(~p & ~g))
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def measures(c: ConfusionCounts, image_id: str | None = None) -> EvalRow:
    """Per-image rates; undefined rates (empty class) come back as None."""
    if c.total == 0:
        raise ValueError("empty confusion counts")
    pos = c.tp + c.fn
    neg = c.fp + c.tn
    return EvalRow(
        image_id=image_id,
        tp_rate=None if pos == 0 else c.tp / pos,
        fp_rate=None if neg == 0 else c.fp / neg,
        accuracy=(c.tp + c.tn) / c.total,
    )


def aggregate(rows: list[EvalRow]) -> EvalRow:
    """Unweighted mean over images; None entries are left out per measure."""
    if not rows:
        raise ValueError("no rows to aggregate")

    def mean_of(key):
        vals = [getattr(r, key) for r in rows if getattr(r, key) is not None]
        return None if not vals else float(np.mean(vals))

    return EvalRow(
        image_id="aggregate",
        tp_rate=mean_of("tp_rate"),
        fp_rate=mean_of("fp_rate"),
        accuracy=float(np.mean([r.accuracy for r in rows])),
    )


def _rates_per_threshold(resp, gt, fov, thresholds):
    vals = np.asarray(resp, dtype=np.float64)[fov]
    labels = np.asarray(gt, dtype=bool)[fov]
    pos = int(labels.sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        raise ValueError("ground truth needs both vessel and non-vessel pixels in FOV")
    pred = vals[None, :] >= thresholds[:, None]
    tp = (pred & labels[None, :]).sum(axis=1)
    fp = (pred & ~labels[None, :]).sum(axis=1)
    return tp / pos, fp / neg


def roc_curve(
    norm_responses: list[np.ndarray],
    gts: list[np.ndarray],
    fovs: list[np.ndarray],
    thresholds: np.ndarray | None = None,
) -> RocCurve:
    """Averaged ROC over images with trapezoidal AUC."""
    if thresholds is None:
        thresholds = ROC_THRESHOLDS
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if not (len(norm_responses) == len(gts) == len(fovs)):
        raise ValueError("per-image lists are not aligned")
    if len(norm_responses) == 0:
        raise ValueError("no images")
    tp_all = []
    fp_all = []
    for resp, gt, fov in zip(norm_responses, gts, fovs):
        fov = np.asarray(fov, dtype=bool)
        tp, fp = _rates_per_threshold(resp, gt, fov, thresholds)
        tp_all.append(tp)
        fp_all.append(fp)
    tp_mean = np.mean(tp_all, axis=0)
    fp_mean = np.mean(fp_all, axis=0)

    # Ascending threshold means descending rates; reverse for fp ascending.
    pts = list(zip(fp_mean[::-1].tolist(), tp_mean[::-1].tolist()))
    deduped = [pts[0]]
    for p in pts[1:]:
        if p != deduped[-1]:
            deduped.append(p)
    if deduped[0] != (0.0, 0.0):
        deduped.insert(0, (0.0, 0.0))
    if deduped[-1] != (1.0, 1.0):
        deduped.append((1.0, 1.0))
    fp_pts = np.array([p[0] for p in deduped])
    tp_pts = np.array([p[1] for p in deduped])
    auc = float(np.trapezoid(tp_pts, fp_pts))
    return RocCurve(
        thresholds=thresholds,
        fp_rates=fp_mean,
        tp_rates=tp_mean,
        points=deduped,
        auc=auc,
    )


def calibrate_threshold(
    norm_responses: list[np.ndarray],
    gts: list[np.ndarray],
    fovs: list[np.ndarray],
    target_fn_rate: float = 0.02,
    thresholds: np.ndarray | None = None,
) -> tuple[float, float]:
    """Threshold from the sweep grid whose mean miss rate is nearest target.

    Returns (threshold, achieved mean fn rate). Ties go to the lower
    threshold.
    """
    if thresholds is None:
        thresholds = ROC_THRESHOLDS
    thresholds = np.asarray(thresholds, dtype=np.float64)
    curve = roc_curve(norm_responses, gts, fovs, thresholds)
    fn_rates = 1.0 - curve.tp_rates
    idx = int(np.argmin(np.abs(fn_rates - target_fn_rate)))
    return float(thresholds[idx]), float(fn_rates[idx])
