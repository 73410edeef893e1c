"""Command-line front end.

Subcommands: segment, mask, eval, calibrate, roc. Pipeline parameters
can come from a config file (key = value lines) with flags taking
precedence. Batch inputs come from a dataset manifest; single images
via --image. Exit codes: 0 success, 1 any processing failure, 2 usage
or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import load_manifest, resolve_gt
from .errors import VesselSegError
from .evaluate import (
    ROC_THRESHOLDS,
    aggregate,
    calibrate_threshold,
    confusion,
    measures,
    roc_curve,
)
from .lineop import LineOpParams
from .pipeline import MethodConfig, segment
from .raster import (
    compute_fov_mask,
    load_mask_png,
    load_rgb,
    read_response_grid,
    save_mask_png,
    save_plane_png,
    write_response_grid,
)
from .tvfilter import TvParams


class _UsageError(Exception):
    pass


# ---------------------------------------------------------------- config

_CONFIG_KEYS = {
    "method": str,
    "threshold": float,
    "weber_k": float,
    "boundary_iterations": int,
    "kmeans_max_iter": int,
    "tv_iterations": int,
    "tv_a": float,
    "neighborhood": int,
    "lambda_mode": str,
    "lambda_value": float,
    "lambda_period": int,
    "lambda_floor": float,
    "window_sizes": "sizes",
    "angles": int,
}


def _coerce(key: str, value: str):
    kind = _CONFIG_KEYS[key]
    try:
        if kind == "sizes":
            return tuple(int(v) for v in value.replace(",", " ").split())
        return kind(value)
    except ValueError as exc:
        raise _UsageError(f"bad value for {key}: {value}") from exc


def _parse_config_file(path: Path) -> dict:
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise _UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise _UsageError(f"{path}:{lineno}: unknown key '{key}'")
        out[key] = _coerce(key, value)
    return out


def _add_pipeline_args(p: argparse.ArgumentParser, require_method: bool) -> None:
    g = p.add_argument_group("pipeline")
    g.add_argument("--method", choices=("kmeans", "tv"), required=require_method)
    g.add_argument("--config", type=Path, help="config file of 'key = value' lines; flags win")
    g.add_argument("--threshold", type=float)
    g.add_argument("--weber-k", dest="weber_k", type=float)
    g.add_argument("--boundary-iterations", dest="boundary_iterations", type=int)
    g.add_argument("--kmeans-max-iter", dest="kmeans_max_iter", type=int)
    g.add_argument("--tv-iterations", dest="tv_iterations", type=int)
    g.add_argument("--tv-a", dest="tv_a", type=float)
    g.add_argument("--neighborhood", type=int, choices=(4, 8))
    g.add_argument("--lambda-mode", dest="lambda_mode", choices=("auto", "fixed"))
    g.add_argument("--lambda-value", dest="lambda_value", type=float)
    g.add_argument("--lambda-period", dest="lambda_period", type=int)
    g.add_argument("--lambda-floor", dest="lambda_floor", type=float)
    g.add_argument("--window-sizes", dest="window_sizes", type=str, help="e.g. 5,11,15")
    g.add_argument("--angles", type=int)


def _build_config(args) -> MethodConfig:
    merged = {}
    if getattr(args, "config", None) is not None:
        merged.update(_parse_config_file(args.config))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = _coerce(key, flag) if key == "window_sizes" and isinstance(flag, str) else flag
    if "method" not in merged:
        raise _UsageError("--method is required (flag or config file)")
    tv = TvParams()
    lineop = LineOpParams()
    cfg = MethodConfig(method=merged["method"], tv=tv, lineop=lineop)
    simple = {
        "threshold": "threshold",
        "weber_k": "weber_k",
        "boundary_iterations": "boundary_iterations",
        "kmeans_max_iter": "kmeans_max_iter",
    }
    for key, attr in simple.items():
        if key in merged:
            setattr(cfg, attr, merged[key])
    tv_map = {
        "tv_iterations": "iterations",
        "tv_a": "a",
        "neighborhood": "neighborhood",
        "lambda_mode": "lambda_mode",
        "lambda_value": "lambda_value",
        "lambda_period": "lambda_update_period",
        "lambda_floor": "lambda_floor",
    }
    for key, attr in tv_map.items():
        if key in merged:
            setattr(tv, attr, merged[key])
    if "window_sizes" in merged:
        lineop.window_sizes = tuple(merged["window_sizes"])
    if "angles" in merged:
        lineop.n_angles = merged["angles"]
    try:
        cfg.validate()
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    return cfg


# ---------------------------------------------------------------- inputs

def _gather_inputs(args):
    """Yield (id, image path, dataset mask path or None)."""
    if getattr(args, "image", None) is not None and getattr(args, "manifest", None) is not None:
        raise _UsageError("give either --image or --manifest, not both")
    if getattr(args, "image", None) is not None:
        mask = getattr(args, "mask", None)
        return [(Path(args.image).stem, Path(args.image), Path(mask) if mask else None)]
    if getattr(args, "manifest", None) is not None:
        manifest = load_manifest(args.manifest)
        if getattr(args, "tag", None):
            manifest = manifest.subset(args.tag)
            if not manifest.entries:
                raise _UsageError(f"no manifest entries carry tag '{args.tag}'")
        return [
            (e.id, manifest.image_path(e), manifest.mask_path(e))
            for e in manifest.entries
        ]
    raise _UsageError("an input is required: --image or --manifest")


def _fov_for(img, mask_path, use_dataset_masks: bool):
    if mask_path is not None and use_dataset_masks:
        fov = load_mask_png(mask_path)
        if fov.shape != img.shape[:2]:
            raise VesselSegError(f"mask {mask_path} does not match image dimensions")
        return fov, "dataset"
    return compute_fov_mask(img), "computed"


def _run_pool(items, worker, threads):
    """Run worker over items keeping input order; collect (id, error) failures."""
    results = []
    errors = []
    max_workers = threads if threads and threads > 0 else (os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [(item[0], pool.submit(worker, *item)) for item in items]
        for image_id, fut in futures:
            try:
                results.append((image_id, fut.result()))
            except Exception as exc:  # per-image isolation
                errors.append((image_id, exc))
    return results, errors


def _report_errors(errors, out_dir: Path | None) -> None:
    for image_id, exc in errors:
        print(f"error: {image_id}: {exc}", file=sys.stderr)
    if out_dir is not None and errors:
        log = out_dir / "errors.log"
        with open(log, "a") as fh:
            for image_id, exc in errors:
                fh.write(f"{image_id}\t{type(exc).__name__}\t{exc}\n")


# ---------------------------------------------------------------- segment

def cmd_segment(args) -> int:
    cfg = _build_config(args)
    items = _gather_inputs(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    debug_dir = Path(args.debug_dir) if args.debug_dir else None
    if debug_dir:
        debug_dir.mkdir(parents=True, exist_ok=True)

    def worker(image_id, image_path, mask_path):
        img = load_rgb(image_path)
        fov, fov_source = _fov_for(img, mask_path, not args.no_dataset_masks)
        result = segment(img, fov, cfg, debug=debug_dir is not None)
        save_mask_png(result.mask, out_dir / f"{image_id}_vessels.png")
        if not args.no_response:
            write_response_grid(result.response, out_dir / f"{image_id}_response.f32")
        sidecar = dict(result.provenance)
        sidecar["image"] = str(image_path)
        sidecar["fov_source"] = fov_source
        with open(out_dir / f"{image_id}_vessels.json", "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
        if debug_dir is not None:
            for name, plane in result.planes.items():
                if getattr(plane, "ndim", 0) != 2:
                    continue
                write_response_grid(plane, debug_dir / f"{image_id}_{name}.f32")
                save_plane_png(plane, debug_dir / f"{image_id}_{name}.png")
            save_plane_png(np.where(fov, result.response, result.response[fov].min()),
                           debug_dir / f"{image_id}_response.png")
        return True

    _, errors = _run_pool(items, worker, args.threads)
    _report_errors(errors, out_dir)
    return 1 if errors else 0


# ---------------------------------------------------------------- mask

def cmd_mask(args) -> int:
    items = _gather_inputs(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def worker(image_id, image_path, _mask_path):
        img = load_rgb(image_path)
        save_mask_png(compute_fov_mask(img), out_dir / f"{image_id}_fov.png")
        return True

    _, errors = _run_pool(items, worker, args.threads)
    _report_errors(errors, out_dir)
    return 1 if errors else 0


# ---------------------------------------------------------------- eval

def _fmt(x) -> str:
    return "" if x is None else f"{x:.6f}"


def cmd_eval(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.tag:
        manifest = manifest.subset(args.tag)
        if not manifest.entries:
            raise _UsageError(f"no manifest entries carry tag '{args.tag}'")
    pred_dir = Path(args.pred)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    counts_by_id = {}
    responses = []
    gts = []
    fovs = []
    missing_responses = []
    failures = []
    for entry in manifest.entries:
        try:
            pred_path = pred_dir / f"{entry.id}_vessels.png"
            if not pred_path.is_file():
                raise VesselSegError(f"missing prediction {pred_path}")
            pred = load_mask_png(pred_path)
            gt = resolve_gt(manifest, entry.id, args.labeler)
            img = load_rgb(manifest.image_path(entry))
            fov, _src = _fov_for(img, manifest.mask_path(entry), not args.no_dataset_masks)
            c = confusion(pred, gt, fov)
            counts_by_id[entry.id] = c
            rows.append(measures(c, image_id=entry.id))
            resp_path = pred_dir / f"{entry.id}_response.f32"
            if resp_path.is_file():
                responses.append(read_response_grid(resp_path))
                gts.append(gt)
                fovs.append(fov)
            else:
                missing_responses.append(entry.id)
        except Exception as exc:
            failures.append((entry.id, exc))
    _report_errors(failures, out_dir)
    if not rows:
        print("error: no images evaluated", file=sys.stderr)
        return 1

    agg = aggregate(rows)
    with open(out_dir / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["image_id", "tp", "fp", "tn", "fn", "tp_rate", "fp_rate", "accuracy"])
        for row in rows:
            c = counts_by_id[row.image_id]
            w.writerow([row.image_id, c.tp, c.fp, c.tn, c.fn,
                        _fmt(row.tp_rate), _fmt(row.fp_rate), _fmt(row.accuracy)])
        w.writerow(["aggregate", "", "", "", "",
                    _fmt(agg.tp_rate), _fmt(agg.fp_rate), _fmt(agg.accuracy)])

    if responses and not missing_responses:
        curve = roc_curve(responses, gts, fovs)
        _write_roc_csv(out_dir / "roc.csv", curve)
        print(f"auc {curve.auc:.5f}")
    elif missing_responses:
        print(f"warning: no roc.csv ({len(missing_responses)} response grids missing)",
              file=sys.stderr)

    print(f"aggregate n={len(rows)} tp_rate={_fmt(agg.tp_rate)} "
          f"fp_rate={_fmt(agg.fp_rate)} accuracy={_fmt(agg.accuracy)}")
    return 1 if failures else 0


def _write_roc_csv(path: Path, curve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", "fp_rate", "tp_rate"])
        for t, fp, tp in zip(curve.thresholds, curve.fp_rates, curve.tp_rates):
            w.writerow([f"{t:.6f}", f"{fp:.6f}", f"{tp:.6f}"])


# ------------------------------------------------------- calibrate / roc

def _segment_manifest(args, cfg):
    manifest = load_manifest(args.manifest)
    if args.tag:
        manifest = manifest.subset(args.tag)
        if not manifest.entries:
            raise _UsageError(f"no manifest entries carry tag '{args.tag}'")

    def worker(image_id, image_path, mask_path):
        img = load_rgb(image_path)
        fov, _src = _fov_for(img, mask_path, not args.no_dataset_masks)
        result = segment(img, fov, cfg)
        gt = resolve_gt(manifest, image_id, args.labeler)
        return result.response, gt, fov

    items = [(e.id, manifest.image_path(e), manifest.mask_path(e)) for e in manifest.entries]
    results, errors = _run_pool(items, worker, args.threads)
    _report_errors(errors, None)
    if errors:
        raise VesselSegError(f"{len(errors)} image(s) failed")
    responses = [r[1][0] for r in results]
    gts = [r[1][1] for r in results]
    fovs = [r[1][2] for r in results]
    return responses, gts, fovs


def cmd_calibrate(args) -> int:
    cfg = _build_config(args)
    responses, gts, fovs = _segment_manifest(args, cfg)
    t, achieved = calibrate_threshold(responses, gts, fovs, target_fn_rate=args.target)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        curve = roc_curve(responses, gts, fovs)
        with open(out_dir / "calibration.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["threshold", "mean_fn_rate"])
            for thr, tp in zip(curve.thresholds, curve.tp_rates):
                w.writerow([f"{thr:.6f}", f"{1.0 - tp:.6f}"])
    print(f"threshold {t:.3f} mean_fn_rate {achieved:.5f} target {args.target}")
    return 0


def cmd_roc(args) -> int:
    cfg = _build_config(args)
    responses, gts, fovs = _segment_manifest(args, cfg)
    curve = roc_curve(responses, gts, fovs, ROC_THRESHOLDS)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_roc_csv(out_dir / "roc.csv", curve)
    print(f"auc {curve.auc:.5f}")
    return 0


# ---------------------------------------------------------------- parser

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vesselseg",
        description="Retinal vessel segmentation with bright-lesion suppression.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common_io = argparse.ArgumentParser(add_help=False)
    common_io.add_argument("--threads", type=int, default=0, help="0 = all cores")
    common_io.add_argument("--no-dataset-masks", action="store_true",
                           help="always compute the FOV, ignoring manifest masks")
    common_io.add_argument("--tag", help="restrict a manifest to entries with this tag")

    p = sub.add_parser("segment", parents=[common_io], help="segment vessels")
    p.add_argument("--image", help="single input image")
    p.add_argument("--mask", help="FOV mask for --image")
    p.add_argument("--manifest", help="dataset manifest")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--debug-dir", help="write stage planes here")
    p.add_argument("--no-response", action="store_true", help="skip response grids")
    _add_pipeline_args(p, require_method=True)
    p.set_defaults(fn=cmd_segment)

    p = sub.add_parser("mask", parents=[common_io], help="compute FOV masks")
    p.add_argument("--image")
    p.add_argument("--manifest")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(fn=cmd_mask)

    p = sub.add_parser("eval", parents=[common_io], help="score predictions against ground truth")
    p.add_argument("--manifest", required=True)
    p.add_argument("--pred", required=True, help="directory of segment outputs")
    p.add_argument("--labeler", required=True, help="ground-truth key, e.g. catB or viewer1")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("calibrate", parents=[common_io],
                       help="pick the threshold hitting a target miss rate")
    p.add_argument("--manifest", required=True)
    p.add_argument("--labeler", required=True)
    p.add_argument("--target", type=float, default=0.02)
    p.add_argument("-o", "--out", help="also write calibration.csv here")
    _add_pipeline_args(p, require_method=True)
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("roc", parents=[common_io], help="sweep thresholds and write a ROC curve")
    p.add_argument("--manifest", required=True)
    p.add_argument("--labeler", required=True)
    p.add_argument("-o", "--out", required=True)
    _add_pipeline_args(p, require_method=True)
    p.set_defaults(fn=cmd_roc)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VesselSegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
