"""Watch the total-variation filter separate lesions from vessels.

The filter minimizes a fidelity-plus-variation energy by repeated
Jacobi passes; the fitting weight lambda is re-estimated from the
current iterate every couple of passes, so smoothing dominates early
and fidelity pulls structure back as the residual grows. This script
runs the filter on the log plane of the synthetic fundus, snapshots the
iterate at a few pass counts, and prints the lambda / energy / step
trace so the two regimes are visible in numbers as well as pictures.

Run:  python3 demos/tv_iteration_study.py -o demo_out/tv
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from vesselseg.preprocess import expand_fov_boundary, weber_transform
from vesselseg.raster import save_plane_png
from vesselseg.tvfilter import (
    TvParams,
    estimate_lambda,
    estimate_noise_variance,
    run_tv,
    sd_plane,
    tv_energy,
)

from _scene import make_fundus


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-o", "--out", default="demo_out/tv")
    ap.add_argument("--iterations", type=int, default=400)
    ap.add_argument("--snapshots", default="25,100,200,400",
                    help="comma-separated pass counts to render")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    snaps = sorted({int(s) for s in args.snapshots.split(",") if s.strip()})

    scene = make_fundus(args.seed)
    v0 = expand_fov_boundary(weber_transform(scene.green), scene.fov)
    save_plane_png(v0, out / "v0.png")

    params = TvParams(iterations=args.iterations)
    sigma2 = estimate_noise_variance(v0, scene.fov)
    print(f"noise variance estimate {sigma2:.5f} on the log plane")
    print(f"{'pass':>5} {'lambda':>10} {'energy':>12} {'max step':>10}")

    prev = {"plane": v0}

    def watch(k: int, plane: np.ndarray) -> None:
        lam = estimate_lambda(plane, v0, sigma2, params, scene.fov)
        if k in snaps or k == 1:
            energy = tv_energy(plane, v0, lam, params.a, params.neighborhood)
            step = float(np.max(np.abs(plane - prev["plane"])))
            print(f"{k:>5} {lam:>10.4f} {energy:>12.2f} {step:>10.2e}")
        if k in snaps:
            save_plane_png(plane, out / f"smoothed_pass{k:03d}.png")
            diff = sd_plane(plane, v0)
            save_plane_png(np.where(scene.fov, diff, diff[scene.fov].min()),
                           out / f"difference_pass{k:03d}.png")
        prev["plane"] = plane.copy()

    v_sd = run_tv(v0, params, scene.fov, on_iteration=watch)

    diff = sd_plane(v_sd, v0)
    vessel_lift = float(diff[scene.gt].mean())
    blob_lift = float(diff[scene.blobs & scene.fov].mean())
    bg = scene.fov & ~scene.gt & ~scene.blobs
    print(f"\ndifference plane after {args.iterations} passes:")
    print(f"  mean over vessel pixels     {vessel_lift:+.4f}")
    print(f"  mean over blob pixels       {blob_lift:+.4f}")
    print(f"  mean over plain background  {float(diff[bg].mean()):+.4f}")
    print("vessels are thin against their surround, so smoothing fills them "
          "in and the difference goes positive; blobs are wide plateaus the "
          "filter keeps, so their difference stays near zero.")
    print(f"\nwrote snapshots to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
