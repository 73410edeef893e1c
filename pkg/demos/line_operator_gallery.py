"""Show how each line-operator window size responds to bars of known width.

Builds a plane of horizontal bright bars (widths 1 through 5) plus one
wide disc, runs the oriented line detector at each window size, and
tabulates the peak response over each target. The score is the best
oriented line average minus the window average, so a bar scores less as
it fills more of its window, and widening the window restores the
contrast — which is why summing several window sizes keeps thick and
thin vessels comparable. The disc scores low at every size because a
line average over an isotropic plateau barely beats the window mean.

Run:  python3 demos/line_operator_gallery.py -o demo_out/lineop
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from vesselseg.lineop import LineOpParams, line_response, multi_scale_response
from vesselseg.raster import save_plane_png

BAR_WIDTHS = (1, 2, 3, 4, 5)


def build_targets(n: int = 160) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Plane of bright horizontal bars plus one disc, with target stencils."""
    rng = np.random.default_rng(11)
    plane = rng.normal(0.0, 0.02, (n, n))
    stencils: dict[str, np.ndarray] = {}
    row = 20
    for width in BAR_WIDTHS:
        stencil = np.zeros((n, n), dtype=bool)
        stencil[row:row + width, 20:n - 20] = True
        plane[stencil] += 1.0
        stencils[f"bar w={width}"] = stencil
        row += width + 18
    rr, cc = np.mgrid[0:n, 0:n]
    disc = np.hypot(rr - (row + 14), cc - n // 2) <= 14
    plane[disc] += 1.0
    stencils["disc r=14"] = disc
    return plane, stencils


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-o", "--out", default="demo_out/lineop")
    ap.add_argument("--window-sizes", default="5,11,15")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sizes = tuple(int(s) for s in args.window_sizes.split(","))
    params = LineOpParams(window_sizes=sizes)

    plane, stencils = build_targets()
    save_plane_png(plane, out / "targets.png")

    columns = [f"window {s}" for s in sizes] + ["combined"]
    print(f"{'target':<10}" + "".join(f"{c:>12}" for c in columns))

    per_scale = []
    for size in sizes:
        resp = line_response(plane, size, params)
        per_scale.append(resp.response)
        save_plane_png(resp.response, out / f"response_w{size:02d}.png")

    combined = multi_scale_response(plane, params)
    save_plane_png(combined, out / "response_combined.png")

    for name, stencil in stencils.items():
        cells = [float(r[stencil].max()) for r in per_scale]
        cells.append(float(combined[stencil].max()))
        print(f"{name:<10}" + "".join(f"{v:>12.3f}" for v in cells))

    print("\nwithin a column the peak falls as the bar fills more of the "
          "window; within a row it recovers as the window widens. The disc "
          "trails every bar at every size.")
    print(f"wrote response planes to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
