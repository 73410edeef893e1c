"""End-to-end round trip: dataset on disk -> CLI segmentation -> metrics.

Synthesizes a three-image dataset (distinct seeds of the fundus scene),
writes the images, FOV masks, vessel ground truth, and a manifest, then
drives the command-line interface exactly as a user would: one segment
run per method, an eval run against the ground truth, and a threshold
calibration. Everything the CLI writes (masks, response grids, CSV
reports) lands under the output directory for inspection.

Run:  python3 demos/evaluation_roundtrip.py -o demo_out/roundtrip
"""
from __future__ import annotations

import argparse
import csv
from pathlib import Path

from PIL import Image

from vesselseg import cli
from vesselseg.raster import save_mask_png

from _scene import make_fundus

FAST = [
    "--boundary-iterations", "25",
    "--tv-iterations", "60",
    "--window-sizes", "5,9,13",
]


def build_dataset(root: Path, seeds: tuple[int, ...]) -> Path:
    (root / "data").mkdir(parents=True, exist_ok=True)
    lines = ["root: data", ""]
    for i, seed in enumerate(seeds, start=1):
        scene = make_fundus(seed)
        Image.fromarray(scene.rgb).save(root / "data" / f"im{i}.png")
        save_mask_png(scene.fov, root / "data" / f"im{i}_fov.png")
        save_mask_png(scene.gt, root / "data" / f"im{i}_gt.png")
        lines += [
            f"entry: im{i}",
            f"image: im{i}.png",
            f"mask: im{i}_fov.png",
            f"gt.manual: im{i}_gt.png",
            "",
        ]
    manifest = root / "dataset.txt"
    manifest.write_text("\n".join(lines))
    return manifest


def show_csv(path: Path, limit: int = 6) -> None:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    print(f"  {path.name} ({len(rows) - 1} data rows):")
    for row in rows[:limit]:
        print("    " + ", ".join(row))
    if len(rows) > limit:
        print(f"    ... {len(rows) - limit} more")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-o", "--out", default="demo_out/roundtrip")
    args = ap.parse_args()

    out = Path(args.out)
    manifest = build_dataset(out, seeds=(7, 8, 9))
    print(f"dataset: 3 images under {out / 'data'}, manifest {manifest.name}")

    for method in ("kmeans", "tv"):
        pred = out / f"pred_{method}"
        print(f"\n$ vesselseg segment --method {method} ...")
        rc = cli.main(["segment", "--method", method, "--manifest", str(manifest),
                       "--out", str(pred), *FAST])
        print(f"  exit {rc}; wrote {len(list(pred.glob('*_vessels.png')))} masks")

        print(f"$ vesselseg eval ...")
        rc = cli.main(["eval", "--manifest", str(manifest), "--pred", str(pred),
                       "--labeler", "manual", "--out", str(pred)])
        print(f"  exit {rc}")
        show_csv(pred / "metrics.csv")
        show_csv(pred / "roc.csv", limit=4)

    print("\n$ vesselseg calibrate --method kmeans --target 0.05 ...")
    rc = cli.main(["calibrate", "--method", "kmeans", "--manifest", str(manifest),
                   "--labeler", "manual", "--target", "0.05", *FAST])
    print(f"  exit {rc}")

    print(f"\nall artifacts under {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
