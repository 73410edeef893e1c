"""Manifest-driven dataset ingestion for DRIVE/STARE-style layouts.

A manifest is a line-oriented text file, one key per line:

    # comment
    root: /data/drive/test
    entry: 01_test
    image: images/01_test.tif
    mask: mask/01_test_mask.gif
    gt.catA: 1st_manual/01_manual1.gif
    gt.catB: 2nd_manual/01_manual2.gif
    tags: heldout

`entry:` starts a record; `image:` is required per record; `mask:`,
`gt.<labeler>:` and `tags:` (comma-separated) are optional. A relative
`root` is resolved against the manifest file's directory.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from .errors import ManifestError
from .raster import load_mask_png


@dataclass
class ManifestEntry:
    id: str
    image: str
    mask: str | None = None
    gt: dict[str, str] = field(default_factory=dict)
    tags: tuple[str, ...] = ()


@dataclass
class DatasetManifest:
    root: Path
    entries: list[ManifestEntry] = field(default_factory=list)

    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def get(self, image_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.id == image_id:
                return e
        raise ManifestError(f"unknown image id: {image_id}")

    def subset(self, tag: str) -> "DatasetManifest":
        picked = [e for e in self.entries if tag in e.tags]
        return DatasetManifest(root=self.root, entries=picked)

    def image_path(self, entry: ManifestEntry) -> Path:
        return self.root / entry.image

    def mask_path(self, entry: ManifestEntry) -> Path | None:
        return None if entry.mask is None else self.root / entry.mask

    def gt_path(self, entry: ManifestEntry, labeler: str) -> Path:
        if labeler not in entry.gt:
            raise ManifestError(f"entry {entry.id} has no ground truth for labeler '{labeler}'")
        return self.root / entry.gt[labeler]

    def labelers(self) -> list[str]:
        keys: list[str] = []
        for e in self.entries:
            for k in e.gt:
                if k not in keys:
                    keys.append(k)
        return keys


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse and validate a manifest file."""
    path = Path(path)
    lines = path.read_text().splitlines()
    root: Path | None = None
    entries: list[ManifestEntry] = []
    current: ManifestEntry | None = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise ManifestError(f"{path}:{lineno}: expected 'key: value'")
        key, value = line.split(":", 1)
        key = key.strip()
        value = value.strip()
        if key == "root":
            if current is not None:
                raise ManifestError(f"{path}:{lineno}: root must precede entries")
            root = Path(value)
            continue
        if key == "entry":
            if not value:
                raise ManifestError(f"{path}:{lineno}: empty entry id")
            current = ManifestEntry(id=value, image="")
            entries.append(current)
            continue
        if current is None:
            raise ManifestError(f"{path}:{lineno}: '{key}' outside of an entry")
        if key == "image":
            current.image = value
        elif key == "mask":
            current.mask = value
        elif key.startswith("gt."):
            labeler = key[3:]
            if not labeler:
                raise ManifestError(f"{path}:{lineno}: empty labeler key")
            current.gt[labeler] = value
        elif key == "tags":
            current.tags = tuple(t.strip() for t in value.split(",") if t.strip())
        else:
            raise ManifestError(f"{path}:{lineno}: unknown key '{key}'")

    if not entries:
        raise ManifestError(f"{path}: manifest has no entries")
    seen = set()
    for e in entries:
        if e.id in seen:
            raise ManifestError(f"{path}: duplicate id '{e.id}'")
        seen.add(e.id)
        if not e.image:
            raise ManifestError(f"{path}: entry '{e.id}' has no image")

    if root is None:
        root = Path(".")
    if not root.is_absolute():
        root = (path.parent / root).resolve()

    manifest = DatasetManifest(root=root, entries=entries)
    missing = []
    for e in entries:
        if not manifest.image_path(e).is_file():
            missing.append(f"{e.id}: {e.image}")
        if e.mask is not None and not manifest.mask_path(e).is_file():
            missing.append(f"{e.id}: {e.mask}")
        for labeler, rel in e.gt.items():
            if not (root / rel).is_file():
                missing.append(f"{e.id}: {rel} (gt.{labeler})")
    if missing:
        raise ManifestError(f"{path}: missing files:\n  " + "\n  ".join(missing))
    return manifest


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Serialize in the same grammar load_manifest reads."""
    out = [f"root: {manifest.root}"]
    for e in manifest.entries:
        out.append(f"entry: {e.id}")
        out.append(f"image: {e.image}")
        if e.mask is not None:
            out.append(f"mask: {e.mask}")
        for labeler, rel in e.gt.items():
            out.append(f"gt.{labeler}: {rel}")
        if e.tags:
            out.append("tags: " + ", ".join(e.tags))
    Path(path).write_text("\n".join(out) + "\n")


def resolve_gt(manifest: DatasetManifest, image_id: str, labeler: str):
    """Load one entry's ground-truth mask, binarized, dimension-checked."""
    entry = manifest.get(image_id)
    gt = load_mask_png(manifest.gt_path(entry, labeler))
    with Image.open(manifest.image_path(entry)) as im:
        w, h = im.size
    if gt.shape != (h, w):
        raise ManifestError(
            f"entry {image_id}: ground truth is {gt.shape[1]}x{gt.shape[0]}, image is {w}x{h}"
        )
    return gt
