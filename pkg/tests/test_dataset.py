"""Tests for manifest parsing, validation, and ground-truth resolution."""
import numpy as np
import pytest
from PIL import Image

from vesselseg.dataset import load_manifest, resolve_gt, save_manifest
from vesselseg.errors import ManifestError


def _write_rgb(path, w=10, h=8):
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.zeros((h, w, 3), dtype=np.uint8)
    arr[..., 1] = 90
    Image.fromarray(arr).save(path)


def _write_gray(path, arr):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="L").save(path)


def _build_dataset(tmp_path):
    """Two-entry layout exercising every manifest key."""
    data = tmp_path / "data"
    _write_rgb(data / "images/01.png")
    _write_rgb(data / "images/02.png")
    _write_gray(data / "mask/01_mask.png", np.full((8, 10), 255))
    gt = np.zeros((8, 10), dtype=np.uint8)
    gt[3, 2:7] = 255
    _write_gray(data / "gtA/01.png", gt)
    _write_gray(data / "gtB/01.png", gt)
    _write_gray(data / "gtA/02.png", gt)
    text = "\n".join(
        [
            "# demo dataset",
            "root: data",
            "",
            "entry: 01",
            "image: images/01.png",
            "mask: mask/01_mask.png",
            "gt.catA: gtA/01.png",
            "gt.catB: gtB/01.png",
            "tags: pathological, heldout",
            "entry: 02",
            "image: images/02.png",
            "gt.catA: gtA/02.png",
        ]
    )
    mpath = tmp_path / "set.manifest"
    mpath.write_text(text + "\n")
    return mpath


def test_load_full_grammar(tmp_path):
    m = load_manifest(_build_dataset(tmp_path))
    assert m.ids() == ["01", "02"]
    assert m.root == (tmp_path / "data").resolve()
    e1 = m.get("01")
    assert e1.mask == "mask/01_mask.png"
    assert e1.gt == {"catA": "gtA/01.png", "catB": "gtB/01.png"}
    assert e1.tags == ("pathological", "heldout")
    e2 = m.get("02")
    assert e2.mask is None and e2.tags == ()
    assert m.image_path(e2) == m.root / "images/02.png"
    assert m.mask_path(e2) is None
    assert m.labelers() == ["catA", "catB"]


def test_save_load_round_trip(tmp_path):
    m = load_manifest(_build_dataset(tmp_path))
    out = tmp_path / "copy.manifest"
    save_manifest(m, out)
    again = load_manifest(out)
    assert again.root == m.root
    assert again.entries == m.entries


def test_subset_by_tag(tmp_path):
    m = load_manifest(_build_dataset(tmp_path))
    sub = m.subset("pathological")
    assert sub.ids() == ["01"]
    assert sub.root == m.root
    assert m.subset("nonexistent").ids() == []


def test_unknown_id_and_labeler(tmp_path):
    m = load_manifest(_build_dataset(tmp_path))
    with pytest.raises(ManifestError):
        m.get("99")
    with pytest.raises(ManifestError):
        m.gt_path(m.get("02"), "catB")


def test_duplicate_id_rejected(tmp_path):
    p = _build_dataset(tmp_path)
    p.write_text(p.read_text() + "entry: 01\nimage: images/01.png\n")
    with pytest.raises(ManifestError, match="duplicate id '01'"):
        load_manifest(p)


def test_missing_files_listed_by_id(tmp_path):
    p = _build_dataset(tmp_path)
    (tmp_path / "data/images/02.png").unlink()
    (tmp_path / "data/gtB/01.png").unlink()
    with pytest.raises(ManifestError) as exc_info:
        load_manifest(p)
    msg = str(exc_info.value)
    assert "02: images/02.png" in msg
    assert "01: gtB/01.png" in msg


def test_no_entries_rejected(tmp_path):
    p = tmp_path / "empty.manifest"
    p.write_text("# nothing here\nroot: .\n")
    with pytest.raises(ManifestError, match="no entries"):
        load_manifest(p)


def test_entry_requires_image(tmp_path):
    p = tmp_path / "noimg.manifest"
    p.write_text("entry: 01\nmask: m.png\n")
    with pytest.raises(ManifestError, match="has no image"):
        load_manifest(p)


def test_default_root_is_manifest_dir(tmp_path):
    _write_rgb(tmp_path / "im.png")
    p = tmp_path / "local.manifest"
    p.write_text("entry: a\nimage: im.png\n")
    assert load_manifest(p).root == tmp_path.resolve()


def test_relative_root_resolves_against_manifest(tmp_path):
    _write_rgb(tmp_path / "data/im.png")
    nested = tmp_path / "manifests"
    nested.mkdir()
    p = nested / "set.manifest"
    p.write_text("root: ../data\nentry: a\nimage: im.png\n")
    assert load_manifest(p).root == (tmp_path / "data").resolve()


def test_absolute_root_kept(tmp_path):
    _write_rgb(tmp_path / "data/im.png")
    p = tmp_path / "abs.manifest"
    p.write_text(f"root: {tmp_path / 'data'}\nentry: a\nimage: im.png\n")
    assert load_manifest(p).root == tmp_path / "data"


@pytest.mark.parametrize(
    "body, pattern",
    [
        ("entry: a\nimage im.png\n", "expected 'key: value'"),
        ("image: im.png\n", "outside of an entry"),
        ("entry: a\nimage: im.png\nroot: .\n", "root must precede"),
        ("entry:\nimage: im.png\n", "empty entry id"),
        ("entry: a\nimage: im.png\ngt.: g.png\n", "empty labeler"),
        ("entry: a\nimage: im.png\ncolor: red\n", "unknown key"),
    ],
)
def test_grammar_errors(tmp_path, body, pattern):
    p = tmp_path / "bad.manifest"
    p.write_text(body)
    with pytest.raises(ManifestError, match=pattern):
        load_manifest(p)


def test_resolve_gt_binarizes(tmp_path):
    m = load_manifest(_build_dataset(tmp_path))
    gt = resolve_gt(m, "01", "catA")
    assert gt.dtype == bool
    assert gt.shape == (8, 10)
    assert gt.sum() == 5
    assert gt[3, 2:7].all()


def test_resolve_gt_dimension_mismatch(tmp_path):
    p = _build_dataset(tmp_path)
    _write_gray(tmp_path / "data/gtA/01.png", np.zeros((5, 5)))
    m = load_manifest(p)
    with pytest.raises(ManifestError, match="5x5"):
        resolve_gt(m, "01", "catA")
