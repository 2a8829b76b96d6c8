import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from surftopo.grid_ingest import (
    DepthMap, LabelMask, extract_patches, global_bounds, load_depth_map, load_label_mask,
    normalize_patch, patch_count, save_depth_map, save_label_mask,
)


def test_text_matrix_verbatim(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("0 1\n2 3\n")
    dm = load_depth_map(path, "text-matrix")
    assert dm.values.tolist() == [[0, 1], [2, 3]]
    assert (dm.width, dm.height) == (2, 2)


def test_text_matrix_ragged_rows(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("0 1\n2\n")
    with pytest.raises(ValueError, match="ragged"):
        load_depth_map(path)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_depth_map(tmp_path / "nope.txt")


def test_png16_scaling(tmp_path):
    raw = np.array([[65535, 32768], [0, 65535]], dtype=np.uint16)
    path = tmp_path / "d.png"
    Image.fromarray(raw).save(path)
    dm = load_depth_map(path)
    assert dm.values[0, 0] == 1.0
    assert dm.values[0, 1] == 32768 / 65535
    assert dm.values[0, 1] == pytest.approx(0.50001, abs=1e-5)
    assert dm.values[1, 0] == 0.0


def test_png16_all_max(tmp_path):
    path = tmp_path / "d.png"
    Image.fromarray(np.full((3, 4), 65535, dtype=np.uint16)).save(path)
    assert np.all(load_depth_map(path).values == 1.0)


def test_rgb_png_rejected(tmp_path):
    path = tmp_path / "rgb.png"
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(path)
    with pytest.raises(ValueError, match="grayscale"):
        load_depth_map(path)


def test_png16_roundtrip(tmp_path, rng):
    dm = DepthMap(rng.integers(0, 65536, size=(5, 7)) / 65535.0)
    save_depth_map(dm, tmp_path / "x.png")
    assert np.array_equal(load_depth_map(tmp_path / "x.png").values, dm.values)


def test_text_roundtrip_exact(tmp_path, rng):
    dm = DepthMap(rng.normal(size=(6, 3)))
    save_depth_map(dm, tmp_path / "x.txt")
    assert np.array_equal(load_depth_map(tmp_path / "x.txt").values, dm.values)


def test_mask_png(tmp_path):
    raw = np.array([[0, 1], [255, 0]], dtype=np.uint8)
    Image.fromarray(raw).save(tmp_path / "m.png")
    assert load_label_mask(tmp_path / "m.png").labels.tolist() == [[0, 1], [1, 0]]
    save_label_mask(LabelMask(raw), tmp_path / "m2.png")
    assert np.array_equal(load_label_mask(tmp_path / "m2.png").labels, LabelMask(raw).labels)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        DepthMap(np.array([[0.0, np.nan]]))


def test_depth_map_is_immutable():
    dm = DepthMap(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        dm.values[0, 0] = 1.0


@pytest.mark.parametrize("side, expected", [(128, 1), (160, 9)])
def test_patch_counts(side, expected):
    patches = extract_patches(DepthMap(np.zeros((side, side))), size=128, step=16)
    assert len(patches) == expected
    assert all(p.size == 128 and p.label is None for p in patches)


def test_all_zero_mask_labels_zero():
    dm = DepthMap(np.zeros((160, 160)))
    patches = extract_patches(dm, LabelMask(np.zeros((160, 160))), 128, 16, 0.5)
    assert [p.label for p in patches] == [0] * 9


def test_label_threshold_rule():
    mask = np.zeros((4, 4), dtype=np.uint8)
    mask[:, :2] = 1
    dm = DepthMap(np.zeros((4, 4)))
    labels = lambda thr: [p.label for p in extract_patches(dm, LabelMask(mask), 2, 1, thr)]
    # windows are fully (1.0), half (0.5) or not (0.0) covered
    assert labels(0.5) == [1, 1, 0] * 3
    assert labels(0.51) == [1, 0, 0] * 3


def test_extract_errors():
    dm = DepthMap(np.zeros((10, 10)))
    with pytest.raises(ValueError):
        extract_patches(dm, size=11)
    with pytest.raises(ValueError):
        extract_patches(dm, LabelMask(np.zeros((10, 9))), size=4)
    with pytest.raises(ValueError):
        extract_patches(dm, size=4, step=0)
    with pytest.raises(ValueError):
        extract_patches(dm, size=4, label_threshold=0.0)


@settings(max_examples=60, deadline=None)
@given(h=st.integers(1, 40), w=st.integers(1, 40), size=st.integers(1, 12), step=st.integers(1, 9),
       seed=st.integers(0, 2**16))
def test_patch_count_formula_and_exact_windows(h, w, size, step, seed):
    if size > min(h, w):
        return
    values = np.random.default_rng(seed).normal(size=(h, w))
    patches = extract_patches(DepthMap(values), size=size, step=step)
    assert len(patches) == ((h - size) // step + 1) * ((w - size) // step + 1) == patch_count(h, w, size, step)
    for p in patches:
        r, c = p.origin
        assert r % step == 0 and c % step == 0
        assert r + size <= h and c + size <= w
        assert np.array_equal(p.values, values[r:r + size, c:c + size])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**16), t1=st.floats(0.01, 1.0), t2=st.floats(0.01, 1.0))
def test_labeling_is_monotone_in_threshold(seed, t1, t2):
    lo, hi = sorted((t1, t2))
    rng = np.random.default_rng(seed)
    mask = LabelMask(rng.random((20, 20)) < 0.4)
    dm = DepthMap(np.zeros((20, 20)))
    low = [p.label for p in extract_patches(dm, mask, 6, 2, lo)]
    high = [p.label for p in extract_patches(dm, mask, 6, 2, hi)]
    assert all(h <= l for l, h in zip(low, high))


def test_normalize_minmax_example():
    p = extract_patches(DepthMap(np.array([[0.0, 2.0], [4.0, 8.0]])), size=2)[0]
    out = normalize_patch(p, "minmax")
    assert out.values.tolist() == [[0, 0.25], [0.5, 1]]
    assert not out.degenerate


def test_normalize_none_is_identity():
    p = extract_patches(DepthMap(np.array([[3.0, 1.0], [4.0, 1.5]])), size=2)[0]
    assert normalize_patch(p, "none") is p


def test_normalize_constant_patch_flags_degeneracy():
    p = extract_patches(DepthMap(np.full((2, 2), 7.0)), size=2)[0]
    out = normalize_patch(p, "minmax")
    assert out.values.tolist() == [[0, 0], [0, 0]]
    assert out.degenerate


def test_normalize_global():
    maps = [DepthMap(np.array([[1.0, 3.0]])), DepthMap(np.array([[5.0, 2.0]]))]
    bounds = global_bounds(maps)
    assert bounds == (1.0, 5.0)
    p = extract_patches(maps[0], size=1, step=1)[1]
    assert normalize_patch(p, "global", bounds).values.tolist() == [[0.5]]
    with pytest.raises(ValueError):
        normalize_patch(p, "global")


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_minmax_range(seed):
    values = np.random.default_rng(seed).normal(size=(5, 5))
    out = normalize_patch(extract_patches(DepthMap(values), size=5)[0], "minmax")
    assert out.values.min() == 0.0 and out.values.max() == 1.0
