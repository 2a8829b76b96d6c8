import numpy as np
import pytest

from surftopo.cubical import build_filtration
from surftopo.grid_ingest import extract_patches
from surftopo.persistence import compute_persistence, finitize
from surftopo.synthetic import (
    BenchmarkSpec, SyntheticSpec, benchmark_maps, generate, imbalanced_blobs, random_strokes,
)


def test_no_shapes_gives_empty_mask():
    depth, mask = generate(SyntheticSpec(width=64, height=48, seed=3))
    assert depth.values.shape == (48, 64)
    assert not mask.labels.any()


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(groove_depth=0.0)
    with pytest.raises(ValueError):
        SyntheticSpec(width=32, height=32, engraved_shapes=(((0, 0), (40, 5)),))
    with pytest.raises(ValueError):
        SyntheticSpec(groove_width=0.0)


def test_determinism():
    spec = SyntheticSpec(width=96, height=80, engraved_shapes=(((10, 10), (60, 70)),), seed=42)
    d1, m1 = generate(spec)
    d2, m2 = generate(spec)
    assert np.array_equal(d1.values, d2.values) and np.array_equal(m1.labels, m2.labels)
    d3, _ = generate(SyntheticSpec(width=96, height=80, engraved_shapes=spec.engraved_shapes, seed=43))
    assert not np.array_equal(d1.values, d3.values)


def test_mask_is_depressed_support():
    spec = SyntheticSpec(width=128, height=128, engraved_shapes=(((64, 10), (64, 117)),),
                         groove_width=10.0, noise_amplitude=0.0, base_amplitude=0.0,
                         peck_amplitude=0.0)
    depth, mask = generate(spec)
    assert np.all(depth.values[mask.labels == 1] < 0)
    assert np.all(depth.values[mask.labels == 0] == 0)
    assert mask.labels[64, 64] == 1 and mask.labels[40, 64] == 0


@pytest.mark.parametrize("seed", range(4))
def test_positive_fraction_close_to_target(seed):
    rng = np.random.default_rng(seed)
    shapes = random_strokes(256, 256, 20.0, 0.166, rng)
    _, mask = generate(SyntheticSpec(width=256, height=256, groove_width=20.0, engraved_shapes=shapes))
    assert abs(mask.labels.mean() - 0.166) <= 0.02


def test_benchmark_maps_seeded():
    a = benchmark_maps(BenchmarkSpec(n_maps=2, size=256, seed=5))
    b = benchmark_maps(BenchmarkSpec(n_maps=2, size=256, seed=5))
    assert [m for m, _, _ in a] == ["map00", "map01"]
    for (_, da, ma), (_, db, mb) in zip(a, b):
        assert np.array_equal(da.values, db.values) and np.array_equal(ma.labels, mb.labels)
        assert abs(ma.labels.mean() - 0.166) <= 0.02


def h0_total_persistence(values):
    d = finitize(compute_persistence(build_filtration(values)), "cap_at_max").select([0])
    return float(d.lengths.sum())


def test_engraved_patches_have_more_h0_persistence():
    wins = 0
    for seed in range(10):
        (mid, depth, mask), = benchmark_maps(BenchmarkSpec(n_maps=1, size=384, seed=seed))
        patches = extract_patches(depth, mask, size=64, step=8)
        rng = np.random.default_rng(seed)
        means = []
        for label in (1, 0):
            pool = [p for p in patches if p.label == label]
            chosen = rng.choice(len(pool), size=100, replace=False)
            means.append(np.mean([h0_total_persistence(pool[i].values) for i in chosen]))
        wins += means[0] > means[1]
    assert wins >= 9


def test_unreachable_fraction_rejected():
    with pytest.raises(ValueError):
        random_strokes(128, 128, 40.0, 0.166, np.random.default_rng(0))


def test_imbalanced_blobs():
    X, y = imbalanced_blobs(600, seed=1)
    assert X.shape == (600, 2) and y.sum() == round(0.166 * 600)
    assert X[y == 1].mean() > X[y == 0].mean() + 1.0
    X2, y2 = imbalanced_blobs(600, seed=1)
    assert np.array_equal(X, X2) and np.array_equal(y, y2)
