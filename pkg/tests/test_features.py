import numpy as np
import pytest

from surftopo.clbp import ClbpConfig
from surftopo.descriptors import PiConfig
from surftopo.features import (
    FeatureConfig, describe, extract_features, feature_names, patch_diagrams, prepare_patches,
    read_feature_csv, resolve_pi, write_feature_csv,
)
from surftopo.grid_ingest import DepthMap, LabelMask


@pytest.fixture
def maps(rng):
    out = {}
    for mid in ("a", "b"):
        values = rng.standard_normal((48, 40))
        labels = np.zeros((48, 40), dtype=np.uint8)
        labels[:24] = 1
        out[mid] = (DepthMap(values), LabelMask(labels))
    return out


def test_config_validation():
    with pytest.raises(ValueError):
        FeatureConfig(input="rgb")
    with pytest.raises(ValueError):
        FeatureConfig(descriptor="betti")
    with pytest.raises(ValueError):
        FeatureConfig(homology="h2")


def test_feature_names():
    assert len(feature_names(FeatureConfig(descriptor="pd_agg"))) == 12
    names = feature_names(FeatureConfig(descriptor="both", homology="per_dim", pi=PiConfig(resolution=4)))
    assert len(names) == 2 * (12 + 16)
    assert names[0] == "h0_pd_agg_00" and names[-1] == "h1_pi_0015"


def test_patch_grid_and_labels(maps):
    cfg = FeatureConfig(patch_size=16, patch_step=8, descriptor="pd_agg")
    feats = extract_features(maps, cfg)
    pf = feats["a"]
    assert len(pf) == 5 * 4
    assert pf.origins[:, 0].tolist() == sorted(pf.origins[:, 0].tolist())
    # windows starting at rows 0 and 8 lie in the labeled half; row 16 straddles it at exactly 50%
    assert pf.labels.tolist() == [1] * 12 + [0] * 8


def test_threads_do_not_change_output(maps):
    cfg = FeatureConfig(patch_size=16, patch_step=8, pi=PiConfig(8, 0.05))
    one = extract_features(maps, cfg, threads=1)
    many = extract_features(maps, cfg, threads=4)
    for mid in maps:
        assert np.array_equal(one[mid].X, many[mid].X)
        assert np.array_equal(one[mid].origins, many[mid].origins)


def test_global_bounds_from_subset(maps):
    cfg = FeatureConfig(patch_size=16, patch_step=16, bounds_from=("a",))
    patches = prepare_patches(maps, cfg)
    lo, hi = maps["a"][0].values.min(), maps["a"][0].values.max()
    for mid in ("a", "b"):
        raw = maps[mid][0].values
        for p in patches[mid]:
            r, c = p.origin
            assert np.allclose(p.values, (raw[r:r + 16, c:c + 16] - lo) / (hi - lo), rtol=0, atol=1e-12)
    with pytest.raises(KeyError):
        prepare_patches(maps, FeatureConfig(patch_size=16, bounds_from=("zz",)))


def test_describe_reuses_diagrams(maps):
    cfg = FeatureConfig(patch_size=16, patch_step=16)
    diagrams = patch_diagrams(maps, cfg)
    for res in (4, 8):
        c = FeatureConfig(patch_size=16, patch_step=16, pi=PiConfig(res, 0.05))
        f = describe(diagrams, c)
        assert f["a"].X.shape == (len(diagrams["a"].diagrams), res * res)
        assert np.all(f["a"].X >= 0)


def test_weighted_pi_resolves_max_persistence(maps):
    cfg = FeatureConfig(patch_size=16, patch_step=16, pi=PiConfig(weighted=True))
    diagrams = patch_diagrams(maps, cfg)
    pi = resolve_pi(cfg, diagrams)
    assert 0 < pi.max_persistence <= 1.0
    fixed = FeatureConfig(patch_size=16, patch_step=16, pi=PiConfig(weighted=True), pi_max_persistence=0.3)
    assert resolve_pi(fixed, diagrams).max_persistence == 0.3


def test_zero_length_points_dropped_by_default(maps):
    kept = patch_diagrams(maps, FeatureConfig(patch_size=16, patch_step=16, drop_zero_length=False))
    dropped = patch_diagrams(maps, FeatureConfig(patch_size=16, patch_step=16))
    for dk, dd in zip(kept["a"].diagrams, dropped["a"].diagrams):
        assert np.all(dd.lengths > 0)
        assert dd.multiset() == dk.without_zero_length().multiset()


def test_clbp_input_crops_mask(maps):
    cfg = FeatureConfig(patch_size=16, patch_step=8, input="clbp_s", clbp=ClbpConfig(radius=2),
                        normalization="minmax", descriptor="pd_agg")
    pf = extract_features(maps, cfg)["a"]
    # a 48x40 map shrinks to 44x36 before windowing
    assert len(pf) == 4 * 3


def test_per_dim_blocks(maps):
    cfg = FeatureConfig(patch_size=16, patch_step=16, homology="per_dim", descriptor="pd_agg")
    pf = extract_features(maps, cfg)["a"]
    # exactly one essential H0 class per patch under cap_at_max, so the h0 count is >= 1
    assert np.all(pf.X[:, 0] >= 1)


def test_feature_csv_round_trip(tmp_path, maps):
    cfg = FeatureConfig(patch_size=16, patch_step=16, descriptor="both", pi=PiConfig(4, 0.05))
    feats = extract_features(maps, cfg)
    path = tmp_path / "f.csv"
    write_feature_csv(path, feats.values())
    back = read_feature_csv(path)
    assert list(back) == ["a", "b"]
    for mid in feats:
        assert np.array_equal(back[mid].X, feats[mid].X)
        assert np.array_equal(back[mid].labels, feats[mid].labels)
        assert back[mid].names == feats[mid].names
