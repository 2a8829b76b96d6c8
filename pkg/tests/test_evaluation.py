import itertools

import numpy as np
import pytest
from scipy import stats

from surftopo.descriptors import PiConfig, persistence_image
from surftopo.evaluation import (
    ExperimentPlan, RunResult, _signed_ranks, dsc, fisher_map, format_table, run_experiment, summarize,
    wilcoxon_signed_rank, write_results_csv,
)
from surftopo.features import FeatureConfig, PatchFeatures, extract_features
from surftopo.persistence import PersistenceDiagram
from surftopo.rusboost import RUSBoostConfig
from surftopo.synthetic import BenchmarkSpec, benchmark_maps


def test_dsc_unit_cases():
    x = np.array([1, 1, 0, 0, 1, 1, 0, 0])
    assert dsc(x, x) == 1.0
    assert dsc([1, 1, 0, 0], [0, 0, 1, 1]) == 0.0
    assert dsc([1, 1, 1, 1, 0, 0], [1, 1, 0, 0, 1, 1]) == 0.5
    assert dsc([0, 0, 0], [0, 0, 0]) == 1.0
    with pytest.raises(ValueError):
        dsc([1, 0], [1, 0, 0])


def test_dsc_symmetry_and_identity(rng):
    for _ in range(200):
        a = rng.uniform(size=12) < 0.4
        b = rng.uniform(size=12) < 0.4
        assert dsc(a, b) == dsc(b, a)
        assert (dsc(a, b) == 1.0) == bool(np.array_equal(a, b))
        assert 0.0 <= dsc(a, b) <= 1.0


def test_plan_validation():
    with pytest.raises(ValueError):
        ExperimentPlan(("a",), ("a",))
    with pytest.raises(ValueError):
        ExperimentPlan(("a",), ("b",), class1_fraction=0.0)
    with pytest.raises(ValueError):
        ExperimentPlan(("a",), ("b",), repetitions=0)


def toy_features(rng):
    out = {}
    for mid in ("a", "b", "c"):
        y = (rng.uniform(size=60) < 0.3).astype(np.int64)
        X = rng.standard_normal((60, 3)) + 2.0 * y[:, None]
        out[mid] = PatchFeatures(mid, np.zeros((60, 2), dtype=np.int64), y, X, ("f0", "f1", "f2"))
    return out


def test_run_experiment_oracle_stub(rng):
    feats = toy_features(rng)
    truth = {tuple(np.round(x, 12)): label for pf in feats.values() for x, label in zip(pf.X, pf.labels)}

    def oracle(X, y, cfg):
        return lambda rows: np.array([truth[tuple(np.round(r, 12))] for r in rows])

    result = run_experiment(ExperimentPlan(("a",), ("b", "c"), repetitions=4), feats, trainer=oracle)
    assert result.dsc_values == (1.0,) * 4 and result.median == 1.0 and result.std == 0.0


def test_run_experiment_all_negative_stub(rng):
    feats = toy_features(rng)
    stub = lambda X, y, cfg: (lambda rows: np.zeros(len(rows), dtype=int))
    result = run_experiment(ExperimentPlan(("a",), ("b",), repetitions=3), feats, trainer=stub)
    assert result.dsc_values == (0.0, 0.0, 0.0)


def test_run_experiment_errors(rng):
    feats = toy_features(rng)
    with pytest.raises(KeyError):
        run_experiment(ExperimentPlan(("a",), ("zz",)), feats)
    empty = dict(feats, c=PatchFeatures("c", np.zeros((0, 2)), np.zeros(0, dtype=np.int64),
                                        np.zeros((0, 3)), ("f0", "f1", "f2")))
    with pytest.raises(ValueError):
        run_experiment(ExperimentPlan(("a",), ("c",)), empty)


def test_run_experiment_reproducible(rng):
    feats = toy_features(rng)
    plan = ExperimentPlan(("a", "b"), ("c",), repetitions=3, seed=11)
    cfg = RUSBoostConfig(n_rounds=10)
    assert run_experiment(plan, feats, cfg) == run_experiment(plan, feats, cfg)


def test_run_experiment_cross_validation(rng):
    feats = toy_features(rng)
    plan = ExperimentPlan(("a", "b"), ("c",), repetitions=2, cv_grid=((5, 1), (10, 2)), folds=3)
    result = run_experiment(plan, feats, RUSBoostConfig())
    assert len(result.chosen_params) == 2
    assert all(p in ((5, 1), (10, 2)) for p in result.chosen_params)


def test_run_result_summaries_recompute():
    r = RunResult.from_values([0.7, 0.9, 0.8, 0.75])
    assert (r.median, r.std) == summarize(r.dsc_values)
    assert r.median == pytest.approx(0.775)
    assert summarize([0.4]) == (0.4, 0.0)


def test_results_csv_and_table(tmp_path):
    rows = [({"descriptor": "pi", "res": 16}, RunResult.from_values([0.5, 0.7])),
            ({"descriptor": "pd_agg", "res": 0}, RunResult.from_values([0.4, 0.6]))]
    path = tmp_path / "r.csv"
    write_results_csv(path, rows)
    lines = path.read_text().splitlines()
    assert lines[0] == "descriptor,res,dsc_00,dsc_01,median,std"
    assert lines[1].startswith("pi,16,0.5,0.7,0.6,")
    table = format_table(rows)
    assert "0.600 ± 0.141" in table and "pd_agg" in table


def test_fisher_identical_classes_zero():
    X = np.tile(np.arange(4.0), (6, 1))
    y = np.array([0, 1, 0, 1, 0, 1])
    assert not fisher_map(X, y).any()


def test_fisher_single_shifted_pixel():
    base = np.array([-1.0, 1.0])
    a = np.column_stack([base, base, base + 3.0, base])  # unit population variance
    b = np.column_stack([base, base, base, base])
    f = fisher_map(np.vstack([a, b]), np.array([1, 1, 0, 0]))
    assert f.shape == (2, 2)
    assert f.ravel().tolist() == [0.0, 0.0, 4.5, 0.0]


def test_fisher_constant_shift_invariance(rng):
    X = rng.uniform(size=(40, 9))
    y = (rng.uniform(size=40) < 0.5).astype(int)
    y[:2] = [0, 1]
    shifted = X + np.array([0.0, 0.25, 0, 0, 4.0, 0, 0, 0, 0.5])
    assert np.allclose(fisher_map(X, y), fisher_map(shifted, y), rtol=1e-9, atol=1e-12)


def test_fisher_persistence_images():
    d = PersistenceDiagram.from_points([(0, 0.2, 0.6)])
    e = PersistenceDiagram.from_points([(0, 0.5, 0.6)])
    imgs = [persistence_image(x, PiConfig(resolution=4, sigma=0.05)) for x in (d, e, d, e)]
    assert fisher_map(imgs, [1, 0, 1, 0]).shape == (4, 4)
    mixed = imgs[:1] + [persistence_image(e, PiConfig(resolution=4, sigma=0.1))]
    with pytest.raises(ValueError):
        fisher_map(mixed, [1, 0])
    with pytest.raises(ValueError):
        fisher_map(np.zeros((3, 4)), [1, 1, 1])


@pytest.mark.slow
def test_fisher_peak_away_from_border():
    for seed in range(10):
        (mid, depth, mask), = benchmark_maps(BenchmarkSpec(n_maps=1, size=256, seed=seed))
        cfg = FeatureConfig(patch_size=64, patch_step=16, pi=PiConfig(16, 0.01))
        pf = extract_features({mid: (depth, mask)}, cfg)[mid]
        score = fisher_map(pf.X, pf.labels, (16, 16))
        r, c = np.unravel_index(np.argmax(score), score.shape)
        assert 0 < r < 15 and 0 < c < 15, (seed, r, c)


def brute_force_p(signed_ranks):
    ranks = np.abs(signed_ranks)
    observed = signed_ranks[signed_ranks > 0].sum()
    totals = np.array([np.dot(ranks, s) for s in itertools.product((0, 1), repeat=ranks.size)])
    lower = np.mean(totals <= observed + 1e-9)
    upper = np.mean(totals >= observed - 1e-9)
    return observed, min(1.0, 2 * min(lower, upper))


@pytest.mark.parametrize("n", range(5, 13))
def test_wilcoxon_exact_matches_enumeration(rng, n):
    for _ in range(5):
        a = rng.integers(0, 6, n).astype(float)  # small integers force ties and zeros
        b = rng.integers(0, 6, n).astype(float)
        if np.count_nonzero(a - b) == 0:
            continue
        w_ref, p_ref = brute_force_p(_signed_ranks(a, b))
        w, p = wilcoxon_signed_rank(a, b)
        assert w == w_ref
        assert p == pytest.approx(p_ref, abs=1e-12)


def test_wilcoxon_shift_example(rng):
    b = rng.standard_normal(10)
    w, p = wilcoxon_signed_rank(b + 0.5, b)
    assert w == 55.0 and p == pytest.approx(2 / 1024, abs=1e-15)


def test_wilcoxon_matches_scipy(rng):
    a, b = rng.standard_normal(15), rng.standard_normal(15)
    assert wilcoxon_signed_rank(a, b)[1] == pytest.approx(stats.wilcoxon(a, b, method="exact").pvalue)
    a, b = rng.standard_normal(60), rng.standard_normal(60) + 0.2
    ref = stats.wilcoxon(a, b, method="approx", correction=False)
    assert wilcoxon_signed_rank(a, b)[1] == pytest.approx(ref.pvalue, rel=1e-9)


def test_wilcoxon_preconditions():
    with pytest.raises(ValueError):
        wilcoxon_signed_rank(np.arange(4.0), np.zeros(4))
    with pytest.raises(ValueError):
        wilcoxon_signed_rank(np.ones(6), np.ones(6))
    with pytest.raises(ValueError):
        wilcoxon_signed_rank(np.ones(6), np.ones(7))


def test_wilcoxon_null_uniformity():
    # continuous data, so p-values on the exact branch are only discretely uniform;
    # n = 20 gives a fine enough lattice for the Kolmogorov check
    rng = np.random.default_rng(2024)
    ps = [wilcoxon_signed_rank(rng.standard_normal(20), rng.standard_normal(20))[1] for _ in range(500)]
    assert stats.kstest(ps, "uniform").pvalue >= 0.05
