"""
A small engraving-detection benchmark
=====================================

Two training and two evaluation maps, PI and PD_AGG features, RUSBoost,
repeated randomized training subsets, DSC, a Wilcoxon test between the
two descriptors, and Fisher / Gini importance maps over the PI grid.

The acceptance suite runs the full-size version (512x512 maps, 128-pixel
patches); this one uses 256x256 maps and 64-pixel patches to finish in
about a minute.
"""

from pathlib import Path

import numpy as np

from surftopo import ExperimentPlan, FeatureConfig, PiConfig, RUSBoostConfig, describe, patch_diagrams
from surftopo import fisher_map, run_experiment, train_rusboost, wilcoxon_signed_rank
from surftopo.evaluation import format_table
from surftopo.synthetic import BenchmarkSpec, benchmark_maps
from surftopo.render import render_grid

out = Path("demo_output")
out.mkdir(exist_ok=True)

maps = {mid: (d, m) for mid, d, m in benchmark_maps(BenchmarkSpec(n_maps=4, size=256, seed=1))}
train, held_out = ("map00", "map01"), ("map02", "map03")

# diagrams once, descriptors many times
diagrams = patch_diagrams(maps, FeatureConfig(patch_size=64, patch_step=16, bounds_from=train))
plan = ExperimentPlan(train, held_out, repetitions=10)

rows = []
for label, cfg in [("PD_AGG", FeatureConfig(descriptor="pd_agg")),
                   ("PI 8x8", FeatureConfig(pi=PiConfig(8, 0.001))),
                   ("PI 16x16", FeatureConfig(pi=PiConfig(16, 0.001)))]:
    rows.append(({"descriptor": label}, run_experiment(plan, describe(diagrams, cfg), RUSBoostConfig())))
print(format_table(rows))

w, p = wilcoxon_signed_rank(rows[2][1].dsc_values, rows[0][1].dsc_values)
print(f"PI 16x16 vs PD_AGG over paired repetitions: W+ = {w}, p = {p:.4f}")

# where in the PI do the classes differ?
feats = describe(diagrams, FeatureConfig(pi=PiConfig(16, 0.001)))
X = np.vstack([feats[m].X for m in train])
y = np.concatenate([feats[m].labels for m in train])
render_grid(fisher_map(X, y, (16, 16)), out / "fisher.png", "Fisher discriminant", cmap="magma",
            xlabel="birth bin", ylabel="death bin")
model = train_rusboost(X, y, RUSBoostConfig())
render_grid(model.feature_importance.reshape(16, 16), out / "importance.png", "Gini importance", cmap="magma",
            xlabel="birth bin", ylabel="death bin")
print("wrote", out / "fisher.png", "and", out / "importance.png")
