"""Topological texture descriptors for depth-map patches.

Cubical persistence over image patches, persistence images and PD_AGG
statistics, CLBP code maps, a RUSBoost classifier and the evaluation
protocol around them.
"""

from .clbp import ClbpConfig, ClbpMaps, clbp_maps, clbp_to_patch
from .cubical import CubicalFiltration, betti_numbers, build_filtration
from .descriptors import PD_AGG_NAMES, PersistenceImage, PiConfig, pd_agg, persistence_image, quadrature_oracle_pi
from .evaluation import ExperimentPlan, RunResult, dsc, fisher_map, run_experiment, wilcoxon_signed_rank
from .features import FeatureConfig, PatchFeatures, describe, extract_features, patch_diagrams
from .grid_ingest import (
    DepthMap, LabelMask, Patch, extract_patches, load_depth_map, load_label_mask, normalize_patch,
    save_depth_map, save_label_mask,
)
from .persistence import PersistenceDiagram, compute_persistence, finitize, oracle_persistence
from .rusboost import BoostedEnsemble, RUSBoostConfig, gini_importance, load_model, predict, save_model, train_rusboost
from .synthetic import BenchmarkSpec, SyntheticSpec, benchmark_maps, generate

__version__ = "0.1.0"
