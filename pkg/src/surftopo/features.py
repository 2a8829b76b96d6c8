"""Patch-level feature extraction: maps -> patches -> diagrams -> descriptor rows.

Diagrams are computed once per (map, input representation) and can then be
described under many descriptor configurations, which is how the
persistence-image parameter sweeps avoid recomputing persistence.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from .clbp import ClbpConfig, clbp_maps, clbp_to_patch
from .cubical import build_filtration
from .descriptors import PD_AGG_NAMES, PiConfig, pd_agg, persistence_image
from .grid_ingest import DepthMap, LabelMask, Patch, extract_patches, global_bounds, normalize_patch
from .persistence import PersistenceDiagram, compute_persistence, finitize

INPUTS = ("depth", "clbp_s", "clbp_m")
DESCRIPTORS = ("pi", "pd_agg", "both")
HOMOLOGY = ("all", "h0", "h1", "per_dim")


@dataclass(frozen=True)
class FeatureConfig:
    """Everything that determines a patch's feature row.

    ``bounds`` fixes the ``global`` normalization range; when None it is
    taken from the ``bounds_from`` maps (all maps if empty). Likewise
    ``pi.max_persistence`` for weighted images is replaced by the largest
    persistence observed over those maps unless ``pi_max_persistence`` is set.
    """

    patch_size: int = 128
    patch_step: int = 16
    label_threshold: float = 0.5
    normalization: str = "global"
    bounds: Optional[Tuple[float, float]] = None
    bounds_from: Tuple[str, ...] = ()
    input: str = "depth"
    clbp: ClbpConfig = field(default_factory=ClbpConfig)
    direction: str = "sublevel"
    finitize: str = "cap_at_max"
    drop_zero_length: bool = True
    homology: str = "all"
    descriptor: str = "pi"
    pi: PiConfig = field(default_factory=PiConfig)
    pi_max_persistence: Optional[float] = None

    def __post_init__(self):
        if self.input not in INPUTS:
            raise ValueError(f"input must be one of {INPUTS}")
        if self.descriptor not in DESCRIPTORS:
            raise ValueError(f"descriptor must be one of {DESCRIPTORS}")
        if self.homology not in HOMOLOGY:
            raise ValueError(f"homology must be one of {HOMOLOGY}")
        object.__setattr__(self, "bounds_from", tuple(self.bounds_from))


@dataclass
class PatchDiagrams:
    source_id: str
    origins: np.ndarray
    labels: np.ndarray
    diagrams: list[PersistenceDiagram]


@dataclass
class PatchFeatures:
    source_id: str
    origins: np.ndarray
    labels: np.ndarray
    X: np.ndarray
    names: Tuple[str, ...]

    def __len__(self) -> int:
        return self.labels.size


def feature_names(config: FeatureConfig) -> Tuple[str, ...]:
    blocks = 2 if config.homology == "per_dim" else 1
    names = []
    for block in range(blocks):
        prefix = f"h{block}_" if blocks == 2 else ""
        if config.descriptor in ("pd_agg", "both"):
            names += [f"{prefix}pd_agg_{i:02d}" for i in range(len(PD_AGG_NAMES))]
        if config.descriptor in ("pi", "both"):
            names += [f"{prefix}pi_{i:04d}" for i in range(config.pi.resolution ** 2)]
    return tuple(names)


def _input_map(depth: DepthMap, config: FeatureConfig) -> DepthMap:
    if config.input == "depth":
        return depth
    return clbp_to_patch(clbp_maps(depth, config.clbp), config.input[-1])


def _input_mask(mask: Optional[LabelMask], config: FeatureConfig) -> Optional[LabelMask]:
    if mask is None or config.input == "depth":
        return mask
    r = config.clbp.radius
    return LabelMask(mask.labels[r:mask.height - r, r:mask.width - r])


def _diagram(values: np.ndarray, config: FeatureConfig) -> PersistenceDiagram:
    diagram = finitize(compute_persistence(build_filtration(values, config.direction)), config.finitize)
    return diagram.without_zero_length() if config.drop_zero_length else diagram


def prepare_patches(maps: Mapping[str, Tuple[DepthMap, Optional[LabelMask]]],
                    config: FeatureConfig) -> dict[str, list[Patch]]:
    """Normalized patches of the configured input representation, per map, in origin order."""
    inputs = {mid: (_input_map(d, config), _input_mask(m, config)) for mid, (d, m) in maps.items()}
    bounds = config.bounds
    if config.normalization == "global" and bounds is None:
        ids = config.bounds_from or tuple(inputs)
        missing = [i for i in ids if i not in inputs]
        if missing:
            raise KeyError(f"bounds_from names unknown maps {missing}")
        bounds = global_bounds([inputs[i][0] for i in ids])
    out = {}
    for mid, (depth, mask) in inputs.items():
        patches = extract_patches(depth, mask, config.patch_size, config.patch_step,
                                  config.label_threshold, mid)
        out[mid] = [normalize_patch(p, config.normalization, bounds) for p in patches]
    return out


def patch_diagrams(maps: Mapping[str, Tuple[DepthMap, Optional[LabelMask]]], config: FeatureConfig,
                   threads: int = 1) -> dict[str, PatchDiagrams]:
    """Finitized persistence diagrams for every patch of every map, in origin order."""
    out = {}
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for mid, patches in prepare_patches(maps, config).items():
            # map() yields in submission order, so output order is origin order
            diagrams = list(pool.map(lambda p: _diagram(p.values, config), patches))
            labels = np.array([-1 if p.label is None else p.label for p in patches], dtype=np.int64)
            origins = np.array([p.origin for p in patches], dtype=np.int64).reshape(-1, 2)
            out[mid] = PatchDiagrams(mid, origins, labels, diagrams)
    return out


def max_persistence(diagram_sets: Sequence[PatchDiagrams]) -> float:
    best = 0.0
    for ds in diagram_sets:
        for d in ds.diagrams:
            if len(d):
                best = max(best, float(d.lengths.max()))
    return best


def resolve_pi(config: FeatureConfig, diagrams: Mapping[str, PatchDiagrams]) -> PiConfig:
    """PI config with ``max_persistence`` filled in for weighted images."""
    if not config.pi.weighted:
        return config.pi
    mp = config.pi_max_persistence
    if mp is None:
        ids = config.bounds_from or tuple(diagrams)
        mp = max_persistence([diagrams[i] for i in ids]) or 1.0
    return replace(config.pi, max_persistence=mp)


def describe_diagram(diagram: PersistenceDiagram, config: FeatureConfig,
                     pi: Optional[PiConfig] = None) -> np.ndarray:
    pi = pi or config.pi
    if config.homology == "per_dim":
        parts = [diagram.select([0]), diagram.select([1])]
    elif config.homology == "h0":
        parts = [diagram.select([0])]
    elif config.homology == "h1":
        parts = [diagram.select([1])]
    else:
        parts = [diagram]
    row = []
    for part in parts:
        if config.descriptor in ("pd_agg", "both"):
            row.append(pd_agg(part))
        if config.descriptor in ("pi", "both"):
            row.append(persistence_image(part, pi).vector)
    return np.concatenate(row)


def describe(diagrams: Mapping[str, PatchDiagrams], config: FeatureConfig) -> dict[str, PatchFeatures]:
    pi = resolve_pi(config, diagrams)
    names = feature_names(config)
    out = {}
    for mid, ds in diagrams.items():
        if ds.diagrams:
            X = np.vstack([describe_diagram(d, config, pi) for d in ds.diagrams])
        else:
            X = np.zeros((0, len(names)))
        out[mid] = PatchFeatures(mid, ds.origins, ds.labels, X, names)
    return out


def extract_features(maps: Mapping[str, Tuple[DepthMap, Optional[LabelMask]]], config: FeatureConfig,
                     threads: int = 1) -> dict[str, PatchFeatures]:
    return describe(patch_diagrams(maps, config, threads), config)


def write_feature_csv(path, features: Sequence[PatchFeatures]) -> None:
    """One row per patch: source_id, row, col, label, then the named descriptor columns."""
    features = list(features)
    if not features:
        raise ValueError("nothing to write")
    names = features[0].names
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source_id", "row", "col", "label", *names])
        for pf in features:
            if pf.names != names:
                raise ValueError("feature sets with different column schemas")
            for (r, c), label, x in zip(pf.origins, pf.labels, pf.X):
                writer.writerow([pf.source_id, int(r), int(c), int(label), *(repr(float(v)) for v in x)])


def read_feature_csv(path) -> dict[str, PatchFeatures]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:4] != ["source_id", "row", "col", "label"]:
            raise ValueError(f"{path}: not a feature CSV")
        names = tuple(header[4:])
        rows: dict[str, list] = {}
        for rec in reader:
            rows.setdefault(rec[0], []).append(rec)
    out = {}
    for mid, recs in rows.items():
        origins = np.array([[int(r[1]), int(r[2])] for r in recs], dtype=np.int64)
        labels = np.array([int(r[3]) for r in recs], dtype=np.int64)
        X = np.array([[float(v) for v in r[4:]] for r in recs], dtype=np.float64).reshape(len(recs), len(names))
        out[mid] = PatchFeatures(mid, origins, labels, X, names)
    return out
