"""Experiment protocol: subset sampling, repeated training, DSC scoring, Fisher maps, Wilcoxon tests."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import ndtr

from .descriptors import PersistenceImage
from .features import PatchFeatures
from .rusboost import RUSBoostConfig, predict, train_rusboost

# trainer(X, y, config) -> predictor(X) -> 0/1 labels
Trainer = Callable[[np.ndarray, np.ndarray, RUSBoostConfig], Callable[[np.ndarray], np.ndarray]]

DEFAULT_CV_GRID = tuple(itertools.product((50, 100, 200), (1, 3, 5)))
EXACT_MAX_N = 25


def dsc(auto, truth) -> float:
    """Dice coefficient ``2|X & Y| / (|X| + |Y|)`` of two boolean label vectors.

    Both sets empty counts as perfect agreement (1.0).
    """
    x = np.asarray(auto).astype(bool)
    y = np.asarray(truth).astype(bool)
    if x.shape != y.shape:
        raise ValueError("label vectors must cover the same patches")
    denom = int(x.sum()) + int(y.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(x & y)) / denom


@dataclass(frozen=True)
class ExperimentPlan:
    train_map_ids: Tuple[str, ...]
    eval_map_ids: Tuple[str, ...]
    class1_fraction: float = 0.5
    class2_fraction: float = 0.3
    repetitions: int = 10
    folds: int = 5
    seed: int = 0
    # (n_rounds, max_depth) candidates for cross-validation; empty disables it
    cv_grid: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "train_map_ids", tuple(self.train_map_ids))
        object.__setattr__(self, "eval_map_ids", tuple(self.eval_map_ids))
        object.__setattr__(self, "cv_grid", tuple(tuple(g) for g in self.cv_grid))
        for name in ("class1_fraction", "class2_fraction"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.cv_grid and self.folds < 2:
            raise ValueError("cross-validation needs folds >= 2")
        if set(self.train_map_ids) & set(self.eval_map_ids):
            raise ValueError("train and eval maps must be disjoint")


@dataclass(frozen=True)
class RunResult:
    dsc_values: Tuple[float, ...]
    median: float
    std: float
    chosen_params: Tuple[Tuple[int, int], ...] = field(default=())

    @classmethod
    def from_values(cls, values: Sequence[float], chosen_params=()) -> "RunResult":
        median, std = summarize(values)
        return cls(tuple(float(v) for v in values), median, std, tuple(chosen_params))


def summarize(values: Sequence[float]) -> Tuple[float, float]:
    """Median and sample standard deviation (0 for a single value), order-independent."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return float(np.median(v)), std


def rusboost_trainer(X: np.ndarray, y: np.ndarray, config: RUSBoostConfig):
    ensemble = train_rusboost(X, y, config)
    return lambda rows: predict(ensemble, rows)[1]


def _stack(features: Mapping[str, PatchFeatures], ids: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
    missing = [i for i in ids if i not in features]
    if missing:
        raise KeyError(f"no features for maps {missing}")
    X = np.vstack([features[i].X for i in ids])
    y = np.concatenate([features[i].labels for i in ids])
    return X, y


def sample_training_subset(y: np.ndarray, plan: ExperimentPlan, rng: np.random.Generator) -> np.ndarray:
    """Indices of a random class-stratified subset (class-1 and class-2 fractions from the plan)."""
    picked = []
    for label, frac in ((1, plan.class1_fraction), (0, plan.class2_fraction)):
        pool = np.flatnonzero(y == label)
        k = min(pool.size, max(1, int(round(frac * pool.size)))) if pool.size else 0
        picked.append(rng.choice(pool, size=k, replace=False))
    return np.sort(np.concatenate(picked))


def stratified_folds(y: np.ndarray, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold id per row with each class spread evenly over folds."""
    fold = np.empty(y.size, dtype=np.int64)
    for label in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == label))
        fold[idx] = np.arange(idx.size) % folds
    return fold


def cv_scores(X: np.ndarray, y: np.ndarray, base: RUSBoostConfig, grid, folds: int,
              rng: np.random.Generator, trainer: Trainer = rusboost_trainer) -> list[Tuple[RUSBoostConfig, float]]:
    """Mean cross-validated DSC for every ``(n_rounds, max_depth)`` grid point, in grid order."""
    fold = stratified_folds(y, folds, rng)
    out = []
    for n_rounds, depth in grid:
        cfg = replace(base, n_rounds=n_rounds, max_depth=depth)
        scores = []
        for f in range(folds):
            train, test = fold != f, fold == f
            if np.unique(y[train]).size < 2:
                continue
            scores.append(dsc(trainer(X[train], y[train], cfg)(X[test]), y[test]))
        out.append((cfg, float(np.mean(scores)) if scores else 0.0))
    return out


def select_params(X: np.ndarray, y: np.ndarray, base: RUSBoostConfig, grid, folds: int,
                  rng: np.random.Generator, trainer: Trainer = rusboost_trainer) -> RUSBoostConfig:
    """Grid point with the best mean cross-validated DSC (first in grid order on ties)."""
    best, best_score = base, -1.0
    for cfg, score in cv_scores(X, y, base, grid, folds, rng, trainer):
        if score > best_score:
            best, best_score = cfg, score
    return best


def run_experiment(plan: ExperimentPlan, features: Mapping[str, PatchFeatures],
                   classifier_config: RUSBoostConfig = RUSBoostConfig(),
                   trainer: Trainer = rusboost_trainer) -> RunResult:
    """Repeat: sample a training subset, (optionally) cross-validate, train, score DSC on eval maps.

    Repetition ``r`` draws with seed ``plan.seed + r``; the classifier seed
    is offset the same way, so a fixed plan is fully reproducible.
    """
    X_train, y_train = _stack(features, plan.train_map_ids)
    X_eval, y_eval = _stack(features, plan.eval_map_ids)
    if y_eval.size == 0:
        raise ValueError("evaluation set is empty")
    values, chosen = [], []
    for rep in range(plan.repetitions):
        rng = np.random.default_rng(plan.seed + rep)
        subset = sample_training_subset(y_train, plan, rng)
        cfg = replace(classifier_config, seed=classifier_config.seed + plan.seed + rep)
        if plan.cv_grid:
            cfg = select_params(X_train[subset], y_train[subset], cfg, plan.cv_grid, plan.folds, rng, trainer)
        chosen.append((cfg.n_rounds, cfg.max_depth))
        predictor = trainer(X_train[subset], y_train[subset], cfg)
        values.append(dsc(predictor(X_eval), y_eval))
    return RunResult.from_values(values, chosen)


def write_results_csv(path, rows: Sequence[Tuple[Mapping[str, object], RunResult]]) -> None:
    """Config columns, one DSC column per repetition, then median and std."""
    if not rows:
        raise ValueError("nothing to write")
    keys = list(rows[0][0])
    n_rep = max(len(r.dsc_values) for _, r in rows)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*keys, *(f"dsc_{i:02d}" for i in range(n_rep)), "median", "std"])
        for cfg, result in rows:
            vals = [repr(v) for v in result.dsc_values] + [""] * (n_rep - len(result.dsc_values))
            writer.writerow([cfg[k] for k in keys] + vals + [repr(result.median), repr(result.std)])


def format_table(rows: Sequence[Tuple[Mapping[str, object], RunResult]]) -> str:
    """Plain-text table: configuration, then ``median +- std`` DSC."""
    if not rows:
        return ""
    keys = list(rows[0][0])
    lines = [[*map(str, keys), "DSC"]]
    for cfg, r in rows:
        lines.append([str(cfg[k]) for k in keys] + [f"{r.median:.3f} ± {r.std:.3f}"])
    widths = [max(len(line[i]) for line in lines) for i in range(len(lines[0]))]
    fmt = lambda line: "  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip()
    rule = "-" * len(fmt(lines[0]))
    return "\n".join([rule, fmt(lines[0]), rule, *(fmt(l) for l in lines[1:]), rule])


def fisher_map(features, labels, shape: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """Per-pixel Fisher score ``(mu1 - mu2)^2 / (var1 + var2)`` (population variances).

    ``features`` is either a ``(n, res*res)`` matrix or a sequence of
    ``PersistenceImage`` objects sharing one config. Pixels with zero
    variance in both classes score 0.
    """
    if len(features) and isinstance(features[0], PersistenceImage):
        configs = {img.config for img in features}
        if len(configs) != 1:
            raise ValueError("persistence images were computed with different configs")
        shape = features[0].pixels.shape
        features = np.vstack([img.vector for img in features])
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if not (np.any(y == 1) and np.any(y == 0)):
        raise ValueError("fisher_map needs both classes")
    a, b = X[y == 1], X[y == 0]
    num = (a.mean(axis=0) - b.mean(axis=0)) ** 2
    den = a.var(axis=0) + b.var(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(den > 0, num / den, 0.0)
    if shape is None:
        side = math.isqrt(score.size)
        shape = (side, side) if side * side == score.size else (1, score.size)
    return score.reshape(shape)


def _signed_ranks(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1D and of equal length")
    if a.size < 5:
        raise ValueError("need at least 5 pairs")
    d = a - b
    d = d[d != 0]
    if d.size == 0:
        raise ValueError("all paired differences are zero")
    # mid-ranks of |d|
    absd = np.abs(d)
    order = np.argsort(absd, kind="stable")
    ranks = np.empty(d.size)
    sorted_abs = absd[order]
    i = 0
    while i < d.size:
        j = i
        while j + 1 < d.size and sorted_abs[j + 1] == sorted_abs[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return np.sign(d) * ranks


def _exact_null(doubled_ranks: np.ndarray) -> np.ndarray:
    """Counts of every attainable doubled W+ under random signs (subset-sum DP)."""
    counts = np.zeros(int(doubled_ranks.sum()) + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:counts.size - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(a, b) -> Tuple[float, float]:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Returns ``(W+, p)``. Zero differences are dropped and ties get mid-ranks.
    Up to 25 nonzero differences the p-value comes from the exact
    permutation distribution of W+; above that from the normal
    approximation with tie-corrected variance (no continuity correction).
    """
    signed = _signed_ranks(a, b)
    n = signed.size
    w_plus = float(signed[signed > 0].sum())
    ranks = np.abs(signed)
    if n <= EXACT_MAX_N:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = _exact_null(doubled)
        total = counts.sum()
        obs = int(round(2 * w_plus))
        lower = counts[:obs + 1].sum() / total
        upper = counts[obs:].sum() / total
        return w_plus, float(min(1.0, 2.0 * min(lower, upper)))
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
    z = (w_plus - mean) / math.sqrt(var)
    return w_plus, float(min(1.0, 2.0 * ndtr(-abs(z))))
