"""RUSBoost: AdaBoost over shallow Gini trees, each fit on a class-rebalanced undersample.

Reference: Seiffert et al., "RUSBoost: A Hybrid Approach to Alleviating
Class Imbalance", IEEE TSMC-A 40(1), 2010.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

MODEL_SCHEMA = "surftopo.rusboost/1"
# vote weight for a round whose tree makes no weighted error
ALPHA_CAP = 0.5 * math.log(1e6)


@dataclass(frozen=True)
class RUSBoostConfig:
    """Boosting hyperparameters.

    ``undersample_ratio`` is the number of majority rows kept per minority
    row in each round; ``undersample=False`` turns the learner into plain
    discrete AdaBoost with the same trees.
    """

    n_rounds: int = 50
    max_depth: int = 3
    undersample_ratio: float = 1.0
    seed: int = 0
    max_retries: int = 10
    undersample: bool = True

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if not 1 <= self.max_depth <= 8:
            raise ValueError("max_depth must be in 1..8")
        if not self.undersample_ratio > 0:
            raise ValueError("undersample_ratio must be > 0")


@dataclass
class DecisionTree:
    """Array-encoded binary tree; leaves have ``feature == -1``.

    ``value`` holds the weighted class-1 fraction at each node, ``weight``
    the node's share of the training weight and ``impurity`` its Gini index.
    Rows with ``x[feature] <= threshold`` go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    weight: np.ndarray
    impurity: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def depth(self) -> int:
        def walk(node):
            if self.feature[node] < 0:
                return 0
            return 1 + max(walk(self.left[node]), walk(self.right[node]))
        return walk(0)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active[rows] = self.feature[node[rows]] >= 0
        return node

    def vote(self, X: np.ndarray) -> np.ndarray:
        return (self.value[self.apply(X)] >= 0.5).astype(np.int64)

    def split_gains(self) -> np.ndarray:
        """Weighted impurity decrease of every node (0 at leaves)."""
        gains = np.zeros(self.n_nodes)
        split = np.flatnonzero(self.feature >= 0)
        l, r = self.left[split], self.right[split]
        gains[split] = (self.weight[split] * self.impurity[split]
                        - self.weight[l] * self.impurity[l] - self.weight[r] * self.impurity[r])
        return gains

    def to_nodes(self) -> list:
        return [[int(f), float(t), int(lc), int(rc), float(v), float(w), float(g)]
                for f, t, lc, rc, v, w, g in zip(self.feature, self.threshold, self.left, self.right,
                                                 self.value, self.weight, self.impurity)]

    @classmethod
    def from_nodes(cls, nodes: list) -> "DecisionTree":
        cols = list(zip(*nodes))
        ints = [np.array(cols[i], dtype=np.int64) for i in (0, 2, 3)]
        floats = [np.array(cols[i], dtype=np.float64) for i in (1, 4, 5, 6)]
        return cls(ints[0], floats[0], ints[1], ints[2], floats[1], floats[2], floats[3])


def _best_split(X: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Best ``(feature, threshold, gain)`` by weighted Gini, or None.

    Ties go to the lowest feature index, then the lowest threshold.
    """
    # constant columns cannot split; dropping them keeps feature order intact
    candidates = np.flatnonzero(X.max(axis=0) > X.min(axis=0))
    if candidates.size == 0 or X.shape[0] < 2:
        return None
    X = X[:, candidates]
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    w_sorted = w[order]
    w1_sorted = (w * y)[order]
    total, total1 = w.sum(), (w * y).sum()
    wl = np.cumsum(w_sorted, axis=0)[:-1]
    l1 = np.cumsum(w1_sorted, axis=0)[:-1]
    wr = total - wl
    r1 = total1 - l1
    with np.errstate(divide="ignore", invalid="ignore"):
        # w * gini = 2 * w1 * (w - w1) / w
        cost = (np.where(wl > 0, 2.0 * l1 * (wl - l1) / wl, 0.0)
                + np.where(wr > 0, 2.0 * r1 * (wr - r1) / wr, 0.0))
    parent = 2.0 * total1 * (total - total1) / total
    gain = (parent - cost) / total
    gain[xs[:-1] >= xs[1:]] = -np.inf
    flat = gain.T.reshape(-1)  # feature-major, so argmax picks the lowest feature first
    best = int(np.argmax(flat))
    if not flat[best] > 1e-15:
        return None
    column, pos = divmod(best, gain.shape[0])
    lo, hi = xs[pos, column], xs[pos + 1, column]
    threshold = 0.5 * (lo + hi)
    if not lo <= threshold < hi:
        threshold = lo
    return int(candidates[column]), float(threshold), float(flat[best])


def fit_tree(X: np.ndarray, y: np.ndarray, w: np.ndarray, max_depth: int) -> DecisionTree:
    """Depth-limited weighted-Gini tree; ``w`` need not be normalized."""
    total = w.sum()
    nodes = {k: [] for k in ("feature", "threshold", "left", "right", "value", "weight", "impurity")}

    def build(idx: np.ndarray, depth: int) -> int:
        nid = len(nodes["feature"])
        wn = w[idx].sum()
        p1 = float((w[idx] * y[idx]).sum() / wn) if wn > 0 else 0.0
        for key, val in (("feature", -1), ("threshold", 0.0), ("left", -1), ("right", -1),
                         ("value", p1), ("weight", wn / total), ("impurity", 2.0 * p1 * (1.0 - p1))):
            nodes[key].append(val)
        if depth >= max_depth or p1 <= 0.0 or p1 >= 1.0:
            return nid
        split = _best_split(X[idx], y[idx], w[idx])
        if split is None:
            return nid
        feature, threshold, _ = split
        go_left = X[idx, feature] <= threshold
        nodes["feature"][nid] = feature
        nodes["threshold"][nid] = threshold
        nodes["left"][nid] = build(idx[go_left], depth + 1)
        nodes["right"][nid] = build(idx[~go_left], depth + 1)
        return nid

    build(np.arange(y.size), 0)
    return DecisionTree(
        np.array(nodes["feature"], dtype=np.int64), np.array(nodes["threshold"], dtype=np.float64),
        np.array(nodes["left"], dtype=np.int64), np.array(nodes["right"], dtype=np.int64),
        np.array(nodes["value"]), np.array(nodes["weight"]), np.array(nodes["impurity"]))


@dataclass
class BoostedEnsemble:
    trees: list[DecisionTree]
    alphas: np.ndarray
    n_features: int
    config: RUSBoostConfig = field(default_factory=RUSBoostConfig)
    feature_names: Optional[list[str]] = None
    feature_importance: Optional[np.ndarray] = None
    degenerate: bool = False
    # boosting distribution after every accepted round (kept for diagnostics)
    weight_history: list = field(default_factory=list, repr=False)


def _undersample(y: np.ndarray, w: np.ndarray, minority: int, ratio: float,
                 rng: np.random.Generator) -> np.ndarray:
    minor = np.flatnonzero(y == minority)
    major = np.flatnonzero(y != minority)
    keep = min(major.size, max(1, int(round(ratio * minor.size))))
    p = w[major] / w[major].sum()
    chosen = rng.choice(major, size=keep, replace=False, p=p)
    return np.sort(np.concatenate([minor, chosen]))


def train_rusboost(X, y, config: RUSBoostConfig = RUSBoostConfig(),
                   feature_names: Optional[Sequence[str]] = None) -> BoostedEnsemble:
    """Fit a RUSBoost ensemble on binary labels ``y``.

    Every round keeps all minority rows, draws majority rows without
    replacement in proportion to their boosting weight, fits a tree on that
    sample, and scores it on the full weighted set. Trees with weighted
    error >= 0.5 are redrawn up to ``max_retries`` times; a perfect tree
    gets ``ALPHA_CAP`` and ends training.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X must be 2D with one row per label")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    counts = np.bincount(y, minlength=2)
    if counts.min() == 0:
        raise ValueError("training data must contain both classes")
    if feature_names is not None and len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length does not match the number of columns")

    rng = np.random.default_rng(config.seed)
    minority = 1 if counts[1] <= counts[0] else 0
    n = y.size
    w = np.full(n, 1.0 / n)
    trees, alphas, history = [], [], []

    for _ in range(config.n_rounds):
        accepted = None
        for _attempt in range(config.max_retries + 1):
            idx = _undersample(y, w, minority, config.undersample_ratio, rng) if config.undersample \
                else np.arange(n)
            tree = fit_tree(X[idx], y[idx], w[idx], config.max_depth)
            miss = tree.vote(X) != y
            err = float(w[miss].sum())
            if err < 0.5:
                accepted = (tree, miss, err)
                break
            if not config.undersample:
                break
        if accepted is None:
            break
        tree, miss, err = accepted
        trees.append(tree)
        if err <= 0.0:
            alphas.append(ALPHA_CAP)
            history.append(w.copy())
            break
        alpha = 0.5 * math.log((1.0 - err) / err)
        alphas.append(alpha)
        w = w * np.exp(np.where(miss, alpha, -alpha))
        w /= w.sum()
        history.append(w.copy())

    degenerate = False
    if not trees:
        # no round beat chance: fall back to the weighted prior
        prior = float((w * y).sum())
        trees = [DecisionTree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                              np.array([prior]), np.array([1.0]), np.array([2 * prior * (1 - prior)]))]
        alphas = [1.0]
        degenerate = True
    if all(t.n_nodes == 1 for t in trees):
        degenerate = True

    ensemble = BoostedEnsemble(trees, np.array(alphas), X.shape[1], config,
                               list(feature_names) if feature_names is not None else None,
                               degenerate=degenerate, weight_history=history)
    ensemble.feature_importance = gini_importance(ensemble)
    return ensemble


def predict(ensemble: BoostedEnsemble, X) -> tuple[np.ndarray, np.ndarray]:
    """Per-row ``(score, label)``; score is the alpha-weighted vote mapped to [0, 1]."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != ensemble.n_features:
        raise ValueError(f"expected {ensemble.n_features} feature columns, got shape {X.shape}")
    margin = np.zeros(X.shape[0])
    for alpha, tree in zip(ensemble.alphas, ensemble.trees):
        margin += alpha * (2.0 * tree.vote(X) - 1.0)
    scores = 0.5 * (margin / ensemble.alphas.sum() + 1.0)
    return scores, (scores >= 0.5).astype(np.int64)


def gini_importance(ensemble: BoostedEnsemble) -> np.ndarray:
    """Alpha-weighted Gini decrease per feature, normalized to sum 1 (zeros if no splits)."""
    if ensemble is None or not ensemble.trees:
        raise ValueError("gini_importance needs a trained ensemble")
    importance = np.zeros(ensemble.n_features)
    for alpha, tree in zip(ensemble.alphas, ensemble.trees):
        split = tree.feature >= 0
        np.add.at(importance, tree.feature[split], alpha * tree.split_gains()[split])
    importance = np.maximum(importance, 0.0)
    total = importance.sum()
    return importance / total if total > 0 else importance


def save_model(ensemble: BoostedEnsemble, path) -> None:
    doc = {
        "schema": MODEL_SCHEMA,
        "config": asdict(ensemble.config),
        "n_features": ensemble.n_features,
        "feature_names": ensemble.feature_names,
        "alphas": [float(a) for a in ensemble.alphas],
        "trees": [t.to_nodes() for t in ensemble.trees],
        "importances": [float(v) for v in gini_importance(ensemble)],
        "degenerate": ensemble.degenerate,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path) -> BoostedEnsemble:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != MODEL_SCHEMA:
        raise ValueError(f"{path}: unsupported model schema {doc.get('schema')!r}")
    return BoostedEnsemble(
        [DecisionTree.from_nodes(nodes) for nodes in doc["trees"]],
        np.array(doc["alphas"], dtype=np.float64),
        int(doc["n_features"]),
        RUSBoostConfig(**doc["config"]),
        doc["feature_names"],
        np.array(doc["importances"], dtype=np.float64),
        bool(doc["degenerate"]),
    )
