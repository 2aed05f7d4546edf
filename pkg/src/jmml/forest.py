"""Random-forest classifier for the final stage, plus evaluation metrics.

Binary labels are the strings '+' and '-'.  Trees split on Gini impurity
over floor(sqrt(d)) randomly chosen features per node; each tree sees a
bootstrap sample of the training set.  Everything is deterministic per
seed (per-tree seeds are spawned from the forest seed, so a parallel fit
would reproduce the serial one).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, SingleClassError

POS, NEG = "+", "-"


@dataclass
class EvalReport:
    accuracy: float          # percent
    f1: float                # percent
    confusion: np.ndarray    # rows true [+, -], cols predicted [+, -]

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "f1": self.f1,
            "confusion": self.confusion.tolist(),
        }


class DecisionTree:
    """CART-style tree; nodes are nested dicts, leaves hold class counts."""

    def __init__(self, max_depth, seed):
        self.max_depth = max_depth
        self.seed = seed
        self.root = None
        self.n_features = None

    def fit(self, x, y01, rng):
        self.n_features = x.shape[1]
        self.root = self._grow(x, y01, depth=0, rng=rng)
        return self

    def _grow(self, x, y, depth, rng):
        n_pos = int(y.sum())
        counts = (len(y) - n_pos, n_pos)
        if depth >= self.max_depth or len(y) < 2 or n_pos in (0, len(y)):
            return {"leaf": counts}
        split = self._best_split(x, y, rng)
        if split is None:
            return {"leaf": counts}
        feat, thr = split
        mask = x[:, feat] <= thr
        return {
            "feature": feat,
            "threshold": thr,
            "left": self._grow(x[mask], y[mask], depth + 1, rng),
            "right": self._grow(x[~mask], y[~mask], depth + 1, rng),
        }

    def _best_split(self, x, y, rng):
        n, d = x.shape
        n_try = max(1, int(np.sqrt(d)))
        feats = rng.choice(d, size=n_try, replace=False)
        best = None
        best_score = np.inf
        for feat in feats:
            vals = x[:, feat]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            sy = y[order]
            pos_left = np.cumsum(sy)[:-1]
            n_left = np.arange(1, n)
            valid = sv[1:] != sv[:-1]
            if not valid.any():
                continue
            pos_right = pos_left[-1] + sy[-1] - pos_left
            n_right = n - n_left
            p_l = pos_left / n_left
            p_r = pos_right / n_right
            gini = n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)
            gini = np.where(valid, gini, np.inf)
            i = int(np.argmin(gini))
            if gini[i] < best_score:
                best_score = gini[i]
                best = (int(feat), float((sv[i] + sv[i + 1]) / 2.0))
        return best

    def predict_pos_votes(self, x):
        """Per-sample 0/1 vote (leaf majority, ties to the positive class)."""
        out = np.empty(x.shape[0], dtype=np.int64)
        for i, row in enumerate(x):
            node = self.root
            while "leaf" not in node:
                node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
            neg, pos = node["leaf"]
            out[i] = 1 if pos >= neg else 0
        return out

    def to_dict(self):
        return {"max_depth": self.max_depth, "seed": self.seed, "root": self.root}


@dataclass
class RandomForest:
    trees: list
    n_estimators: int
    max_depth: int
    seed: int
    n_features: int

    def to_json(self):
        return json.dumps(
            {
                "n_estimators": self.n_estimators,
                "max_depth": self.max_depth,
                "seed": self.seed,
                "n_features": self.n_features,
                "trees": [t.to_dict() for t in self.trees],
            },
            sort_keys=True,
        )


def _encode_labels(y):
    y = np.asarray(y)
    bad = set(np.unique(y)) - {POS, NEG}
    if bad:
        raise ValueError(f"labels must be '+'/'-', got {sorted(bad)}")
    return (y == POS).astype(np.int64)


def fit_rf(x, y, n_estimators=100, max_depth=8, seed=0):
    """Fit a bootstrap forest; deterministic per seed."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y01 = _encode_labels(y)
    if x.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    if len(np.unique(y01)) < 2:
        raise SingleClassError("training data contains a single class")
    seeds = np.random.SeedSequence(seed).spawn(n_estimators)
    trees = []
    n = x.shape[0]
    for i in range(n_estimators):
        rng = np.random.default_rng(seeds[i])
        idx = rng.integers(0, n, size=n)
        tree = DecisionTree(max_depth, i).fit(x[idx], y01[idx], rng)
        trees.append(tree)
    return RandomForest(trees, n_estimators, max_depth, seed, x.shape[1])


def predict(forest, x):
    """Majority vote over trees; exact ties go to '+'."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != forest.n_features:
        raise ShapeError(f"feature dim {x.shape[1]} != {forest.n_features}")
    votes = np.zeros(x.shape[0], dtype=np.int64)
    for tree in forest.trees:
        votes += tree.predict_pos_votes(x)
    pos = votes * 2 >= len(forest.trees)
    return np.where(pos, POS, NEG)


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2 * tp / denom


def evaluate(y_true, y_pred, average="macro"):
    """Accuracy and F1 in percent, plus the confusion matrix.

    ``average``: 'macro' (default), 'weighted' or 'positive'.
    """
    t = _encode_labels(y_true)
    p = _encode_labels(y_pred)
    if t.shape != p.shape:
        raise ShapeError("y_true and y_pred lengths differ")
    tp = int(np.sum((t == 1) & (p == 1)))
    fn = int(np.sum((t == 1) & (p == 0)))
    fp = int(np.sum((t == 0) & (p == 1)))
    tn = int(np.sum((t == 0) & (p == 0)))
    confusion = np.array([[tp, fn], [fp, tn]])
    accuracy = 100.0 * (tp + tn) / t.size
    f1_pos = _f1(tp, fp, fn)
    f1_neg = _f1(tn, fn, fp)
    if average == "macro":
        f1 = (f1_pos + f1_neg) / 2.0
    elif average == "weighted":
        n_pos, n_neg = tp + fn, fp + tn
        f1 = (f1_pos * n_pos + f1_neg * n_neg) / t.size
    elif average == "positive":
        f1 = f1_pos
    else:
        raise ValueError(f"unknown average {average!r}")
    return EvalReport(accuracy, 100.0 * f1, confusion)


def grid_search(x, y, estimator_grid=(50, 100, 200), depth_grid=(4, 8, 16), folds=5, seed=0):
    """Best (n_estimators, max_depth) by mean cross-validated macro F1.

    Ties break to fewer trees, then shallower depth.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    order = rng.permutation(x.shape[0])
    fold_ids = np.array_split(order, folds)
    best = None
    best_f1 = -np.inf
    for n_est in sorted(estimator_grid):
        for depth in sorted(depth_grid):
            scores = []
            for f in range(folds):
                test_idx = fold_ids[f]
                train_idx = np.concatenate([fold_ids[g] for g in range(folds) if g != f])
                if len(np.unique(y[train_idx])) < 2:
                    continue
                forest = fit_rf(x[train_idx], y[train_idx], n_est, depth, seed=seed)
                scores.append(evaluate(y[test_idx], predict(forest, x[test_idx])).f1)
            mean_f1 = float(np.mean(scores)) if scores else -np.inf
            if mean_f1 > best_f1 + 1e-12:
                best_f1 = mean_f1
                best = (n_est, depth)
    return best
