"""Binary decision tree with exhaustive midpoint threshold search."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def gini(p):
    """Gini impurity 2p(1-p) for positive-class proportion p (scalar or array)."""
    p = np.asarray(p, dtype=np.float64)
    return 2.0 * p * (1.0 - p)


def entropy(p):
    """Binary entropy -p*log2(p) - (1-p)*log2(1-p), with 0*log2(0) = 0."""
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros(p.shape)
    for side in (p, 1.0 - p):
        mask = side > 0
        out = out - np.where(mask, side * np.log2(side, where=mask, out=np.ones(p.shape)), 0.0)
    return out


_CRITERIA = {"gini": gini, "entropy": entropy}


@dataclass
class TreeNode:
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    label: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.label is not None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"label": int(self.label)}
        return {
            "feature": int(self.feature),
            "threshold": float(self.threshold),
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "label" in d:
            return cls(label=int(d["label"]))
        return cls(
            feature=int(d["feature"]),
            threshold=float(d["threshold"]),
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


def _majority(y) -> int:
    # ties go to class 0
    return 1 if 2 * int(y.sum()) > len(y) else 0


class DecisionTree:
    """CART-style tree; splits maximize impurity decrease, ties broken by
    (lower feature index, lower threshold) for determinism."""

    def __init__(self, criterion="gini", max_depth=None, min_samples_split=2,
                 max_features=None, rng=None):
        if criterion not in _CRITERIA:
            raise ValueError(f"unknown criterion {criterion!r}")
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.rng = rng
        self.root_ = None
        self.n_features_ = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if len(X) == 0:
            raise ValueError("empty training set")
        self.n_features_ = X.shape[1]
        impurity = _CRITERIA[self.criterion]

        root = TreeNode()
        stack = [(np.arange(len(y)), 0, root)]
        while stack:
            idx, depth, node = stack.pop()
            y_node = y[idx]
            n = len(idx)
            n_pos = int(y_node.sum())
            at_depth_limit = self.max_depth is not None and depth >= self.max_depth
            if n_pos in (0, n) or at_depth_limit or n < self.min_samples_split:
                node.label = _majority(y_node)
                continue
            split = self._best_split(X[idx], y_node, impurity)
            if split is None:
                node.label = _majority(y_node)
                continue
            feature, threshold = split
            node.feature = feature
            node.threshold = threshold
            node.left = TreeNode()
            node.right = TreeNode()
            left_mask = X[idx, feature] <= threshold
            stack.append((idx[left_mask], depth + 1, node.left))
            stack.append((idx[~left_mask], depth + 1, node.right))
        self.root_ = root
        return self

    def _candidate_features(self, n_features: int):
        if self.max_features is None or self.max_features >= n_features:
            return range(n_features)
        chosen = self.rng.choice(n_features, size=self.max_features, replace=False)
        return sorted(int(j) for j in chosen)

    def _best_split(self, X, y, impurity):
        n = len(y)
        total_pos = int(y.sum())
        parent = float(impurity(total_pos / n))
        best_gain = 0.0
        best = None
        for j in self._candidate_features(X.shape[1]):
            col = X[:, j]
            order = np.argsort(col, kind="stable")
            sv = col[order]
            cum_pos = np.cumsum(y[order])
            cut = np.nonzero(sv[:-1] < sv[1:])[0]  # boundaries between distinct values
            if len(cut) == 0:
                continue
            n_left = cut + 1
            n_right = n - n_left
            pos_left = cum_pos[cut]
            p_left = pos_left / n_left
            p_right = (total_pos - pos_left) / n_right
            child = (n_left * impurity(p_left) + n_right * impurity(p_right)) / n
            gains = parent - child
            k = int(np.argmax(gains))  # first max -> lowest threshold
            if gains[k] > best_gain:
                best_gain = float(gains[k])
                best = (j, float((sv[cut[k]] + sv[cut[k] + 1]) / 2.0))
        return best

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(len(X), dtype=np.int64)
        for i, x in enumerate(X):
            node = self.root_
            while not node.is_leaf:
                node = node.left if x[node.feature] <= node.threshold else node.right
            out[i] = node.label
        return out

    def to_dict(self) -> dict:
        return {"criterion": self.criterion, "root": self.root_.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        tree = cls(criterion=d.get("criterion", "gini"))
        tree.root_ = TreeNode.from_dict(d["root"])
        return tree
