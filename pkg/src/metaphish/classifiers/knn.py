"""k-nearest-neighbor classifier with uniform or inverse-distance weighting."""

from __future__ import annotations

import numpy as np

_CHUNK_ELEMENTS = 20_000_000  # cap on broadcast buffer size (rows * train * dims)


class KNearestNeighbors:
    """Lazy learner: fit stores the training matrix verbatim.

    Distance weighting uses 1/d; a neighbor at distance exactly 0 decides the
    query outright (majority among zero-distance neighbors, ties to class 0).
    All remaining ties also resolve to class 0.
    """

    def __init__(self, k=5, weights="uniform", metric="euclidean"):
        if weights not in ("uniform", "distance"):
            raise ValueError(f"unknown weights {weights!r}")
        if metric not in ("euclidean", "manhattan"):
            raise ValueError(f"unknown metric {metric!r}")
        self.k = k
        self.weights = weights
        self.metric = metric
        self.X_ = None
        self.y_ = None

    def fit(self, X, y):
        self.X_ = np.asarray(X, dtype=np.float64)
        self.y_ = np.asarray(y, dtype=np.int64)
        if len(self.X_) == 0:
            raise ValueError("empty training set")
        return self

    def _distances(self, Q: np.ndarray) -> np.ndarray:
        diff = Q[:, None, :] - self.X_[None, :, :]
        if self.metric == "euclidean":
            return np.sqrt((diff * diff).sum(axis=2))
        return np.abs(diff).sum(axis=2)

    def predict(self, X) -> np.ndarray:
        if self.X_ is None:
            raise ValueError("classifier is not fitted")
        Q = np.asarray(X, dtype=np.float64)
        n_train, d = self.X_.shape
        k = min(self.k, n_train)
        out = np.empty(len(Q), dtype=np.int64)
        chunk = max(1, _CHUNK_ELEMENTS // max(1, n_train * d))
        for start in range(0, len(Q), chunk):
            dists = self._distances(Q[start : start + chunk])
            for row, dist in enumerate(dists):
                order = np.argsort(dist, kind="stable")[:k]
                out[start + row] = self._vote(dist[order], self.y_[order])
        return out

    def _vote(self, dist: np.ndarray, labels: np.ndarray) -> int:
        if self.weights == "uniform":
            return 1 if 2 * int(labels.sum()) > len(labels) else 0
        exact = dist == 0.0
        if exact.any():
            hits = labels[exact]
            return 1 if 2 * int(hits.sum()) > len(hits) else 0
        w = 1.0 / dist
        pos = float(w[labels == 1].sum())
        neg = float(w[labels == 0].sum())
        return 1 if pos > neg else 0

    def to_dict(self) -> dict:
        return {"train_x": self.X_.tolist(), "train_y": self.y_.tolist()}

    @classmethod
    def from_dict(cls, d: dict, k=5, weights="uniform", metric="euclidean") -> "KNearestNeighbors":
        knn = cls(k=k, weights=weights, metric=metric)
        knn.X_ = np.asarray(d["train_x"], dtype=np.float64)
        knn.y_ = np.asarray(d["train_y"], dtype=np.int64)
        return knn
