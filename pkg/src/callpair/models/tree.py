"""Level-wise CART growth on presorted features.

One call to the split kernel per depth level finds the best split for every
open node at once. Split quality is weighted variance reduction of the
target, which for 0/1 targets ranks splits exactly like Gini impurity
decrease (``n_l*(1-gini_l) = (p_l**2 + q_l**2)/n_l = n_l - 2p_l + 2p_l**2/n_l``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend

MIN_GAIN = 1e-12


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[node]
            idx = np.flatnonzero(f >= 0)
            if idx.size == 0:
                return node
            cur = node[idx]
            go_left = X[idx, f[idx]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=np.float64),
        )


@dataclass
class Presorted:
    """Feature matrix plus per-feature sort order, shared across trees."""

    X: np.ndarray
    XT: np.ndarray
    order: np.ndarray

    @classmethod
    def build(cls, X: np.ndarray) -> "Presorted":
        X = np.ascontiguousarray(X, dtype=np.float64)
        XT = np.ascontiguousarray(X.T)
        order = np.ascontiguousarray(np.argsort(XT, axis=1, kind="stable").astype(np.int64))
        return cls(X=X, XT=XT, order=order)


def _weighted_means(ids, t, w, n_ids):
    s = np.bincount(ids, weights=t * w, minlength=n_ids)
    c = np.bincount(ids, weights=w, minlength=n_ids)
    out = np.zeros(n_ids)
    nz = c > 0
    out[nz] = s[nz] / c[nz]
    return out


def grow_tree(
    data: Presorted,
    t: np.ndarray,
    w: np.ndarray | None = None,
    *,
    max_depth: int,
    min_samples_leaf: float = 1,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
    splitter=None,
) -> Tree:
    """Grow one regression tree whose leaves hold the weighted mean of ``t``.

    ``w`` holds non-negative sample weights (bootstrap multiplicities);
    zero-weight samples are ignored. ``max_features`` below the feature count
    draws a fresh random feature subset for every node from ``rng``.
    """
    X, XT, order = data.X, data.XT, data.order
    n, d = X.shape
    t = np.ascontiguousarray(t, dtype=np.float64)
    w = np.ones(n) if w is None else np.ascontiguousarray(w, dtype=np.float64)
    if splitter is None:
        splitter = _backend.level_best_splits
    m = d if max_features is None else int(max_features)
    if m < d and rng is None:
        raise ValueError("feature subsampling needs an rng")

    feature = [-1]
    threshold = [0.0]
    left = [-1]
    right = [-1]
    node_of = np.where(w > 0, 0, -1).astype(np.int64)
    if not (w > 0).any():
        raise ValueError("all sample weights are zero")
    value = [float(np.sum(t * w) / np.sum(w))]
    open_nodes = [0]
    depth = 0
    while open_nodes and depth < max_depth:
        n_open = len(open_nodes)
        local_of = np.full(len(feature), -1, dtype=np.int64)
        local_of[open_nodes] = np.arange(n_open)
        active = node_of >= 0
        node_local = np.full(n, -1, dtype=np.int64)
        node_local[active] = local_of[node_of[active]]

        mask = np.ones((n_open, d), dtype=np.uint8)
        if m < d:
            mask[:] = 0
            for k in range(n_open):
                mask[k, rng.choice(d, size=m, replace=False)] = 1

        bf, bt, _ = splitter(
            XT, order, node_local, t, w, n_open, mask, float(min_samples_leaf), MIN_GAIN
        )

        left_local = np.full(n_open, -1, dtype=np.int64)
        right_local = np.full(n_open, -1, dtype=np.int64)
        next_open = []
        for k, gid in enumerate(open_nodes):
            if bf[k] < 0:
                continue
            feature[gid] = int(bf[k])
            threshold[gid] = float(bt[k])
            for side in (left_local, right_local):
                side[k] = len(feature)
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(0.0)
                next_open.append(side[k])
            left[gid] = int(left_local[k])
            right[gid] = int(right_local[k])

        idx = np.flatnonzero(node_local >= 0)
        ks = node_local[idx]
        split = bf[ks] >= 0
        node_of[idx[~split]] = -1
        idx, ks = idx[split], ks[split]
        go_left = X[idx, bf[ks]] <= bt[ks]
        node_of[idx] = np.where(go_left, left_local[ks], right_local[ks])

        if next_open:
            means = _weighted_means(node_of[idx], t[idx], w[idx], len(feature))
            for gid in next_open:
                value[gid] = float(means[gid])
        open_nodes = next_open
        depth += 1

    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
    )
