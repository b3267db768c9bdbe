"""Decision tree, random forest and gradient-boosted trees on top of ``tree.grow_tree``."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .linear import log_loss_from_logits
from .tree import Presorted, Tree, grow_tree

logger = logging.getLogger(__name__)


@dataclass
class TreeState:
    tree: Tree

    def proba(self, X):
        return np.clip(self.tree.predict(X), 0.0, 1.0)

    def to_dict(self):
        return {"tree": self.tree.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(tree=Tree.from_dict(d["tree"]))


def fit_dt(X, y, cfg, presorted: Presorted | None = None) -> TreeState:
    data = presorted or Presorted.build(X)
    tree = grow_tree(
        data, y, max_depth=cfg.max_depth, min_samples_leaf=cfg.min_samples_leaf
    )
    return TreeState(tree=tree)


@dataclass
class ForestState:
    trees: list

    def proba(self, X):
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.predict(X)
        return np.clip(acc / len(self.trees), 0.0, 1.0)

    def to_dict(self):
        return {"trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        return cls(trees=[Tree.from_dict(t) for t in d["trees"]])


def fit_rf(X, y, cfg) -> ForestState:
    data = Presorted.build(X)
    n, d = X.shape
    m = cfg.n_features(d)
    # one child stream per tree: results do not depend on fitting order
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)
    trees = []
    for i, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        if cfg.bootstrap:
            w = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.float64)
        else:
            w = None
        trees.append(
            grow_tree(
                data,
                y,
                w,
                max_depth=cfg.max_depth,
                min_samples_leaf=cfg.min_samples_leaf,
                max_features=m if m < d else None,
                rng=rng,
            )
        )
        logger.debug("rf tree %d: %d nodes", i, trees[-1].n_nodes)
    return ForestState(trees=trees)


@dataclass
class BoostedState:
    init_score: float
    shrinkage: float
    trees: list
    history: list

    def decision(self, X):
        z = np.full(X.shape[0], self.init_score)
        for tree in self.trees:
            z += self.shrinkage * tree.predict(X)
        return z

    def proba(self, X):
        return expit(self.decision(X))

    def to_dict(self):
        return {
            "init_score": self.init_score,
            "shrinkage": self.shrinkage,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            init_score=float(d["init_score"]),
            shrinkage=float(d["shrinkage"]),
            trees=[Tree.from_dict(t) for t in d["trees"]],
            history=[],
        )


def fit_gbt(X, y, cfg) -> BoostedState:
    """Stage-wise boosting of the log-loss with first-order leaf values.

    Each tree fits the residual ``y - p`` and each leaf holds the mean
    residual of its samples. Since the log-loss curvature is at most 1/4, a
    shrunken mean-residual step never increases the training loss.
    """
    data = Presorted.build(X)
    prior = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
    init = float(logit(prior))
    z = np.full(X.shape[0], init)
    trees = []
    history = [log_loss_from_logits(z, y)]
    for round_ in range(cfg.n_rounds):
        residual = y - expit(z)
        tree = grow_tree(
            data, residual, max_depth=cfg.max_depth, min_samples_leaf=cfg.min_samples_leaf
        )
        trees.append(tree)
        z = z + cfg.shrinkage * tree.predict(X)
        history.append(log_loss_from_logits(z, y))
        logger.debug("gbt round %d loss %.6f", round_, history[-1])
    return BoostedState(init_score=init, shrinkage=cfg.shrinkage, trees=trees, history=history)
