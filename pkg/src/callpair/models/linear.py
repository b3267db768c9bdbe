"""Logistic regression trained by mini-batch SGD, plus the shared input scaler."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

logger = logging.getLogger(__name__)


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        return cls(mean=mean, scale=scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Standardizer":
        return cls(mean=np.asarray(d["mean"], float), scale=np.asarray(d["scale"], float))


def log_loss_from_logits(z: np.ndarray, y: np.ndarray) -> float:
    # log(1 + e^z) - y z, stable for large |z|
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def logistic_loss_grad(theta: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float):
    """Mean log-loss plus ``l2/2 * |w|^2`` and its gradient.

    ``theta`` packs the weights followed by the bias.
    """
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    loss = log_loss_from_logits(z, y) + 0.5 * l2 * float(w @ w)
    r = (expit(z) - y) / X.shape[0]
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ r + l2 * w
    grad[-1] = r.sum()
    return loss, grad


@dataclass
class LogisticState:
    scaler: Standardizer
    weights: np.ndarray
    bias: float
    history: list

    def decision(self, X: np.ndarray) -> np.ndarray:
        return self.scaler.transform(X) @ self.weights + self.bias

    def proba(self, X: np.ndarray) -> np.ndarray:
        return expit(self.decision(X))

    def to_dict(self) -> dict:
        return {
            "scaler": self.scaler.to_dict(),
            "weights": self.weights.tolist(),
            "bias": self.bias,
        }

    @classmethod
    def from_dict(cls, d) -> "LogisticState":
        return cls(
            scaler=Standardizer.from_dict(d["scaler"]),
            weights=np.asarray(d["weights"], float),
            bias=float(d["bias"]),
            history=[],
        )


def fit_logistic(X, y, cfg) -> LogisticState:
    rng = np.random.default_rng(cfg.seed)
    scaler = Standardizer.fit(X)
    Z = scaler.transform(X)
    n, d = Z.shape
    theta = np.zeros(d + 1)
    history = []
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            _, g = logistic_loss_grad(theta, Z[batch], y[batch], cfg.l2)
            theta -= cfg.learning_rate * g
        loss = logistic_loss_grad(theta, Z, y, cfg.l2)[0]
        history.append(loss)
        logger.debug("lr epoch %d loss %.6f", epoch, loss)
    return LogisticState(scaler=scaler, weights=theta[:-1].copy(), bias=float(theta[-1]), history=history)
