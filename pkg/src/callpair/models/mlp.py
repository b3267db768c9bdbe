"""Feed-forward network with tanh hidden layers and a sigmoid output, trained with Adam."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .linear import Standardizer, log_loss_from_logits

logger = logging.getLogger(__name__)


def init_params(sizes, rng):
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append((rng.uniform(-limit, limit, size=(fan_in, fan_out)), np.zeros(fan_out)))
    return params


def forward(params, X):
    """Return the output logits and the activations of every layer."""
    acts = [X]
    h = X
    for W, b in params[:-1]:
        h = np.tanh(h @ W + b)
        acts.append(h)
    W, b = params[-1]
    return (h @ W + b)[:, 0], acts


def mlp_loss_grad(params, X, y, l2=0.0):
    """Mean log-loss plus ``l2/2`` times the squared weight norms, and backprop gradients."""
    z, acts = forward(params, X)
    loss = log_loss_from_logits(z, y)
    loss += 0.5 * l2 * sum(float(np.sum(W * W)) for W, _ in params)
    delta = ((expit(z) - y) / X.shape[0])[:, None]
    grads = [None] * len(params)
    for layer in range(len(params) - 1, -1, -1):
        W, _ = params[layer]
        a = acts[layer]
        grads[layer] = (a.T @ delta + l2 * W, delta.sum(axis=0))
        if layer:
            delta = (delta @ W.T) * (1.0 - a * a)
    return loss, grads


@dataclass
class MLPState:
    scaler: Standardizer
    params: list
    history: list

    def proba(self, X: np.ndarray) -> np.ndarray:
        z, _ = forward(self.params, self.scaler.transform(X))
        return expit(z)

    def to_dict(self) -> dict:
        return {
            "scaler": self.scaler.to_dict(),
            "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.params],
        }

    @classmethod
    def from_dict(cls, d) -> "MLPState":
        params = [(np.asarray(l["W"], float), np.asarray(l["b"], float)) for l in d["layers"]]
        return cls(scaler=Standardizer.from_dict(d["scaler"]), params=params, history=[])


def fit_mlp(X, y, cfg) -> MLPState:
    rng = np.random.default_rng(cfg.seed)
    scaler = Standardizer.fit(X)
    Z = scaler.transform(X)
    n, d = Z.shape
    params = init_params([d, *cfg.hidden, 1], rng)
    b1, b2, eps = 0.9, 0.999, 1e-8
    m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    step = 0
    history = []
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            _, grads = mlp_loss_grad(params, Z[batch], y[batch], cfg.l2)
            step += 1
            corr1 = 1.0 - b1**step
            corr2 = 1.0 - b2**step
            new_params = []
            for i, ((W, b), (gW, gb)) in enumerate(zip(params, grads)):
                mW = b1 * m[i][0] + (1 - b1) * gW
                mb = b1 * m[i][1] + (1 - b1) * gb
                vW = b2 * v[i][0] + (1 - b2) * gW * gW
                vb = b2 * v[i][1] + (1 - b2) * gb * gb
                m[i], v[i] = (mW, mb), (vW, vb)
                W = W - cfg.learning_rate * (mW / corr1) / (np.sqrt(vW / corr2) + eps)
                b = b - cfg.learning_rate * (mb / corr1) / (np.sqrt(vb / corr2) + eps)
                new_params.append((W, b))
            params = new_params
        loss = mlp_loss_grad(params, Z, y, cfg.l2)[0]
        history.append(loss)
        logger.debug("mlp epoch %d loss %.6f", epoch, loss)
    return MLPState(scaler=scaler, params=params, history=history)
