"""Synthetic benchmark generators shared by the acceptance tests."""

from __future__ import annotations

import numpy as np


def correlated_outputs(seed: int, n_train: int = 60, n_test: int = 40, q: int = 11,
                       rank: int = 2, noise: float = 0.3):
    """Low-rank correlated regression targets over smooth latent functions.

    All q outputs are mixtures of `rank` smooth functions of a 3-d input,
    plus iid output noise, so the output covariance has rank ~`rank` and a
    structure-aware model can pool strength across outputs.
    """
    rng = np.random.default_rng([seed, 0xC0])
    n = n_train + n_test
    X = rng.uniform(-1.0, 1.0, size=(3, n))
    w = rng.normal(size=(rank, 3))
    Z = np.stack([np.sin(np.pi * (w[r] @ X)) for r in range(rank)])
    A = rng.normal(size=(q, rank))
    Y = A @ Z + noise * rng.normal(size=(q, n))
    return (X[:, :n_train], Y[:, :n_train]), (X[:, n_train:], Y[:, n_train:])


def independent_outputs(seed: int, n_train: int = 60, n_test: int = 40, q: int = 11,
                        noise: float = 0.3):
    """Control benchmark: every output is its own unrelated smooth function."""
    rng = np.random.default_rng([seed, 0xD1])
    n = n_train + n_test
    X = rng.uniform(-1.0, 1.0, size=(3, n))
    w = rng.normal(size=(q, 3))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=q)
    Z = np.stack([np.sin(np.pi * (w[r] @ X) + phases[r]) for r in range(q)])
    Y = Z + noise * rng.normal(size=(q, n))
    return (X[:, :n_train], Y[:, :n_train]), (X[:, n_train:], Y[:, n_train:])


def mean_test_rrmse(model_predict, Y_train, X_test, Y_test, metrics_mod):
    """Average per-output relative RMSE of predictions on the test block."""
    P = model_predict(X_test)
    means = Y_train.mean(axis=1)
    vals = [metrics_mod.rrmse(P[i], Y_test[i], means[i]) for i in range(Y_test.shape[0])]
    return float(np.mean(vals))
