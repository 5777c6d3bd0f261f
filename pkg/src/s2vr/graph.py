"""Dense similarity graph and Laplacian over training outputs.

The graph couples training samples whose label vectors are close, so the
solver can penalize predictions that break the output manifold: the
quadratic form tr(F G F^T) equals half the similarity-weighted sum of
squared prediction differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError


@dataclass
class OutputGraph:
    """Fully dense output-similarity graph with its combinatorial Laplacian."""

    similarity: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray
    rho: float


def _pairwise_sq_dists(Y: np.ndarray) -> np.ndarray:
    sq = np.sum(Y * Y, axis=0)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (Y.T @ Y)
    np.maximum(d2, 0.0, out=d2)
    return d2


def build_laplacian(Y: np.ndarray, rho: float | str = "auto") -> OutputGraph:
    """Gaussian similarity E_ij = exp(-||y_i - y_j||^2 / (2 rho^2)), G = diag(E 1) - E.

    Y holds one label vector per column.  rho="auto" uses the median
    pairwise distance between label vectors (1.0 when all labels coincide).
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ShapeError(f"label matrix must be 2-d, got shape {Y.shape}")
    n = Y.shape[1]
    if n < 2:
        raise ShapeError(f"need at least 2 samples to build a graph, got {n}")
    d2 = _pairwise_sq_dists(Y)
    if isinstance(rho, str):
        if rho != "auto":
            raise ParameterError(f"rho must be a positive number or 'auto', got {rho!r}")
        iu = np.triu_indices(n, k=1)
        med = float(np.median(np.sqrt(d2[iu])))
        rho_val = med if med > 0 else 1.0
    else:
        rho_val = float(rho)
        if rho_val <= 0 or not np.isfinite(rho_val):
            raise ParameterError(f"rho must be positive and finite, got {rho}")
    E = np.exp(d2 / (-2.0 * rho_val * rho_val))
    E = 0.5 * (E + E.T)
    np.fill_diagonal(E, 1.0)
    deg = E.sum(axis=1)
    G = np.diag(deg) - E
    return OutputGraph(similarity=E, degree=deg, laplacian=G, rho=rho_val)


def manifold_penalty(F: np.ndarray, G: np.ndarray | OutputGraph) -> float:
    """Quadratic smoothness penalty tr(F G F^T) of predictions F (one column per sample)."""
    L = getattr(G, "laplacian", G)
    F = np.asarray(F, dtype=float)
    L = np.asarray(L, dtype=float)
    if F.ndim != 2 or L.shape != (F.shape[1], F.shape[1]):
        raise ShapeError(f"incompatible shapes: F {F.shape}, G {L.shape}")
    return float(np.sum((F @ L) * F))
