"""Evaluation metrics and cross-validation drivers.

The headline error measure is the relative root-mean-square error in
percent: prediction errors are normalized by the deviation of the test
truths around the *training* mean of that output, so 100% matches the
train-mean predictor.  A historical unsquared variant of the same ratio is
available behind a flag for comparisons.  Correlation is Pearson's r,
reported per angle output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricError, ShapeError
from .geometry import LABEL_LENGTH, consistency_gap
from .model import MODE_ANGLES, MODE_JOINT, S2VRModel, predict


def rrmse(
    predicted: np.ndarray,
    truth: np.ndarray,
    train_mean: float,
    signed: bool = False,
) -> float:
    """Relative RMSE in percent for one output across test samples.

    100 * sqrt(sum (pred_i - truth_i)^2 / sum (train_mean - truth_i)^2).
    signed=True computes the historical unsquared ratio of plain sums
    instead (kept for fidelity comparisons only).
    """
    p = np.asarray(predicted, dtype=float).ravel()
    t = np.asarray(truth, dtype=float).ravel()
    if p.size != t.size or p.size == 0:
        raise ShapeError(f"prediction/truth size mismatch: {p.size} vs {t.size}")
    if signed:
        den = float(np.sum(train_mean - t))
        if den == 0.0:
            raise MetricError("degenerate truth: zero signed deviation from the train mean")
        return 100.0 * float(np.sum(p - t)) / den
    den = float(np.sum((train_mean - t) ** 2))
    if den == 0.0:
        raise MetricError("degenerate truth: test outputs equal the train mean exactly")
    return 100.0 * float(np.sqrt(np.sum((p - t) ** 2) / den))


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation coefficient of two equal-length vectors."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size or a.size < 2:
        raise ShapeError(f"need two equal-length vectors of >= 2 entries, got {a.size}, {b.size}")
    ac = a - a.mean()
    bc = b - b.mean()
    na = float(np.linalg.norm(ac))
    nb = float(np.linalg.norm(bc))
    if na == 0.0 or nb == 0.0:
        raise MetricError("correlation undefined for a constant input")
    return float(np.clip(float(ac @ bc) / (na * nb), -1.0, 1.0))


@dataclass
class EvalReport:
    """Metrics of one model on one test set."""

    mode: str
    n_test: int
    per_output_rrmse: np.ndarray
    rrmse_mean: float
    angle_correlation: np.ndarray  # Pearson r per angle output (top, main, bottom)
    consistency_gap_median: float | None = None
    consistency_gap_per_angle: np.ndarray | None = None


def evaluate(
    model: S2VRModel,
    X_test: np.ndarray,
    Y_test: np.ndarray,
    Y_train_means: np.ndarray,
) -> EvalReport:
    """Evaluate a fitted model: per-output relative RMSE, per-angle correlation.

    The last three outputs are the angle outputs by the label layout
    convention.  Joint models over full spine labels also get the
    angle-vs-landmark consistency gap summary (median over test samples).
    """
    X_test = np.asarray(X_test, dtype=float)
    Y_test = np.asarray(Y_test, dtype=float)
    means = np.asarray(Y_train_means, dtype=float).ravel()
    q = model.n_outputs
    if Y_test.shape[0] != q or means.size != q:
        raise ShapeError(
            f"expected {q} outputs, got truth {Y_test.shape} and means {means.shape}"
        )
    if q < 3:
        raise ShapeError("evaluation expects at least the three angle outputs")
    Yhat = predict(model, X_test)
    nt = Y_test.shape[1]
    per = np.array([rrmse(Yhat[i], Y_test[i], means[i]) for i in range(q)])
    angle_rows = range(q - 3, q) if model.mode == MODE_JOINT else range(3)
    corr = np.array([pearson(Yhat[i], Y_test[i]) for i in angle_rows])
    gap_med = None
    gap_angles = None
    if model.mode == MODE_JOINT and q == LABEL_LENGTH:
        gaps = np.stack([consistency_gap(Yhat[:, j]) for j in range(nt)], axis=1)
        gap_med = float(np.median(gaps))
        gap_angles = np.median(gaps, axis=1)
    return EvalReport(
        mode=model.mode,
        n_test=nt,
        per_output_rrmse=per,
        rrmse_mean=float(per.mean()),
        angle_correlation=corr,
        consistency_gap_median=gap_med,
        consistency_gap_per_angle=gap_angles,
    )


def kfold_indices(n: int, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Deterministic k-fold split of range(n) into (train, test) index pairs.

    k = 1 degenerates to a single fold with train = test = everything
    (resubstitution); k = n is leave-one-out.
    """
    if k < 1 or k > max(n, 1):
        raise ShapeError(f"fold count {k} out of range for {n} samples")
    if k == 1:
        idx = np.arange(n)
        return [(idx, idx.copy())]
    perm = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(perm, k)
    out = []
    for i in range(k):
        test = np.sort(folds[i])
        train = np.sort(np.concatenate([folds[j] for j in range(k) if j != i]))
        out.append((train, test))
    return out
