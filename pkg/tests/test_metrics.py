import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from s2vr.errors import MetricError, ShapeError
from s2vr.metrics import evaluate, kfold_indices, pearson, rrmse
from s2vr.model import MODE_ANGLES, fit_model
from s2vr.solver import TrainConfig


# ----------------------------------------------------------------------
# relative RMSE
# ----------------------------------------------------------------------


def test_rrmse_frozen_value():
    # pred (0, 1) against truth (0, 2) with train mean 1:
    # 100 * sqrt((0 + 1) / (1 + 1)) = 100 / sqrt(2)
    val = rrmse(np.array([0.0, 1.0]), np.array([0.0, 2.0]), 1.0)
    assert val == pytest.approx(70.71067811865476, abs=1e-12)


def test_rrmse_perfect_prediction_is_zero():
    t = np.array([1.0, 2.0, 3.0])
    assert rrmse(t, t, 0.0) == 0.0


def test_rrmse_mean_predictor_is_hundred():
    t = np.array([1.0, 2.0, 3.0])
    assert rrmse(np.full(3, 2.0), t, 2.0) == pytest.approx(100.0, abs=1e-12)


def test_rrmse_signed_variant():
    # signed denominator sum(mean - t) = (1-0) + (1-2) = 0 -> degenerate
    with pytest.raises(MetricError):
        rrmse(np.array([0.0, 1.0]), np.array([0.0, 2.0]), 1.0, signed=True)
    # mean 2: numerator (1-0) + (1-2) = 0, denominator (2-0) + (2-2) = 2
    val = rrmse(np.array([1.0, 1.0]), np.array([0.0, 2.0]), 2.0, signed=True)
    assert val == pytest.approx(0.0, abs=1e-12)
    # one-sided errors keep the sign
    val2 = rrmse(np.array([1.0, 3.0]), np.array([0.0, 2.0]), 2.0, signed=True)
    assert val2 == pytest.approx(100.0, abs=1e-12)


def test_rrmse_degenerate_truth():
    with pytest.raises(MetricError):
        rrmse(np.array([1.0, 2.0]), np.array([3.0, 3.0]), 3.0)


def test_rrmse_shape_errors():
    with pytest.raises(ShapeError):
        rrmse(np.zeros(3), np.zeros(2), 0.0)
    with pytest.raises(ShapeError):
        rrmse(np.zeros(0), np.zeros(0), 0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 10.0), st.floats(-5.0, 5.0))
def test_rrmse_affine_invariance(seed, a, b):
    # scaling both prediction and truth about the train mean leaves the
    # percentage unchanged: rrmse is relative by construction
    rng = np.random.default_rng(seed)
    t = rng.normal(size=6)
    p = t + rng.normal(size=6)
    m = float(rng.normal())
    if np.sum((m - t) ** 2) < 1e-12:
        return
    base = rrmse(p, t, m)
    scaled = rrmse(m + a * (p - m), m + a * (t - m), m)
    assert scaled == pytest.approx(base, rel=1e-9)
    shifted = rrmse(p + b, t + b, m + b)
    assert shifted == pytest.approx(base, rel=1e-9)


# ----------------------------------------------------------------------
# correlation
# ----------------------------------------------------------------------


def test_pearson_frozen_value():
    val = pearson(np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0, 4.0]))
    assert val == pytest.approx(0.9819805060619659, abs=1e-12)


def test_pearson_exact_endpoints():
    a = np.array([1.0, 2.0, 5.0])
    assert pearson(a, 3.0 * a - 1.0) == 1.0
    assert pearson(a, -2.0 * a + 7.0) == -1.0


def test_pearson_errors():
    with pytest.raises(ShapeError):
        pearson(np.zeros(2), np.zeros(3))
    with pytest.raises(ShapeError):
        pearson(np.zeros(1), np.zeros(1))
    with pytest.raises(MetricError):
        pearson(np.ones(4), np.arange(4.0))


# ----------------------------------------------------------------------
# evaluation report
# ----------------------------------------------------------------------


def _angle_model(seed=0, n=40):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(3, n))
    W = 0.7 * rng.normal(size=(3, 3))
    Y = 10.0 * np.sin(W @ X) + 20.0
    model = fit_model(X, Y, TrainConfig(tau=10.0, max_outer=3), mode=MODE_ANGLES)
    return model, X, Y


def test_evaluate_angle_mode_report():
    model, X, Y = _angle_model()
    rep = evaluate(model, X, Y, Y.mean(axis=1))
    assert rep.mode == MODE_ANGLES
    assert rep.n_test == X.shape[1]
    assert rep.per_output_rrmse.shape == (3,)
    assert rep.rrmse_mean == pytest.approx(rep.per_output_rrmse.mean())
    assert rep.angle_correlation.shape == (3,)
    assert np.all(rep.angle_correlation > 0.9)  # resubstitution on smooth data
    assert rep.consistency_gap_median is None


def test_evaluate_shape_errors():
    model, X, Y = _angle_model()
    with pytest.raises(ShapeError):
        evaluate(model, X, Y[:2], Y.mean(axis=1))
    with pytest.raises(ShapeError):
        evaluate(model, X, Y, Y.mean(axis=1)[:2])


# ----------------------------------------------------------------------
# folds
# ----------------------------------------------------------------------


def test_kfold_partitions_everything():
    folds = kfold_indices(17, 4, seed=3)
    assert len(folds) == 4
    all_test = np.concatenate([t for _, t in folds])
    assert np.array_equal(np.sort(all_test), np.arange(17))
    for train, test in folds:
        assert np.intersect1d(train, test).size == 0
        assert np.array_equal(np.sort(np.concatenate([train, test])), np.arange(17))


def test_kfold_deterministic():
    a = kfold_indices(20, 5, seed=7)
    b = kfold_indices(20, 5, seed=7)
    for (tr1, te1), (tr2, te2) in zip(a, b):
        assert np.array_equal(tr1, tr2) and np.array_equal(te1, te2)
    c = kfold_indices(20, 5, seed=8)
    assert any(not np.array_equal(te1, te2) for (_, te1), (_, te2) in zip(a, c))


def test_kfold_degenerate_cases():
    (train, test), = kfold_indices(6, 1)
    assert np.array_equal(train, np.arange(6)) and np.array_equal(test, np.arange(6))
    loo = kfold_indices(5, 5, seed=0)
    assert len(loo) == 5
    for train, test in loo:
        assert test.size == 1 and train.size == 4
    with pytest.raises(ShapeError):
        kfold_indices(5, 6)
    with pytest.raises(ShapeError):
        kfold_indices(5, 0)
