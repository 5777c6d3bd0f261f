import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from s2vr.errors import ParameterError, ShapeError
from s2vr.graph import build_laplacian, manifold_penalty


def test_two_point_similarity_frozen():
    # labels at distance 2, rho 2 -> off-diagonal exp(-4/8) = exp(-1/2)
    Y = np.array([[0.0, 2.0]])
    g = build_laplacian(Y, rho=2.0)
    assert g.similarity[0, 1] == pytest.approx(np.exp(-0.5), abs=1e-15)
    assert g.similarity[0, 0] == 1.0
    s = 1.0 + np.exp(-0.5)
    assert np.allclose(g.degree, [s, s])
    assert np.allclose(g.laplacian, [[np.exp(-0.5), -np.exp(-0.5)], [-np.exp(-0.5), np.exp(-0.5)]])


def test_laplacian_rows_sum_to_zero():
    rng = np.random.default_rng(0)
    Y = rng.normal(size=(4, 9))
    g = build_laplacian(Y, rho=1.3)
    assert np.allclose(g.laplacian.sum(axis=1), 0.0, atol=1e-12)
    assert np.allclose(g.laplacian, g.laplacian.T, atol=1e-12)


def test_penalty_equals_weighted_difference_sum():
    rng = np.random.default_rng(1)
    Y = rng.normal(size=(3, 7))
    F = rng.normal(size=(5, 7))
    g = build_laplacian(Y, rho=0.8)
    direct = 0.0
    for i in range(7):
        for j in range(7):
            diff = F[:, i] - F[:, j]
            direct += 0.5 * g.similarity[i, j] * float(diff @ diff)
    assert manifold_penalty(F, g) == pytest.approx(direct, rel=1e-10)


def test_penalty_zero_for_constant_predictions():
    rng = np.random.default_rng(2)
    Y = rng.normal(size=(3, 6))
    g = build_laplacian(Y, rho=1.0)
    F = np.tile(rng.normal(size=(4, 1)), (1, 6))
    assert abs(manifold_penalty(F, g)) < 1e-10


def test_rho_auto_uses_median_distance():
    Y = np.array([[0.0, 1.0, 5.0]])
    g = build_laplacian(Y, rho="auto")
    # pairwise distances 1, 4, 5 -> median 4
    assert g.rho == pytest.approx(4.0, abs=1e-12)


def test_rho_auto_coincident_labels_falls_back():
    Y = np.ones((3, 4))
    g = build_laplacian(Y, rho="auto")
    assert g.rho == 1.0
    assert np.allclose(g.similarity, 1.0)


def test_parameter_and_shape_errors():
    Y = np.zeros((2, 3))
    with pytest.raises(ParameterError):
        build_laplacian(Y, rho=0.0)
    with pytest.raises(ParameterError):
        build_laplacian(Y, rho=-1.0)
    with pytest.raises(ParameterError):
        build_laplacian(Y, rho="median")
    with pytest.raises(ShapeError):
        build_laplacian(np.zeros(3))
    with pytest.raises(ShapeError):
        build_laplacian(np.zeros((2, 1)))
    with pytest.raises(ShapeError):
        manifold_penalty(np.zeros((2, 3)), np.eye(4))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.3, 3.0))
def test_penalty_nonnegative(seed, rho):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    Y = rng.normal(size=(3, n))
    F = rng.normal(size=(int(rng.integers(1, 5)), n))
    g = build_laplacian(Y, rho=rho)
    assert manifold_penalty(F, g) >= -1e-10
