import numpy as np
import pytest

from depthkit import (
    DimensionError,
    GAUSSIAN,
    LOGISTIC,
    POISSON,
    ValidationError,
    covariance_influences,
    glm_influences,
    location_influences,
    make_phi,
    meta_influences,
    normalize_influences,
    regression_influences,
    triangle_objective,
)
from depthkit.oracle import simplicial_depth_2d


def test_location_influences_values():
    Z = np.array([[1.0, 2.0], [3.0, 4.0]])
    mu = np.array([0.0, 0.0])
    inf = location_influences(Z, mu)
    T = inf.explicit_matrix()
    assert np.allclose(T, -Z)
    assert inf.shape == (1, 2)


def test_location_dimension_mismatch():
    with pytest.raises(DimensionError):
        location_influences(np.ones((3, 2)), np.zeros(3))


def test_regression_influences_values():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((10, 3))
    beta = rng.standard_normal(3)
    y = rng.standard_normal(10)
    inf = regression_influences(X, y, beta)
    T = inf.explicit_matrix()
    expect = (X * (X @ beta - y)[:, None])
    assert np.allclose(T, expect)


def test_glm_gaussian_matches_regression():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((8, 2))
    y = rng.standard_normal(8)
    beta = rng.standard_normal(2)
    a = regression_influences(X, y, beta).explicit_matrix()
    b = glm_influences(X, y[:, None], beta[:, None], GAUSSIAN).explicit_matrix()
    assert np.allclose(a, b)


def test_glm_response_checks():
    X = np.ones((3, 1))
    with pytest.raises(ValidationError):
        glm_influences(X, np.array([[0.0], [2.0], [1.0]]), np.zeros((1, 1)), LOGISTIC)
    with pytest.raises(ValidationError):
        glm_influences(X, np.array([[1.0], [-1.0], [0.0]]), np.zeros((1, 1)), POISSON)
    # valid poisson counts pass
    glm_influences(X, np.array([[0.0], [3.0], [1.0]]), np.zeros((1, 1)), POISSON)


def test_glm_mean_functions():
    theta = np.array([-30.0, 0.0, 30.0])
    mu = LOGISTIC.mean(theta)
    assert mu[0] == pytest.approx(0.0, abs=1e-12)
    assert mu[1] == 0.5
    assert mu[2] == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(POISSON.mean(np.log([1.0, 2.0])), [1.0, 2.0])
    # derivative vs finite differences
    for fam in (GAUSSIAN, LOGISTIC, POISSON):
        t = np.linspace(-2, 2, 9)
        fd = (fam.mean(t + 1e-6) - fam.mean(t - 1e-6)) / 2e-6
        assert np.allclose(fam.mean_deriv(t), fd, atol=1e-5)


def test_covariance_influences_symmetric_space():
    rng = np.random.default_rng(2)
    Y = rng.standard_normal((6, 3))
    inf = covariance_influences(Y, np.eye(3))
    assert inf.shape == (3, 3)
    T = inf.explicit_matrix()
    assert np.allclose(T[0].reshape(3, 3),
                       (np.outer(Y[0], Y[0]) - np.eye(3)) / 6)
    with pytest.raises(ValidationError):
        covariance_influences(Y, np.diag([1.0, -1.0, 1.0]))
    Sig = np.eye(3)
    Sig[0, 1] = 0.5
    with pytest.raises(ValidationError):
        covariance_influences(Y, Sig)


def test_meta_influences_identity_case():
    # residual zero: influence is (S + S_i)^{-1}
    blocks = [(np.zeros(2), np.zeros((2, 1)), np.eye(2))]
    inf = meta_influences(blocks, np.zeros(1), np.eye(2))
    T = inf.explicit_matrix()
    assert np.allclose(T[0].reshape(2, 2), 0.5 * np.eye(2))


def test_normalize_influences_rank_and_orthonormality():
    rng = np.random.default_rng(3)
    T = rng.standard_normal((20, 3)) @ rng.standard_normal((3, 5))
    inf = normalize_influences(
        location_influences(-T, np.zeros(5)))
    U = inf.explicit_matrix()
    assert U.shape[1] == 3
    assert np.allclose(U.T @ U, np.eye(3), atol=1e-10)


def test_normalize_rejects_zero():
    with pytest.raises(ValidationError):
        normalize_influences(location_influences(np.zeros((4, 2)), np.zeros(2)))


def test_triangle_matches_simplicial_depth():
    rng = np.random.default_rng(4)
    phi = make_phi("indicator_01")
    for _ in range(25):
        n = int(rng.integers(5, 15))
        Z = rng.standard_normal((n, 2))
        mu = rng.standard_normal(2)
        val = triangle_objective(Z, mu, phi, np.eye(2))
        assert val == pytest.approx(simplicial_depth_2d(Z, mu), abs=1e-9)


def test_triangle_validates_projection():
    Z = np.random.default_rng(5).standard_normal((6, 3))
    phi = make_phi("indicator_01")
    with pytest.raises(ValidationError):
        triangle_objective(Z, np.zeros(3), phi, np.ones((3, 2)))
    with pytest.raises(DimensionError):
        triangle_objective(Z, np.zeros(3), phi, np.eye(3))
