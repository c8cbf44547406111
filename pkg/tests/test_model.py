import numpy as np
import pytest

from depthkit import (
    Dataset,
    DimensionError,
    Direction,
    HALF_AT_ZERO,
    InfluenceSet,
    InfluenceSpace,
    RIGHT_CLOSED,
    SolverConfig,
    ValidationError,
    classify_signs,
    evaluate_d01,
)


def test_dataset_row_mismatch():
    with pytest.raises(DimensionError):
        Dataset(np.ones((3, 2)), np.ones((4, 1)))


def test_dataset_shapes():
    ds = Dataset(np.ones((5, 2)), np.ones((5, 3)))
    assert ds.n == 5


def test_influence_factored_vs_explicit_projections():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 3))
    R = rng.standard_normal((20, 2))
    fac = InfluenceSet.factored(X, R)
    exp = InfluenceSet.explicit(fac.explicit_matrix(), shape=(3, 2))
    V = rng.standard_normal((3, 2))
    assert np.allclose(fac.projections(V), exp.projections(V))


def test_explicit_matrix_row_major_vec():
    # row i of the explicit matrix is vec(x_i r_i^T) in C order
    X = np.array([[1.0, 2.0]])
    R = np.array([[3.0, 4.0, 5.0]])
    inf = InfluenceSet.factored(X, R)
    expected = np.outer(X[0], R[0]).ravel()
    assert np.array_equal(inf.explicit_matrix()[0], expected)


def test_symmetric_space_requires_square():
    with pytest.raises(DimensionError):
        InfluenceSet.factored(np.ones((4, 2)), np.ones((4, 3)),
                              space=InfluenceSpace.symmetric())


def test_classify_signs_conventions():
    proj = np.array([1.0, -1.0, 0.0, 1e-13])
    rc = classify_signs(proj, RIGHT_CLOSED)
    hz = classify_signs(proj, HALF_AT_ZERO)
    assert np.array_equal(rc, [1.0, 0.0, 1.0, 1.0])
    assert np.array_equal(hz, [1.0, 0.0, 0.5, 0.5])


def test_classify_signs_unknown_convention():
    with pytest.raises(ValidationError):
        classify_signs(np.zeros(2), "open")


def test_evaluate_d01_r1():
    inf = InfluenceSet.explicit(np.array([[1.0], [-2.0], [3.0]]), shape=(1, 1))
    assert evaluate_d01(inf, np.array([[1.0]])) == 2.0
    assert evaluate_d01(inf, np.array([[-1.0]])) == 1.0


def test_evaluate_d01_product_form():
    # T_i = e1 for all i, frame [e1 e2]: second coordinate projects to 0,
    # counted 1 under right_closed, so the product contributes fully
    T = np.tile(np.array([1.0, 0.0]), (4, 1))
    inf = InfluenceSet.explicit(T, shape=(1, 2))
    V = np.eye(2)
    assert evaluate_d01(inf, Direction(V, r=2)) == 4.0


def test_direction_validation():
    with pytest.raises(ValidationError):
        Direction(np.array([1.0, 1.0]))
    with pytest.raises(ValidationError):
        Direction(np.ones((3, 2)) / 2.0, r=2)


def test_zeta_schedule():
    cfg = SolverConfig()
    sched = cfg.zeta_schedule()
    assert sched[0] == 1.0
    assert all(z <= cfg.zeta_max for z in sched)
    assert sched[-1] * cfg.zeta_factor > cfg.zeta_max
    assert np.allclose(np.diff(np.log(sched)), np.log(cfg.zeta_factor))


def test_config_with():
    cfg = SolverConfig().with_(seed=5, n_starts=3)
    assert cfg.seed == 5 and cfg.n_starts == 3
    assert SolverConfig().seed is None
