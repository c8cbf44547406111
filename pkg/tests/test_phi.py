import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from depthkit import FAMILIES, NonDifferentiableError, SMOOTH_FAMILIES, make_phi

BISQUARE_PEAK = 16.0 / (25.0 * math.sqrt(5.0))


def test_sign_values():
    phi = make_phi("sign")
    assert phi.value(0.0) == 1.0  # sgn(0) = 1 by convention
    assert phi.value(-2.0) == -1.0
    assert np.array_equal(phi.value(np.array([1.0, -1.0])), [1.0, -1.0])


def test_rectified_families_nonnegative():
    t = np.linspace(-3, 3, 301)
    for fam in ("rectified_sign", "rectified_huber", "rectified_truncated_sign",
                "rectified_bisquare"):
        assert np.min(make_phi(fam).value(t)) >= 0.0


def test_huber_clips():
    phi = make_phi("huber", c=2.0)
    assert phi.value(1.0) == 0.5
    assert phi.value(5.0) == 1.0
    assert phi.value(-5.0) == -1.0


def test_truncated_sign_window():
    phi = make_phi("truncated_sign")
    assert phi.value(0.5) == 1.0
    assert phi.value(1.5) == 0.0
    assert phi.value(-0.5) == -1.0


def test_bisquare_peak_location_and_height():
    phi = make_phi("bisquare")
    tstar = 1.0 / math.sqrt(5.0)
    assert phi.value(tstar) == pytest.approx(1.0)
    grid = np.linspace(-2, 2, 2001)
    assert np.max(np.abs(phi.value(grid))) <= 1.0 + 1e-12


def test_indicator():
    phi = make_phi("indicator_01")
    assert phi.value(0.0) == 1.0
    assert phi.value(-1e-9) == 0.0


def test_sigmoid_limits():
    for fam in ("normal_cdf", "tanh", "arctan"):
        phi = make_phi(fam, zeta=50.0)
        hi, lo = float(phi.value(1.0)), float(phi.value(-1.0))
        assert hi > 0.95 and lo < (0.05 if fam == "normal_cdf" else -0.95)


@pytest.mark.parametrize("fam", SMOOTH_FAMILIES)
def test_smooth_grad_matches_fd(fam):
    rng = np.random.default_rng(0)
    phi = make_phi(fam, zeta=2.0, c=1.5)
    t = rng.uniform(-2, 2, size=50)
    h = 1e-6
    fd = (phi.value(t + h) - phi.value(t - h)) / (2 * h)
    assert np.max(np.abs(phi.grad(t) - fd)) < 1e-6


@pytest.mark.parametrize("fam", FAMILIES)
def test_value_and_grad_consistent(fam):
    rng = np.random.default_rng(1)
    phi = make_phi(fam, zeta=1.7)
    t = rng.uniform(-2, 2, size=40)
    v, g = phi.value_and_grad(t)
    # the fused path may reassociate products; allow machine-precision play
    assert np.allclose(np.asarray(v), np.asarray(phi.value(t)),
                       rtol=0, atol=5e-16)
    assert np.allclose(np.asarray(g), np.asarray(phi.grad(t)),
                       rtol=0, atol=5e-15)


def test_strict_grad_raises_at_kink():
    phi = make_phi("rectified_sign")
    with pytest.raises(NonDifferentiableError):
        phi.grad(np.array([0.0]), strict=True)
    # away from the kink strict evaluation is fine
    assert phi.grad(np.array([0.5]), strict=True)[0] == 0.0


@pytest.mark.parametrize("fam,expected", [
    ("tanh", 4.0 / (3.0 * math.sqrt(3.0))),
    ("normal_cdf", math.exp(-0.5) / math.sqrt(2.0 * math.pi)),
    ("arctan", 3.0 * math.sqrt(3.0) / (4.0 * math.pi)),
])
def test_sigmoid_lipschitz_zeta_scaling(fam, expected):
    assert make_phi(fam, zeta=1.0).lipschitz() == pytest.approx(expected)
    assert make_phi(fam, zeta=3.0).lipschitz() == pytest.approx(9.0 * expected)


@pytest.mark.parametrize("fam", SMOOTH_FAMILIES)
def test_lipschitz_bounds_numerical_slope(fam):
    phi = make_phi(fam, zeta=2.0)
    L = phi.lipschitz()
    t = np.linspace(-4, 4, 4001)
    g = phi.grad(t)
    slopes = np.abs(np.diff(g) / np.diff(t))
    assert np.max(slopes) <= L * (1 + 1e-3)


def test_jump_families_have_no_lipschitz():
    for fam in ("sign", "rectified_sign", "truncated_sign", "indicator_01"):
        assert make_phi(fam).lipschitz() is None


def test_invalid_parameters():
    from depthkit import ValidationError
    with pytest.raises(ValidationError):
        make_phi("nope")
    with pytest.raises(ValidationError):
        make_phi("tanh", zeta=0.0)
    with pytest.raises(ValidationError):
        make_phi("huber", c=-1.0)


@settings(deadline=None, max_examples=60)
@given(st.sampled_from(FAMILIES),
       st.floats(-50, 50, allow_nan=False),
       st.floats(0.1, 20))
def test_values_bounded_by_one(fam, t, zeta):
    phi = make_phi(fam, zeta=zeta)
    assert abs(float(phi.value(t))) <= 1.0 + 1e-12
