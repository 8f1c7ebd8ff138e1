import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from attainset.activation import gelu, gelu_prime, gelu_second, normal_pdf


def _cdf_by_quadrature(x):
    # Independent oracle: integrate the normal density from -inf to x.
    val, err = quad(lambda u: np.exp(-0.5 * u * u) / np.sqrt(2 * np.pi),
                    -np.inf, x, epsabs=1e-13, epsrel=1e-13)
    assert err < 1e-11
    return val


def test_gelu_at_zero():
    assert gelu(0.0) == 0.0


def test_gelu_saturates():
    assert abs(gelu(10.0) - 10.0) < 1e-9


def test_gelu_against_quadrature_oracle():
    expected = 1.0 * _cdf_by_quadrature(1.0)
    assert abs(gelu(1.0) - expected) < 1e-12


def test_gelu_prime_at_zero():
    assert gelu_prime(0.0) == 0.5


def test_gelu_prime_saturates_to_one():
    assert abs(gelu_prime(38.0) - 1.0) < 1e-9


def test_gelu_prime_finite_differences():
    rng = np.random.default_rng(0)
    xs = rng.uniform(-6, 6, size=20)
    h = 1e-5
    fd = (gelu(xs + h) - gelu(xs - h)) / (2 * h)
    assert np.max(np.abs(gelu_prime(xs) - fd)) < 1e-6


def test_gelu_second_at_zero():
    assert abs(gelu_second(0.0) - 2.0 / np.sqrt(2 * np.pi)) < 1e-14


def test_gelu_second_roots():
    assert abs(gelu_second(np.sqrt(2.0))) < 1e-14
    assert abs(gelu_second(-np.sqrt(2.0))) < 1e-14


def test_gelu_second_finite_differences():
    rng = np.random.default_rng(1)
    xs = rng.uniform(-6, 6, size=20)
    h = 1e-5
    fd = (gelu_prime(xs + h) - gelu_prime(xs - h)) / (2 * h)
    assert np.max(np.abs(gelu_second(xs) - fd)) < 1e-6


def test_derivative_bounds_on_dense_grid():
    xs = np.linspace(-10, 10, 200_001)
    p = gelu_prime(xs)
    assert np.all(p > -0.13) and np.all(p < 1.13)
    assert np.max(np.abs(gelu_second(xs))) <= 0.8


@pytest.mark.parametrize("fn", [gelu, gelu_prime, gelu_second])
@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_nonfinite_rejected(fn, bad):
    with pytest.raises(ValueError):
        fn(bad)
    with pytest.raises(ValueError):
        fn(np.array([0.0, bad]))


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-1e150, max_value=1e150,
                 allow_nan=False, allow_infinity=False))
def test_outputs_finite_and_bounded(x):
    assert np.isfinite(gelu(x))
    p = gelu_prime(x)
    assert np.isfinite(p) and -0.13 < p < 1.13
    s = gelu_second(x)
    assert np.isfinite(s) and abs(s) <= 0.8


def test_vectorised_matches_scalar():
    xs = np.linspace(-3, 3, 7)
    for fn in (gelu, gelu_prime, gelu_second):
        vec = fn(xs)
        assert vec.shape == xs.shape
        for xi, vi in zip(xs, vec):
            assert fn(float(xi)) == vi


def test_pdf_consistency():
    assert abs(normal_pdf(0.0) - 1.0 / np.sqrt(2 * np.pi)) < 1e-15
