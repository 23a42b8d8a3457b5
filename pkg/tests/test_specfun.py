import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsma_covert.specfun import (
    exp1_series,
    ln_gamma,
    lower_inc_gamma,
    upper_inc_gamma,
    upper_inc_gamma_quad,
    whittaker_w_restricted,
    whittaker_w_restricted_quad,
)

# Frozen from a 30-digit mpmath evaluation.
E1_SMALL = 2.91439553524528375909
W_HALF = 0.524741377188970778362
W_ONE = 0.759590697662946560682


@pytest.mark.parametrize("x, expected", [
    (1.0, 0.0),
    (0.5, 0.5 * math.log(math.pi)),
    (10.0, math.log(362880.0)),
])
def test_ln_gamma(x, expected):
    assert ln_gamma(x) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_ln_gamma_domain():
    with pytest.raises(ValueError):
        ln_gamma(0.0)


def test_upper_gamma_unit_shape():
    assert upper_inc_gamma(1.0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)


def test_upper_gamma_zero_shape_matches_series():
    z = 0.0314159265
    assert exp1_series(z) == pytest.approx(E1_SMALL, rel=1e-13)
    assert upper_inc_gamma(0.0, z) == pytest.approx(exp1_series(z), rel=1e-10)


def test_upper_gamma_complete_limit():
    assert upper_inc_gamma(2.0, 1e-15) == pytest.approx(1.0, rel=1e-12)


def test_upper_gamma_domain():
    with pytest.raises(ValueError):
        upper_inc_gamma(0.5, 0.0)
    with pytest.raises(ValueError):
        whittaker_w_restricted(0.0, -1.0)


@pytest.mark.parametrize("s", [-2.0, -1.0, -0.75, -0.5, -0.25, 0.0, 0.3, 1.0, 2.5])
@pytest.mark.parametrize("z", [1e-4, 1e-2, 0.5, 3.0, 20.0, 50.0])
def test_upper_gamma_against_quadrature(s, z):
    assert upper_inc_gamma(s, z) == pytest.approx(upper_inc_gamma_quad(s, z), rel=1e-10)


def test_whittaker_zero_index():
    assert whittaker_w_restricted(0.0, 1.0) == pytest.approx(math.exp(-0.5), rel=1e-14)


def test_whittaker_examples():
    assert whittaker_w_restricted(-0.5, 0.0314159265) == pytest.approx(W_HALF, rel=1e-10)
    assert whittaker_w_restricted(-1.0, 0.1) == pytest.approx(W_ONE, rel=1e-10)


@pytest.mark.parametrize("v", [-1.0, -0.75, -0.5, -0.25, 0.0])
@pytest.mark.parametrize("z", np.geomspace(1e-3, 10.0, 9))
def test_whittaker_recurrence_vs_quadrature(v, z):
    assert whittaker_w_restricted(v, z) == pytest.approx(whittaker_w_restricted_quad(v, z), rel=1e-9)


@settings(max_examples=60)
@given(st.floats(-2.0, 5.0), st.floats(1e-3, 30.0), st.floats(1.01, 2.0))
def test_upper_gamma_decreasing_in_z(s, z, factor):
    assert upper_inc_gamma(s, z * factor) < upper_inc_gamma(s, z)


@settings(max_examples=60)
@given(st.floats(0.05, 20.0), st.floats(1e-3, 40.0))
def test_lower_plus_upper_is_complete(s, z):
    total = upper_inc_gamma(s, z) + lower_inc_gamma(s, z)
    assert total == pytest.approx(math.gamma(s), rel=1e-10)
