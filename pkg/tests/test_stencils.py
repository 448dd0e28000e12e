from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from piezobeam.stencils import (
    D1_BACKWARD,
    D1_CENTRAL,
    D2_CENTRAL,
    D3_BACKWARD,
    D4_CENTRAL,
    d1_central,
    d1_onesided_backward,
    d2_central,
    d3_onesided_backward,
    d4_central,
    fit_stencil,
    observed_order,
)


def sample(f, x0, dx, lo=-4, hi=4):
    """Array of f on x0 + k*dx, k = lo..hi, plus the index of x0."""
    k = np.arange(lo, hi + 1)
    return f(x0 + k * dx), -lo


def test_exact_weights():
    assert D1_CENTRAL.coeffs == (Fraction(-1, 2), 0, Fraction(1, 2))
    assert D2_CENTRAL.coeffs == (1, -2, 1)
    assert D4_CENTRAL.coeffs == (1, -4, 6, -4, 1)
    assert D1_BACKWARD.coeffs == (Fraction(1, 2), -2, Fraction(3, 2))
    # third derivative over x_{i+1}..x_{i-3}
    assert D3_BACKWARD.coeffs == (Fraction(3, 2), -5, 6, -3, Fraction(1, 2))
    assert D3_BACKWARD.order == 2


@pytest.mark.parametrize("st_", [D1_CENTRAL, D1_BACKWARD, D2_CENTRAL, D3_BACKWARD, D4_CENTRAL])
def test_moment_conditions(st_):
    for p in range(len(st_.offsets)):
        assert st_.moment(p) == (1 if p == st_.deriv else 0)


def test_fit_rejects_too_few_nodes():
    with pytest.raises(ValueError):
        fit_stencil((0, 1), 2)


def test_d1_central_examples():
    z, i = sample(lambda x: x**2, 1.0, 0.37)
    assert d1_central(z, i, 0.37) == pytest.approx(2.0, rel=1e-13)
    assert d1_central(np.full(9, 4.2), 4, 0.1) == 0.0
    z, i = sample(lambda x: x**4, 1.0, 0.1)
    assert d1_central(z, i, 0.1) == pytest.approx(4.04, rel=1e-12)


def test_d1_backward_examples():
    z, i = sample(lambda x: x**2, 1.0, 0.1)
    assert d1_onesided_backward(z, i, 0.1) == pytest.approx(2.0, rel=1e-13)
    assert d1_onesided_backward(np.ones(9), 4, 0.1) == 0.0
    z, i = sample(lambda x: x**3, 1.0, 0.1)
    # 3 - f'''(1) * dx**2 / 3 with f''' = 6
    assert d1_onesided_backward(z, i, 0.1) == pytest.approx(2.98, rel=1e-12)


def test_d2_central_examples():
    z, i = sample(lambda x: x**2, 0.3, 0.2)
    assert d2_central(z, i, 0.2) == pytest.approx(2.0, rel=1e-12)
    z, i = sample(lambda x: x**4, 1.0, 0.1)
    assert d2_central(z, i, 0.1) == pytest.approx(12.02, rel=1e-12)
    z, i = sample(lambda x: 3 * x - 1, 1.0, 0.1)
    assert d2_central(z, i, 0.1) == pytest.approx(0.0, abs=1e-12)


def test_d4_central_examples():
    z, i = sample(lambda x: x**4, 0.7, 0.1)
    assert d4_central(z, i, 0.1) == pytest.approx(24.0, rel=1e-9)
    z, i = sample(lambda x: x**3, 0.7, 0.1)
    assert d4_central(z, i, 0.1) == pytest.approx(0.0, abs=1e-8)
    # x**6: 360 x**2 + dx**2 / 6 * f^(6) = 361.2; no higher terms for a sextic
    z, i = sample(lambda x: x**6, 1.0, 0.1)
    brute = (0.9**6 * -4 + 0.8**6 + 6 * 1.0 - 4 * 1.1**6 + 1.2**6) / 0.1**4
    assert d4_central(z, i, 0.1) == pytest.approx(brute, rel=1e-10)
    assert d4_central(z, i, 0.1) == pytest.approx(360.0 + 720.0 * 0.01 / 6, rel=1e-9)


def test_d3_backward_examples():
    z, i = sample(lambda x: x**3, 1.0, 0.1)
    assert d3_onesided_backward(z, i, 0.1) == pytest.approx(6.0, rel=1e-9)
    z, i = sample(lambda x: x**2, 1.0, 0.1)
    assert d3_onesided_backward(z, i, 0.1) == pytest.approx(0.0, abs=1e-9)
    errs = []
    for dx in (0.05, 0.025, 0.0125):
        z, i = sample(lambda x: x**5, 1.0, dx)
        errs.append(abs(d3_onesided_backward(z, i, dx) - 60.0))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_apply_checks_bounds():
    with pytest.raises(IndexError):
        D4_CENTRAL.apply(np.zeros(5), 1, 0.1)


@pytest.mark.parametrize("st_", [D1_CENTRAL, D1_BACKWARD, D2_CENTRAL, D3_BACKWARD, D4_CENTRAL])
def test_observed_order_on_exp(st_):
    orders = observed_order(st_, np.exp, np.exp, 0.5, [1 / 32, 1 / 64, 1 / 128])
    assert all(abs(o - st_.order) <= 0.15 for o in orders)


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.floats(-1, 1), st.sampled_from([0.1, 0.05, 0.02]))
def test_exact_on_cubics(c, x0, dx):
    def f(x):
        return c[0] + c[1] * x + c[2] * x**2 + c[3] * x**3

    z, i = sample(f, x0, dx)
    scale = 1 + sum(abs(v) for v in c)
    assert d1_central(z, i, dx) == pytest.approx(c[1] + 2 * c[2] * x0 + 3 * c[3] * x0**2 + c[3] * dx**2, abs=1e-9 * scale)
    assert d2_central(z, i, dx) == pytest.approx(2 * c[2] + 6 * c[3] * x0, abs=1e-7 * scale)
    assert d3_onesided_backward(z, i, dx) == pytest.approx(6 * c[3], abs=1e-4 * scale / dx)
