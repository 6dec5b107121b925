import warnings

import numpy as np
import pytest

from sphericity.errors import NonPositiveDiagonal
from sphericity.power import (RegimeWarning, SigmaSpec, functionals, john_alt_params,
                              john_power, qlrt_alt_params, qlrt_power)


def test_functionals_identity():
    f = functionals(SigmaSpec.identity(100))
    assert (f.gamma, f.theta, f.omega) == (1.0, 1.0, 1.0)


@pytest.mark.parametrize("a,b,delta,expected", [
    (0.5, 1.0, 0.5, (0.75, 0.625, 0.625)),
    (1.0, 0.5, 0.25, (0.875, 0.8125, 0.8125)),
    (0.5, 1.0, 0.1, (0.55, 0.325, 0.325)),
])
def test_functionals_two_point(a, b, delta, expected):
    f = functionals(SigmaSpec.two_point(2400, a, b, delta))
    np.testing.assert_allclose((f.gamma, f.theta, f.omega), expected, rtol=1e-12)


def test_functionals_spd_theta_exceeds_omega(rng):
    A = rng.standard_normal((20, 20))
    f = functionals(SigmaSpec.spd(A @ A.T + np.eye(20)))
    assert f.omega <= f.theta
    assert f.gamma ** 2 <= f.theta


def test_non_positive_diagonal():
    with pytest.raises(NonPositiveDiagonal):
        SigmaSpec.diagonal([1.0, 0.0, 2.0])


def test_john_alt_params_null():
    shift, mean, sd = john_alt_params(functionals(SigmaSpec.identity(10, 4.0)), 3.0, 64, 1000)
    assert shift == pytest.approx(0.0) and mean == pytest.approx(1.0) and sd == pytest.approx(2.0)


def test_john_alt_params_power1():
    f = functionals(SigmaSpec.two_point(100, 0.5, 1.0, 0.5))
    shift, mean, sd = john_alt_params(f, 3.0, 64, 2400)
    assert shift == pytest.approx((0.625 / 0.5625 - 1) * 64)
    assert mean == pytest.approx(0.625 / 0.5625)
    assert sd == pytest.approx(2 * 0.625 / 0.5625)
    assert john_alt_params(f, 4.5, 64, 2400)[1] == pytest.approx(2.7777777777777777)


def test_qlrt_alt_params_null():
    n, p = 64, 2400
    center, mean, sd = qlrt_alt_params(functionals(SigmaSpec.identity(10)), 4.5, n, p)
    assert center == pytest.approx(n / 2 + n * n / (6 * p))
    assert mean == pytest.approx(1.25)
    assert sd == pytest.approx(1.0)


def test_qlrt_alt_params_power1():
    f = functionals(SigmaSpec.two_point(100, 0.5, 1.0, 0.5))
    center = qlrt_alt_params(f, 3.0, 64, 2400)[0]
    expected = (0.625 / 0.5625) * 32 + (0.625 ** 2 / (2 * 0.31640625)
                                        - 0.625 ** 1.5 / (3 * 0.421875)) * 4096 / 2400
    assert center == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("sigma2", [0.25, 1.0, 7.0])
@pytest.mark.parametrize("alpha", [0.01, 0.05, 0.1])
def test_null_reduction(sigma2, alpha):
    f = functionals(SigmaSpec.identity(50, sigma2))
    assert john_power(f, 4.5, 64, 2400, alpha) == pytest.approx(alpha, abs=1e-12)
    assert qlrt_power(f, 4.5, 64, 2400, alpha) == pytest.approx(alpha, abs=1e-12)


def test_power_scale_invariant():
    base = SigmaSpec.two_point(2400, 0.5, 1.0, 0.3)
    for c in (0.1, 10.0):
        scaled = SigmaSpec.two_point(2400, 0.5 * c, 1.0 * c, 0.3)
        for fn in (john_power, qlrt_power):
            assert fn(functionals(scaled), 3.0, 64, 2400) == pytest.approx(
                fn(functionals(base), 3.0, 64, 2400), abs=1e-12)


def test_power_increases_with_n():
    f = functionals(SigmaSpec.two_point(100, 1.0, 0.5, 0.25))
    values = [john_power(f, 3.0, n, 10 ** 6) for n in (16, 32, 64)]
    assert values == sorted(values)


def test_regime_warning():
    f = functionals(SigmaSpec.identity(10))
    with pytest.warns(RegimeWarning):
        john_power(f, 3.0, 64, 100)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        qlrt_power(f, 3.0, 64, 2400)


def test_sqrt_apply_spd(rng):
    A = rng.standard_normal((6, 6))
    S = A @ A.T + np.eye(6)
    R = SigmaSpec.spd(S).sqrt_apply(np.eye(6))
    np.testing.assert_allclose(R @ R, S, atol=1e-10)
