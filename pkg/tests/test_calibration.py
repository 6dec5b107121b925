import math

import numpy as np
import pytest

from sphericity.calibration import (NullKind, NullModel, calibrate, classical_swap,
                                    classical_swap_z, decide, estimate_nu4, standardize)
from sphericity.errors import KindMismatch, ZeroTrace
from sphericity.matrixcore import summarize
from sphericity.populations import EntryDist, PopulationSpec, SeedSpec, sample_array
from sphericity.teststats import StatKind, StatisticValue, john_U, qlrt_L


def test_john_fixture(orthogonal_4x2):
    res = calibrate(john_U(summarize(orthogonal_4x2)), nu4=3.0)
    assert res.z == pytest.approx(-1.5)
    assert res.p_value == pytest.approx(0.9331927987311419, abs=1e-12)
    assert not any(res.reject_at.values())


def test_qlrt_centering_gives_half():
    n, p, nu4 = 64, 2400, 4.5
    L = n / 2 + n * n / (6 * p) + (nu4 - 2) / 2
    res = calibrate(StatisticValue(StatKind.QLRT, L, n, p), nu4)
    assert res.z == pytest.approx(0.0, abs=1e-12)
    assert res.p_value == pytest.approx(0.5)


def test_chen_zero():
    res = calibrate(StatisticValue(StatKind.CHEN, 0.0, 64, 320), 3.0)
    assert (res.z, res.p_value) == (0.0, 0.5)


def test_kind_mismatch():
    stat = StatisticValue(StatKind.JOHN, 1.0, 2, 4)
    with pytest.raises(KindMismatch):
        standardize(stat, NullModel(NullKind.QLRT_ULTRA, 3.0, 2, 4))


def test_nu4_must_be_at_least_one():
    with pytest.raises(ValueError):
        NullModel(NullKind.JOHN_ULTRA, 0.5, 2, 4)


def test_degenerate_qlrt_rejects():
    res = calibrate(StatisticValue(StatKind.QLRT, math.inf, 5, 3, degenerate=True), 3.0)
    assert res.degenerate and res.p_value == 0.0 and all(res.reject_at.values())


def test_decisions_are_nested():
    for z in np.linspace(-3, 4, 57):
        d = decide(z, (0.01, 0.05, 0.10))
        assert d[0.01] <= d[0.05] <= d[0.10]


def test_pvalue_decreasing_in_z():
    ps = [calibrate(StatisticValue(StatKind.CHEN, u, 10, 100), 3.0).p_value
          for u in np.linspace(-1, 1, 41)]
    assert all(a > b for a, b in zip(ps, ps[1:]))


def test_classical_swap_identity_covariance():
    # rows of X are orthogonal with squared norm n = 4, so (1/n) XX' = I_2
    X = np.array([[1.0, 1.0, 1.0, 1.0], [1.0, -1.0, 1.0, -1.0]])
    res = classical_swap(X, nu4=3.0)
    assert res.statistic.value == pytest.approx(0.0, abs=1e-14)
    # centering p/2 + p^2/(6n) + (nu4 - 2)/2 = 1 + 1/6 + 1/2
    assert res.z == pytest.approx(-5.0 / 3.0, rel=1e-12)


def test_classical_swap_size():
    pop = PopulationSpec(EntryDist.NORMAL)
    rej = 0
    reps = 2000
    for i in range(reps):
        X = sample_array(pop, 5, 500, SeedSpec(99, i))
        rej += classical_swap_z(summarize(X.T), 3.0).reject_at[0.05]
    assert abs(rej / reps - 0.05) <= 0.015


def test_role_swap_identity(rng):
    for p, n in [(7, 5), (30, 12), (9, 40)]:
        X = rng.standard_normal((p, n))
        U = john_U(summarize(X, need_logdet=False)).value
        Ut = john_U(summarize(X.T, need_logdet=False)).value
        assert n * U - p == pytest.approx(p * Ut - n, abs=1e-10 * max(p, n))
        a = calibrate(john_U(summarize(X, need_logdet=False)), 3.0).z
        b = calibrate(john_U(summarize(X.T, need_logdet=False)), 3.0).z
        assert a == pytest.approx(b, abs=1e-10 * max(p, n))


def test_qlrt_z_scale_invariant(rng):
    X = rng.standard_normal((100, 8))
    a = calibrate(qlrt_L(summarize(X)), 3.0).z
    b = calibrate(qlrt_L(summarize(1e3 * X)), 3.0).z
    assert b == pytest.approx(a, abs=1e-9)


def test_estimate_nu4_pm_one(rng):
    assert estimate_nu4(rng.choice([-1.0, 1.0], size=(30, 7))) == 1.0


@pytest.mark.parametrize("entry,target,tol", [(EntryDist.NORMAL, 3.0, 0.02),
                                              (EntryDist.GAMMA, 4.5, 0.05)])
def test_estimate_nu4_large_sample(entry, target, tol):
    X = sample_array(PopulationSpec(entry), 1000, 1000, SeedSpec(5))
    assert abs(estimate_nu4(X) - target) <= tol


def test_estimate_nu4_zero_data():
    with pytest.raises(ZeroTrace):
        estimate_nu4(np.zeros((3, 3)))
