"""Randomized invariance checks."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from sphericity.calibration import calibrate
from sphericity.matrixcore import gram, summarize
from sphericity.power import SigmaSpec, functionals, john_power, qlrt_power
from sphericity.teststats import StatKind, chen_terms_bruteforce, chen_terms_reduced, compute, john_U

seeds = st.integers(0, 2 ** 32 - 1)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, p=st.integers(5, 60), n=st.integers(4, 9), c=st.floats(1e-3, 1e3))
def test_statistics_scale_invariant(seed, p, n, c):
    X = np.random.default_rng(seed).standard_normal((p, n))
    if p <= n:
        return
    for kind in StatKind:
        a = compute(kind, summarize(X), gram(X)).value
        b = compute(kind, summarize(c * X), gram(c * X)).value
        tol = 1e-12 if kind in (StatKind.JOHN, StatKind.QLRT) else 1e-9
        assert abs(a - b) <= tol * max(1.0, abs(a)) * 10


@settings(max_examples=40, deadline=None)
@given(seed=seeds, p=st.integers(2, 40), n=st.integers(2, 40))
def test_role_swap(seed, p, n):
    X = np.random.default_rng(seed).standard_normal((p, n))
    U = john_U(summarize(X, need_logdet=False)).value
    Ut = john_U(summarize(X.T, need_logdet=False)).value
    assert abs((n * U - p) - (p * Ut - n)) <= 1e-10 * max(p, n)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, n=st.integers(4, 8), p=st.integers(4, 16))
def test_chen_reduced_matches_bruteforce(seed, n, p):
    G = gram(np.random.default_rng(seed).standard_normal((p, n)))
    np.testing.assert_allclose(chen_terms_reduced(G), chen_terms_bruteforce(G), rtol=1e-9, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(sigma2=st.floats(1e-3, 1e3), nu4=st.floats(1.0, 20.0), n=st.integers(4, 128),
       alpha=st.sampled_from([0.01, 0.05, 0.1]))
def test_power_null_reduction(sigma2, nu4, n, alpha):
    f = functionals(SigmaSpec.identity(10, sigma2))
    p = 10 * n ** 3
    assert abs(john_power(f, nu4, n, p, alpha) - alpha) <= 1e-12
    assert abs(qlrt_power(f, nu4, n, p, alpha) - alpha) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=seeds, p=st.integers(10, 80), n=st.integers(2, 8))
def test_pvalue_in_unit_interval(seed, p, n):
    X = np.random.default_rng(seed).standard_normal((p, n))
    for kind in (StatKind.JOHN, StatKind.QLRT):
        res = calibrate(compute(kind, summarize(X)), 3.0)
        assert 0.0 <= res.p_value <= 1.0
