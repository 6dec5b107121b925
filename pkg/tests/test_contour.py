import cmath
import math

import numpy as np
import pytest

from sphericity.contour import (Integrand, TOLERANCE, chi_calib, closed_form, correction_integral,
                                default_rho, radius_bounds)
from sphericity.errors import NonVanishingImaginaryPart, PoleOnContour


def _signed_root_chi(m, A, B, C):
    r = cmath.sqrt(B * B - 4 * A * C)
    if (r.imag > 0) != (B.imag > 0):
        r = -r
    return (-B + r) / (2 * A)


@pytest.mark.parametrize("m", [0.3 * cmath.exp(1j), 0.05 * cmath.exp(2.5j), 0.6 * cmath.exp(-0.7j)])
def test_chi_large_p_limit(m):
    n, nu4 = 8, 3.0
    A, B = m, m * m - 1
    C = m ** 3 / n * (nu4 - 2 + m * m / (1 - m * m))
    assert abs(chi_calib(m, n, 10 ** 12, nu4) - _signed_root_chi(m, A, B, C)) < 1e-6


def test_chi_conjugate_symmetry():
    m = 0.01 * np.exp(1j * np.linspace(0.1, 3.0, 17))
    a = chi_calib(np.conj(m), 8, 10 ** 6, 4.5)
    b = np.conj(chi_calib(m, 8, 10 ** 6, 4.5))
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-300)


def test_chi_continuity():
    m = 0.05 * np.exp(2j * np.pi * np.arange(4096) / 4096)
    chi = chi_calib(m, 8, 10 ** 6, 3.0)
    jumps = np.abs(np.diff(np.append(chi, chi[0])))
    assert jumps.max() < 1e-3


def test_chi_outside_unit_disk():
    with pytest.raises(PoleOnContour):
        chi_calib(1.2, 8, 100, 3.0)


def test_f2_example():
    r = correction_integral(Integrand.F2, 8, 10 ** 6, 3.0, rho=1e-3)
    assert abs(r.value) < 1e-8


@pytest.mark.parametrize("nu4", [3.0, 4.5])
def test_f1_values(nu4):
    r = correction_integral(Integrand.F1, 8, 10 ** 6, nu4)
    assert abs(r.value - (nu4 - 2)) < 1e-6


def test_f3_example():
    r = correction_integral(Integrand.F3, 8, 10 ** 6, 3.0)
    assert r.closed_form == pytest.approx(-0.5 + 64 / 3e6, rel=1e-12)
    assert abs(r.value - r.closed_form) < 5e-6


@pytest.mark.parametrize("f", [Integrand.F1, Integrand.F2])
def test_radius_independence(f):
    rho = default_rho(f, 16, 10 ** 4)
    a = correction_integral(f, 16, 10 ** 4, 4.5, rho=rho).value
    b = correction_integral(f, 16, 10 ** 4, 4.5, rho=rho / 2).value
    assert abs(a - b) < 1e-8


@pytest.mark.parametrize("f", list(Integrand))
def test_node_convergence(f):
    a = correction_integral(f, 8, 10 ** 6, 3.0, nodes=2048).value
    b = correction_integral(f, 8, 10 ** 6, 3.0, nodes=4096).value
    assert abs(a - b) < 1e-10


@pytest.mark.parametrize("n,nu4", [(4, 3.0), (8, 4.5), (16, 3.0)])
def test_f3_residual_decays(n, nu4):
    diffs = [correction_integral(Integrand.F3, n, p, nu4).diff for p in (10 ** 4, 10 ** 5, 10 ** 6)]
    assert diffs[0] > diffs[1] > diffs[2]


def test_rho_precondition_message():
    with pytest.raises(PoleOnContour, match="sqrt\\(n/p\\)"):
        correction_integral(Integrand.F1, 64, 128, 3.0, rho=0.9)


def test_f3_needs_rho_beyond_branch_point():
    lo, hi = radius_bounds(Integrand.F3, 8, 10 ** 6)
    assert lo == pytest.approx(math.sqrt(8e-6), rel=1e-3)
    with pytest.raises(PoleOnContour, match="branch points"):
        correction_integral(Integrand.F3, 8, 10 ** 6, 3.0, rho=0.5 * lo)


def test_nodes_power_of_two():
    with pytest.raises(ValueError):
        correction_integral(Integrand.F1, 8, 10 ** 6, 3.0, nodes=1000)


def test_imaginary_part_guard(monkeypatch):
    import sphericity.contour as contour

    monkeypatch.setattr(contour, "chi_calib", lambda m, *a: 1j * m)
    with pytest.raises(NonVanishingImaginaryPart):
        correction_integral(Integrand.F1, 8, 10 ** 6, 3.0)


def test_closed_forms():
    assert closed_form("F1", 4, 100, 4.5) == 2.5
    assert closed_form("F2", 4, 100, 4.5) == 0.0
    assert TOLERANCE[Integrand.F3] == 5e-6
