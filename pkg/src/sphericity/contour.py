"""Numerical check of the calibrated mean-correction contour integrals.

For ``f`` analytic near ``[-2, 2]`` the mean correction of the linear
spectral statistic ``sum f(lambda_i)`` of ``A = sqrt(p/n) ((1/p) X'X - I)``
is::

    n/(2 pi i) * contour_integral f(-m - 1/m) chi(m) (1 - m^2)/m^2 dm

over ``|m| = rho``.  Closed forms are known for ``x^2`` (``nu4 - 2``),
``x`` (``0``) and ``(p/n) log(1 + sqrt(n/p) x)``
(``-(nu4 - 2)/2 + n^2/(3p)`` up to ``o(n^2/p)``).  This module evaluates the
integrals with the periodic trapezoid rule so the closed forms can be
checked independently.  Nothing in the test pipeline calls it at runtime.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np

from .errors import NonVanishingImaginaryPart, PoleOnContour

DEFAULT_NODES = 4096
IMAG_RTOL = 1e-8


class Integrand(str, enum.Enum):
    F1 = "F1"  # x^2
    F2 = "F2"  # x
    F3 = "F3"  # (p/n) log(1 + sqrt(n/p) x)


def _coefficients(m, n, p, nu4):
    s = math.sqrt(n / p)
    m2 = m * m
    A = m - s * (1.0 + m2)
    B = m2 - 1.0 - (n / p) * m * (1.0 + 2.0 * m2)
    C = (m2 * m / n) * (nu4 - 2.0 + m2 / (1.0 - m2) - 2.0 * (nu4 - 1.0) * m * s) - s * m2 * m2
    return A, B, C


def chi_calib(m, n: int, p: int, nu4: float):
    """Calibrated ``chi_n(m) = (-B + sqrt(B^2 - 4AC)) / (2A)``.

    The square root is the one whose imaginary part has the sign of
    ``Im B``.  That rule is ill-conditioned where ``Im B`` is close to
    zero (it flips between ``~B`` and ``~-B``), so the root is chosen as the
    one pointing along ``B`` (``Re(r conj(B)) >= 0``), which agrees with the
    sign rule wherever the sign rule is well defined and extends it
    continuously across ``Im B = 0``.

    The value is evaluated as ``2C / (-B - r)``, algebraically identical
    but free of the cancellation in ``-B + r`` when ``C`` is tiny.
    Accepts scalars or arrays; ``|m|`` must be below 1.
    """
    m = np.asarray(m, dtype=complex)
    if np.any(np.abs(m) >= 1.0):
        raise PoleOnContour("chi is only defined for |m| < 1")
    A, B, C = _coefficients(m, n, p, nu4)
    if np.any(A == 0):
        raise PoleOnContour("A(m) vanishes at an evaluation point")
    r = np.sqrt(B * B - 4.0 * A * C)
    r = np.where((r * np.conj(B)).real < 0, -r, r)
    chi = 2.0 * C / (-B - r)
    return chi[()] if chi.ndim == 0 else chi


def closed_form(f: Integrand, n: int, p: int, nu4: float) -> float:
    f = Integrand(f)
    if f is Integrand.F1:
        return nu4 - 2.0
    if f is Integrand.F2:
        return 0.0
    return -(nu4 - 2.0) / 2.0 + n * n / (3.0 * p)


def _log_branch_points(n, p):
    """Roots of ``s m^2 - m + s`` (``s = sqrt(n/p)``): zeros of ``1 + s(-m - 1/m)``."""
    s = math.sqrt(n / p)
    disc = 1.0 - 4.0 * s * s
    if disc <= 0:
        return None
    lo = (1.0 - math.sqrt(disc)) / (2.0 * s)
    return lo, 1.0 / lo


def radius_bounds(f: Integrand, n: int, p: int):
    """Open interval of admissible contour radii for ``f``.

    ``x`` and ``x^2``: ``(0, min(sqrt(n/p), 1))``.  The log integrand has
    branch points at ``m = r1 ~ sqrt(n/p)`` and ``m = 1/r1``; the contour must
    separate them, so its radius must exceed ``r1``.
    """
    f = Integrand(f)
    if f is Integrand.F3:
        roots = _log_branch_points(n, p)
        if roots is None:
            raise PoleOnContour(
                f"log integrand has no admissible contour for n/p = {n / p:.3g} (needs n/p < 1/4)"
            )
        return roots[0], min(roots[1], 1.0)
    return 0.0, min(math.sqrt(n / p), 1.0)


def default_rho(f: Integrand, n: int, p: int) -> float:
    f = Integrand(f)
    if f is Integrand.F3:
        lo, hi = radius_bounds(f, n, p)
        return math.sqrt(lo * min(hi, 0.5)) if lo < 0.5 else 0.5 * (lo + hi)
    return min(0.5 * math.sqrt(n / p), 0.05)


def check_rho(f: Integrand, n: int, p: int, rho: float):
    lo, hi = radius_bounds(f, n, p)
    if not lo < rho < hi:
        if Integrand(f) is Integrand.F3:
            msg = (f"rho = {rho:g} must lie strictly between the log branch points "
                   f"{lo:.6g} and {hi:.6g} (rho > sqrt(n/p) = {math.sqrt(n / p):.6g})")
        else:
            msg = f"rho = {rho:g} must satisfy 0 < rho < sqrt(n/p) = {hi:.6g}"
        raise PoleOnContour(msg)


def _f_of_z(f, z, n, p):
    if f is Integrand.F1:
        return z * z
    if f is Integrand.F2:
        return z
    return (p / n) * np.log(1.0 + math.sqrt(n / p) * z)


@dataclass(frozen=True)
class ContourResult:
    f: Integrand
    n: int
    p: int
    nu4: float
    rho: float
    nodes: int
    value: float
    imag: float
    closed_form: float

    @property
    def diff(self) -> float:
        return abs(self.value - self.closed_form)


def correction_integral(
    f: Integrand,
    n: int,
    p: int,
    nu4: float,
    rho: Optional[float] = None,
    nodes: int = DEFAULT_NODES,
    check_imag: bool = True,
) -> ContourResult:
    """Trapezoid-rule value of the mean-correction integral for ``f``.

    Raises
    ------
    PoleOnContour
        ``rho`` outside :func:`radius_bounds`.
    NonVanishingImaginaryPart
        Imaginary part above ``1e-8 (1 + |value|)``; indicates a wrong branch.
    """
    f = Integrand(f)
    if nodes < 256 or nodes & (nodes - 1):
        raise ValueError(f"nodes = {nodes} must be a power of two >= 256")
    if rho is None:
        rho = default_rho(f, n, p)
    check_rho(f, n, p, rho)

    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    m = rho * np.exp(1j * theta)
    z = -m - 1.0 / m
    g = n * _f_of_z(f, z, n, p) * chi_calib(m, n, p, nu4) * (1.0 - m * m) / (m * m)
    # dm = i m dtheta, so (1/(2 pi i)) * integral = mean(g * m)
    total = np.mean(g * m)
    value, imag = float(total.real), float(total.imag)
    if check_imag and abs(imag) > IMAG_RTOL * (1.0 + abs(value)):
        raise NonVanishingImaginaryPart(
            f"{f.value}: imaginary part {imag:.3g} does not vanish (value {value:.6g})"
        )
    return ContourResult(f, n, p, nu4, float(rho), nodes, value, imag, closed_form(f, n, p, nu4))


#: Tolerances of the closed-form comparison.
TOLERANCE = {Integrand.F1: 1e-6, Integrand.F2: 1e-6, Integrand.F3: 5e-6}


def default_grid() -> List[tuple]:
    """``(f, n, p, nu4)`` cases checked by ``verify contour``."""
    cases = []
    for nu4 in (3.0, 4.5):
        for n in (4, 8, 16):
            for p in (10 ** 4, 10 ** 6):
                cases.append((Integrand.F1, n, p, nu4))
                cases.append((Integrand.F2, n, p, nu4))
            cases.append((Integrand.F3, n, 10 ** 6, nu4))
    return cases


def run_grid(cases: Iterable[tuple], rho: Optional[float] = None, nodes: int = DEFAULT_NODES):
    return [correction_integral(f, n, p, nu4, rho=rho, nodes=nodes) for f, n, p, nu4 in cases]
