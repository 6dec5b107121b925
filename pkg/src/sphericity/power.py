"""Asymptotic power of John's test and the quasi-LRT under diagonal-type alternatives."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import ndtr

from .calibration import upper_quantile
from .errors import NonPositiveDiagonal

#: Power predictions assume n^3/p stays bounded; beyond this we warn.
N3_OVER_P_WARN = 1000.0


class RegimeWarning(UserWarning):
    """Power prediction requested outside the n^3/p = O(1) regime."""


class SigmaKind(str, enum.Enum):
    SCALED_IDENTITY = "identity"
    TWO_POINT = "twopoint"
    DIAGONAL = "diagonal"
    SPD = "spd"


@dataclass(frozen=True, eq=False)
class SigmaSpec:
    """Population covariance of a ``p``-variate sample.

    Use the constructors :meth:`identity`, :meth:`two_point`,
    :meth:`diagonal` and :meth:`spd`.  For ``two_point(p, a, b, delta)`` the
    first ``round(delta * p)`` diagonal entries equal ``b`` and the rest
    equal ``a``.
    """

    kind: SigmaKind
    p: int
    params: tuple = ()
    values: Optional[np.ndarray] = None

    @classmethod
    def identity(cls, p: int, sigma2: float = 1.0) -> "SigmaSpec":
        if sigma2 <= 0:
            raise NonPositiveDiagonal(f"sigma^2 = {sigma2} must be positive")
        return cls(SigmaKind.SCALED_IDENTITY, int(p), (float(sigma2),))

    @classmethod
    def two_point(cls, p: int, a: float, b: float, delta: float) -> "SigmaSpec":
        if not 0.0 <= delta <= 1.0:
            raise ValueError(f"delta = {delta} not in [0, 1]")
        if a <= 0 or b <= 0:
            raise NonPositiveDiagonal("two-point diagonal entries must be positive")
        return cls(SigmaKind.TWO_POINT, int(p), (float(a), float(b), float(delta)))

    @classmethod
    def diagonal(cls, values) -> "SigmaSpec":
        d = np.asarray(values, dtype=float).ravel()
        if d.size == 0 or not np.all(d > 0) or not np.all(np.isfinite(d)):
            raise NonPositiveDiagonal("diagonal entries must be positive and finite")
        d.setflags(write=False)
        return cls(SigmaKind.DIAGONAL, d.size, (), d)

    @classmethod
    def spd(cls, matrix) -> "SigmaSpec":
        M = np.asarray(matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("covariance matrix must be square")
        if not np.allclose(M, M.T, rtol=0, atol=1e-12 * np.abs(M).max()):
            raise ValueError("covariance matrix must be symmetric")
        if not np.all(np.diag(M) > 0):
            raise NonPositiveDiagonal("covariance matrix must have a positive diagonal")
        M = 0.5 * (M + M.T)
        M.setflags(write=False)
        return cls(SigmaKind.SPD, M.shape[0], (), M)

    def diag(self) -> np.ndarray:
        """Diagonal entries of Sigma."""
        if self.kind is SigmaKind.SCALED_IDENTITY:
            return np.full(self.p, self.params[0])
        if self.kind is SigmaKind.TWO_POINT:
            a, b, delta = self.params
            k = int(round(delta * self.p))
            d = np.full(self.p, a)
            d[:k] = b
            return d
        if self.kind is SigmaKind.DIAGONAL:
            return np.array(self.values)
        return np.diag(self.values).copy()

    @property
    def is_diagonal(self) -> bool:
        return self.kind is not SigmaKind.SPD

    def sqrt_apply(self, Z: np.ndarray) -> np.ndarray:
        """Return ``Sigma^{1/2} Z`` (entrywise root on diagonals, symmetric root otherwise)."""
        if self.kind is SigmaKind.SCALED_IDENTITY:
            s2 = self.params[0]
            return Z if s2 == 1.0 else math.sqrt(s2) * Z
        if self.is_diagonal:
            return np.sqrt(self.diag())[:, None] * Z
        w, V = np.linalg.eigh(self.values)
        if w.min() <= 0:
            raise NonPositiveDiagonal("covariance matrix is not positive definite")
        root = (V * np.sqrt(w)) @ V.T
        return root @ Z

    def describe(self) -> str:
        if self.kind is SigmaKind.SCALED_IDENTITY:
            return f"identity(sigma2={self.params[0]:g})"
        if self.kind is SigmaKind.TWO_POINT:
            a, b, delta = self.params
            return f"twopoint(a={a:g},b={b:g},delta={delta:g})"
        return f"{self.kind.value}(p={self.p})"


@dataclass(frozen=True)
class SigmaFunctionals:
    """``gamma = tr(Sigma)/p``, ``theta = tr(Sigma^2)/p``, ``omega = sum(Sigma_ii^2)/p``."""

    gamma: float
    theta: float
    omega: float


def functionals(spec: SigmaSpec) -> SigmaFunctionals:
    p = spec.p
    d = spec.diag()
    if not np.all(d > 0):
        raise NonPositiveDiagonal("Sigma must have a positive diagonal")
    gamma = float(d.sum() / p)
    omega = float(np.dot(d, d) / p)
    if spec.is_diagonal:
        theta = omega
    else:
        theta = float(np.sum(spec.values * spec.values) / p)
    return SigmaFunctionals(gamma, theta, omega)


def _warn_regime(n, p):
    if n ** 3 / p > N3_OVER_P_WARN:
        warnings.warn(
            f"n^3/p = {n ** 3 / p:.0f} exceeds {N3_OVER_P_WARN:g}; "
            "power predictions assume n^3/p = O(1)",
            RegimeWarning,
            stacklevel=3,
        )


def john_alt_params(f: SigmaFunctionals, nu4: float, n: int, p: int) -> Tuple[float, float, float]:
    """Limit law of ``nU - p`` under the alternative.

    Returns ``(shift, mean, sd)`` such that ``nU - p - shift`` is
    approximately ``N(mean, sd^2)``.
    """
    g2 = f.gamma ** 2
    shift = (f.theta / g2 - 1.0) * n
    mean = (f.theta + f.omega * (nu4 - 3.0)) / g2
    sd = 2.0 * f.theta / g2
    return shift, mean, sd


def john_power(f: SigmaFunctionals, nu4: float, n: int, p: int, alpha: float = 0.05) -> float:
    """Asymptotic rejection probability of John's test at level ``alpha``."""
    _warn_regime(n, p)
    g2, th, om = f.gamma ** 2, f.theta, f.omega
    arg = (g2 / th * upper_quantile(alpha)
           + (g2 * (nu4 - 2.0) - th - om * (nu4 - 3.0)) / (2.0 * th)
           + (g2 - th) * n / (2.0 * th))
    return float(ndtr(-arg))


def qlrt_alt_params(f: SigmaFunctionals, nu4: float, n: int, p: int) -> Tuple[float, float, float]:
    """Limit law of the quasi-LRT statistic under the alternative.

    Returns ``(center, mean, sd)`` such that ``L - center`` is
    approximately ``N(mean, sd^2)``.
    """
    g, th, om = f.gamma, f.theta, f.omega
    center = (th / (2 * g ** 2)) * n + (th ** 2 / (2 * g ** 4) - th * math.sqrt(th) / (3 * g ** 3)) * n * n / p
    mean = th / (2 * g ** 2) + om / (2 * g ** 2) * (nu4 - 3.0)
    sd = th / g ** 2
    return center, mean, sd


def qlrt_power(f: SigmaFunctionals, nu4: float, n: int, p: int, alpha: float = 0.05) -> float:
    """Asymptotic rejection probability of the quasi-LRT at level ``alpha``."""
    _warn_regime(n, p)
    g, th, om = f.gamma, f.theta, f.omega
    g2 = g * g
    arg = (g2 / th * upper_quantile(alpha)
           + (g2 - th) / (2 * th) * n
           + (g2 / (6 * th) - th / (2 * g2) + math.sqrt(th) / (3 * g)) * n * n / p
           + (g2 * (nu4 - 2.0) - th - om * (nu4 - 3.0)) / (2 * th))
    return float(ndtr(-arg))
