"""Null calibration: standardized z-values, p-values and decisions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Dict, Iterable

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import KindMismatch, ZeroTrace
from .matrixcore import ArrayLike, SpectralSummary, as_data_matrix, summarize
from .teststats import StatisticValue, StatKind, qlrt_L

DEFAULT_LEVELS = (0.01, 0.05, 0.10)


class NullKind(str, enum.Enum):
    JOHN_ULTRA = "john_ultra"
    QLRT_ULTRA = "qlrt_ultra"
    CHEN_NULL = "chen_null"
    SRIVASTAVA_NULL = "srivastava_null"
    LRT_CLASSICAL_SWAP = "lrt_classical_swap"


#: statistic kind each null model standardizes
NULL_FOR_STAT = {
    NullKind.JOHN_ULTRA: StatKind.JOHN,
    NullKind.QLRT_ULTRA: StatKind.QLRT,
    NullKind.CHEN_NULL: StatKind.CHEN,
    NullKind.SRIVASTAVA_NULL: StatKind.SRIVASTAVA,
    NullKind.LRT_CLASSICAL_SWAP: StatKind.QLRT,
}

DEFAULT_NULL = {
    StatKind.JOHN: NullKind.JOHN_ULTRA,
    StatKind.QLRT: NullKind.QLRT_ULTRA,
    StatKind.CHEN: NullKind.CHEN_NULL,
    StatKind.SRIVASTAVA: NullKind.SRIVASTAVA_NULL,
}


@dataclass(frozen=True)
class NullModel:
    kind: NullKind
    nu4: float
    n: int
    p: int

    def __post_init__(self):
        object.__setattr__(self, "kind", NullKind(self.kind))
        if not math.isfinite(self.nu4):
            raise ValueError("nu4 must be finite")
        if self.nu4 < 1.0:
            raise ValueError(f"nu4 = {self.nu4} violates nu4 >= 1")


@dataclass(frozen=True)
class TestResult:
    statistic: StatisticValue
    z: float
    p_value: float
    reject_at: Dict[float, bool]
    null_model: NullModel
    degenerate: bool = False

    __test__ = False  # not a pytest class


def normal_sf(z: float) -> float:
    """Upper tail ``1 - Phi(z)`` without cancellation."""
    return float(ndtr(-z))


def upper_quantile(alpha: float) -> float:
    """``z_alpha`` with ``1 - Phi(z_alpha) = alpha``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"level {alpha} not in (0, 1)")
    return float(-ndtri(alpha))


def decide(z: float, levels: Iterable[float]) -> Dict[float, bool]:
    return {float(a): bool(z > upper_quantile(a)) for a in levels}


def null_z(stat: StatisticValue, model: NullModel) -> float:
    """Standardized statistic under ``model``; ``+inf`` for a degenerate QLRT."""
    n, p, nu4 = model.n, model.p, model.nu4
    v = stat.value
    kind = model.kind
    if kind is NullKind.JOHN_ULTRA:
        return (n * v - p - (nu4 - 2.0)) / 2.0
    if kind in (NullKind.QLRT_ULTRA, NullKind.LRT_CLASSICAL_SWAP):
        if math.isinf(v):
            return math.inf
        return v - n / 2.0 - n * n / (6.0 * p) - (nu4 - 2.0) / 2.0
    if kind is NullKind.CHEN_NULL:
        return n * v / 2.0
    return v


def standardize(
    stat: StatisticValue,
    model: NullModel,
    levels: Iterable[float] = DEFAULT_LEVELS,
) -> TestResult:
    """Map a statistic to its one-sided upper-tail test result.

    John: ``(nU - p - (nu4 - 2)) / 2``.  QLRT: ``L - n/2 - n^2/(6p) -
    (nu4 - 2)/2``.  Chen: ``n U_n / 2``.  Srivastava: ``W_n`` itself.
    """
    if NULL_FOR_STAT[model.kind] is not stat.kind:
        raise KindMismatch(f"{model.kind.value} cannot standardize a {stat.kind.value} statistic")
    z = null_z(stat, model)
    if math.isinf(z) and z > 0:
        return TestResult(stat, z, 0.0, {float(a): True for a in levels}, model, degenerate=True)
    if not math.isfinite(z):
        raise ValueError(f"non-finite standardized statistic {z}")
    return TestResult(stat, z, normal_sf(z), decide(z, levels), model)


def calibrate(
    stat: StatisticValue,
    nu4: float,
    levels: Iterable[float] = DEFAULT_LEVELS,
) -> TestResult:
    """Standardize ``stat`` with its default ultra-dimensional null."""
    model = NullModel(DEFAULT_NULL[stat.kind], nu4, stat.n, stat.p)
    return standardize(stat, model, levels)


def classical_swap_z(
    s: SpectralSummary,
    nu4: float,
    levels: Iterable[float] = DEFAULT_LEVELS,
) -> TestResult:
    """Classical-regime (``n >> p``) LRT via the n/p role swap.

    ``s`` must summarize the *transposed* data ``X'`` (see
    :func:`classical_swap`), so that its companion matrix is the
    ``p x p`` sample covariance ``(1/n) XX'``.  Then the quasi-LRT value of
    ``s`` equals ``-(2/p) log L_n`` and the centering
    ``p/2 + p^2/(6n) + (nu4 - 2)/2`` is the quasi-LRT one with ``n``
    and ``p`` exchanged.
    """
    stat = qlrt_L(s)
    # in the swapped summary s.n is the original p and s.p the original n
    model = NullModel(NullKind.LRT_CLASSICAL_SWAP, nu4, n=s.n, p=s.p)
    return standardize(stat, model, levels)


def classical_swap(X: ArrayLike, nu4: float, levels: Iterable[float] = DEFAULT_LEVELS) -> TestResult:
    X = as_data_matrix(X)
    return classical_swap_z(summarize(X.transpose()), nu4, levels)


def estimate_nu4(X: ArrayLike) -> float:
    """Plug-in fourth moment of the entries scaled by their global second moment."""
    V = as_data_matrix(X).values
    m2 = np.mean(V * V)
    if m2 == 0:
        raise ZeroTrace("cannot estimate nu4 from all-zero data")
    V2 = V * V
    nu4 = float(np.mean(V2 * V2) / m2 ** 2)
    return max(nu4, 1.0)
