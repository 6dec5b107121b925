"""The four sphericity statistics: John, quasi-LRT, Chen and Srivastava."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateT1, SampleTooSmall, ZeroTrace
from .matrixcore import ArrayLike, SpectralSummary, as_data_matrix, gram

BRUTE_FORCE_MAX_N = 12


class StatKind(str, enum.Enum):
    JOHN = "john"
    QLRT = "qlrt"
    CHEN = "chen"
    SRIVASTAVA = "srivastava"


@dataclass(frozen=True)
class StatisticValue:
    kind: StatKind
    value: float
    n: int
    p: int
    degenerate: bool = False


def _check_trace(s: SpectralSummary):
    if not s.trace1 > 0:
        raise ZeroTrace("trace of X'X is zero (all-zero data?)")


def john_U(s: SpectralSummary) -> StatisticValue:
    """John's statistic ``U = p tr(S^2) / tr(S)^2 - 1`` with ``S = (1/n) XX'``.

    In companion terms the ``p/n`` factors cancel and
    ``U = p * trace2 / trace1**2 - 1``.
    """
    _check_trace(s)
    U = s.p * s.trace2 / s.trace1 ** 2 - 1.0
    return StatisticValue(StatKind.JOHN, max(U, 0.0), s.n, s.p)


def qlrt_L(s: SpectralSummary) -> StatisticValue:
    """Quasi-LRT statistic ``(p/n) [n log(mean eigenvalue) - log det]``.

    A singular companion (``logdet == -inf``) gives ``+inf`` with the
    ``degenerate`` flag set.
    """
    if s.logdet is None:
        raise ValueError("qlrt_L needs a summary computed with need_logdet=True")
    _check_trace(s)
    if s.singular:
        return StatisticValue(StatKind.QLRT, math.inf, s.n, s.p, degenerate=True)
    n = s.n
    L = (s.p / n) * (n * math.log(s.trace1 / n) - s.logdet)
    # AM-GM: negative values are rounding noise
    return StatisticValue(StatKind.QLRT, max(L, 0.0), n, s.p)


def srivastava_Wn(s: SpectralSummary) -> StatisticValue:
    r"""Srivastava's ``W_n`` from the traces of ``S = (1/n) XX'``.

    ``W_n = (n/2) [c_n (tr S^2 - (tr S)^2/n) / p / (tr S / p)^2 - 1]`` with
    ``c_n = n^2 / ((n-1)(n+2))``.
    """
    n, p = s.n, s.p
    if n < 2:
        raise SampleTooSmall("Srivastava's statistic needs n >= 2")
    _check_trace(s)
    trS = (p / n) * s.trace1
    trS2 = (p / n) ** 2 * s.trace2
    cn = n ** 2 / ((n - 1) * (n + 2))
    W = 0.5 * n * (cn * (trS2 - trS ** 2 / n) / p / (trS / p) ** 2 - 1.0)
    return StatisticValue(StatKind.SRIVASTAVA, W, n, p)


def chen_terms_bruteforce(G: np.ndarray) -> tuple[float, float]:
    """``(T1, T2)`` by literal summation over distinct index tuples. O(n^4)."""
    n = G.shape[0]
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force is limited to n <= {BRUTE_FORCE_MAX_N}")
    idx = range(n)
    pairs = sum(G[i, j] for i, j in itertools.permutations(idx, 2))
    pairs_sq = sum(G[i, j] ** 2 for i, j in itertools.permutations(idx, 2))
    triples = sum(G[i, j] * G[j, k] for i, j, k in itertools.permutations(idx, 3))
    quads = sum(G[i, j] * G[k, l] for i, j, k, l in itertools.permutations(idx, 4))
    T1 = np.trace(G) / n - pairs / math.perm(n, 2)
    T2 = pairs_sq / math.perm(n, 2) - 2 * triples / math.perm(n, 3) + quads / math.perm(n, 4)
    return float(T1), float(T2)


def chen_terms_reduced(G: np.ndarray) -> tuple[float, float]:
    """``(T1, T2)`` from closed forms in the off-diagonal part of ``G``. O(n^2).

    With ``H = G - diag(G)``, ``a = 1'H1``, ``q = |H1|^2``, ``F = |H|_F^2``:

    * sum over i != j of ``G_ij``         = ``a``
    * sum over i != j of ``G_ij^2``       = ``F``
    * sum over distinct i,j,k of ``G_ij G_jk``   = ``q - F``
    * sum over distinct i,j,k,l of ``G_ij G_kl`` = ``a^2 - 4q + 2F``
    """
    n = G.shape[0]
    H = G - np.diag(np.diag(G))
    rows = H.sum(axis=1)
    a = rows.sum()
    q = rows @ rows
    F = np.sum(H * H)
    T1 = np.trace(G) / n - a / math.perm(n, 2)
    T2 = (F / math.perm(n, 2)
          - 2 * (q - F) / math.perm(n, 3)
          + (a * a - 4 * q + 2 * F) / math.perm(n, 4))
    return float(T1), float(T2)


def chen_from_gram(G: np.ndarray, p: int, method: str = "reduced") -> StatisticValue:
    n = G.shape[0]
    if n < 4:
        raise SampleTooSmall("Chen's statistic needs n >= 4 distinct indices")
    if method == "reduced":
        T1, T2 = chen_terms_reduced(G)
    elif method == "bruteforce":
        T1, T2 = chen_terms_bruteforce(G)
    else:
        raise ValueError(f"unknown method {method!r}")
    if abs(T1) < 1e-12 * np.trace(G) / n or T1 == 0:
        raise DegenerateT1(f"T1 = {T1:.3g} is numerically zero")
    return StatisticValue(StatKind.CHEN, p * T2 / T1 ** 2 - 1.0, n, p)


def chen_Un(X: ArrayLike, method: str = "reduced") -> StatisticValue:
    """Chen's ``U_n = p T2 / T1^2 - 1`` (no centering of the observations).

    ``method`` is ``"reduced"`` (closed form) or ``"bruteforce"`` (index
    sums, ``n <= 12``).
    """
    X = as_data_matrix(X)
    return chen_from_gram(gram(X), X.p, method)


def compute(kind: StatKind, s: SpectralSummary, G: np.ndarray = None) -> StatisticValue:
    """Dispatch on ``kind``; Chen additionally needs the raw Gram matrix."""
    kind = StatKind(kind)
    if kind is StatKind.JOHN:
        return john_U(s)
    if kind is StatKind.QLRT:
        return qlrt_L(s)
    if kind is StatKind.SRIVASTAVA:
        return srivastava_Wn(s)
    if G is None:
        raise ValueError("Chen's statistic needs the Gram matrix")
    return chen_from_gram(G, s.p)


__all__ = [
    "StatKind", "StatisticValue", "john_U", "qlrt_L", "srivastava_Wn", "chen_Un",
    "chen_from_gram", "chen_terms_bruteforce", "chen_terms_reduced", "compute",
]
