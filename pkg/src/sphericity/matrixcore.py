"""Companion Gram matrix kernel.

Every statistic in the package is a function of the ``n x n`` matrix
``X'X`` of a ``p x n`` data matrix ``X`` (rows are variables, columns are
observations).  The ``p x p`` matrix ``XX'`` is never formed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.linalg as la

from .errors import DataParseError, MissingEigenvalues, NonFiniteInput, SingularGram

#: Pivot threshold, relative to the mean diagonal entry of (1/p) X'X.
SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class DataMatrix:
    """A validated ``p x n`` sample matrix, one column per observation."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"data must be a non-empty 2-D array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise NonFiniteInput(f"non-finite entry at row {bad[0]}, column {bad[1]}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def transpose(self) -> "DataMatrix":
        return DataMatrix(self.values.T)


ArrayLike = Union[DataMatrix, np.ndarray]


def as_data_matrix(X: ArrayLike) -> DataMatrix:
    return X if isinstance(X, DataMatrix) else DataMatrix(X)


@dataclass(frozen=True)
class SpectralSummary:
    """Trace moments and log-determinant of ``(1/p) X'X``.

    ``trace1`` and ``trace2`` are the sums of the eigenvalues and of their
    squares; ``eigenvalues`` is sorted ascending when present.  ``logdet``
    is ``-inf`` for a singular Gram matrix summarized with
    ``strict=False``.
    """

    n: int
    p: int
    trace1: float
    trace2: float
    logdet: Optional[float] = None
    eigenvalues: Optional[np.ndarray] = None

    @property
    def singular(self) -> bool:
        return self.logdet is not None and np.isneginf(self.logdet)


def gram(X: ArrayLike) -> np.ndarray:
    """Return ``X'X`` (``n x n``, unscaled)."""
    V = as_data_matrix(X).values
    G = V.T @ V
    # symmetrize away BLAS rounding asymmetry
    return 0.5 * (G + G.T)


def summarize_gram(
    G: np.ndarray,
    p: int,
    need_eigenvalues: bool = False,
    need_logdet: bool = True,
    strict: bool = True,
) -> SpectralSummary:
    """Summarize an already computed Gram matrix ``G = X'X``.

    With ``strict=False`` a singular Gram matrix yields ``logdet = -inf``
    instead of raising :class:`SingularGram`.
    """
    n = G.shape[0]
    M = G / p
    trace1 = float(np.trace(M))
    trace2 = float(np.sum(M * M))

    logdet = None
    if need_logdet:
        logdet = _logdet_spd(M, trace1, strict)

    eigenvalues = None
    if need_eigenvalues:
        eigenvalues = np.clip(la.eigvalsh(M), 0.0, None)
        eigenvalues.setflags(write=False)

    return SpectralSummary(n=n, p=p, trace1=trace1, trace2=trace2,
                           logdet=logdet, eigenvalues=eigenvalues)


def _logdet_spd(M, trace1, strict):
    n = M.shape[0]
    threshold = SINGULAR_RTOL * trace1 / n
    try:
        L = la.cholesky(M, lower=True)
    except la.LinAlgError:
        pivots = None
    else:
        pivots = np.diag(L) ** 2
    if pivots is None or trace1 <= 0 or pivots.min() < threshold:
        if strict:
            raise SingularGram(
                f"(1/p)X'X is not numerically positive definite "
                f"(pivot threshold {threshold:.3g})"
            )
        return -np.inf
    return float(np.sum(np.log(pivots)))


def summarize(
    X: ArrayLike,
    need_eigenvalues: bool = False,
    need_logdet: bool = True,
    strict: bool = True,
) -> SpectralSummary:
    """Compute the spectral summary of ``(1/p) X'X``.

    Parameters
    ----------
    X : DataMatrix or array_like, shape (p, n)
        Sample matrix with observations in columns.
    need_eigenvalues : bool
        Also run a symmetric eigensolver on the ``n x n`` companion.
    need_logdet : bool
        Compute ``log det((1/p) X'X)`` from a Cholesky factorization.
    strict : bool
        Raise :class:`SingularGram` on a singular companion; otherwise
        store ``logdet = -inf``.

    Returns
    -------
    SpectralSummary
    """
    X = as_data_matrix(X)
    return summarize_gram(gram(X), X.p, need_eigenvalues, need_logdet, strict)


def scaled_nonzero_eigenvalues(s: SpectralSummary) -> np.ndarray:
    """Nonzero eigenvalues of ``(1/n) XX'``, i.e. ``(p/n)`` times the companion spectrum."""
    if s.eigenvalues is None:
        raise MissingEigenvalues("summary was computed without eigenvalues")
    return (s.p / s.n) * np.asarray(s.eigenvalues)


def read_csv(path: Union[str, Path], header: bool = False) -> DataMatrix:
    """Read a ``p x n`` matrix: one row per variable, one column per observation."""
    path = Path(path)
    rows = []
    width = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataParseError(
                    f"{path}: row {lineno} has {len(row)} columns, expected {width}"
                )
            values = []
            for col, cell in enumerate(row, start=1):
                try:
                    value = float(cell)
                except ValueError:
                    value = None
                if value is None or not np.isfinite(value):
                    raise DataParseError(
                        f"{path}: row {lineno}, column {col}: cannot parse {cell.strip()!r}"
                    )
                values.append(value)
            rows.append(values)
    if not rows:
        raise DataParseError(f"{path}: no data rows")
    return DataMatrix(np.array(rows))
