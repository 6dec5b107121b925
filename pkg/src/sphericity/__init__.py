"""Sphericity tests for covariance matrices when the dimension far exceeds the sample size.

The core entry points are :func:`summarize` (trace moments and log-determinant
of the companion Gram matrix), the statistics in :mod:`sphericity.teststats`
and :func:`calibrate`, which turns a statistic into a z-value, p-value and
decisions.
"""

__version__ = "0.1.0"

from .calibration import (DEFAULT_LEVELS, NullKind, NullModel, TestResult, calibrate,
                          classical_swap, classical_swap_z, estimate_nu4, standardize)
from .errors import *  # noqa: F401,F403
from .matrixcore import DataMatrix, SpectralSummary, gram, read_csv, summarize, summarize_gram
from .populations import EntryDist, PopulationSpec, SeedSpec, sample
from .power import SigmaSpec, functionals, john_power, qlrt_power
from .teststats import (StatKind, StatisticValue, chen_Un, compute, john_U, qlrt_L,
                        srivastava_Wn)

__all__ = [
    "DEFAULT_LEVELS", "NullKind", "NullModel", "TestResult", "calibrate", "classical_swap",
    "classical_swap_z", "estimate_nu4", "standardize", "DataMatrix", "SpectralSummary", "gram",
    "read_csv", "summarize", "summarize_gram", "EntryDist", "PopulationSpec", "SeedSpec",
    "sample", "SigmaSpec", "functionals", "john_power", "qlrt_power", "StatKind",
    "StatisticValue", "chen_Un", "compute", "john_U", "qlrt_L", "srivastava_Wn",
]
