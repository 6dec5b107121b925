"""Reproducible samplers for the null and alternative populations.

Each replicate owns an independent Philox (counter-based) stream keyed by
``(master_seed, replicate_index)`` through :class:`numpy.random.SeedSequence`
spawn keys, so replicate ``i`` draws the same numbers no matter which worker
runs it or in what order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .matrixcore import DataMatrix
from .power import SigmaSpec

GENERATOR_FAMILY = "numpy.random.Philox 4x64 (counter-based), SeedSequence(master_seed, spawn_key=stream+(replicate_index,))"
GAUSSIAN_METHOD = "numpy Generator.standard_normal (ziggurat, exact)"
GAMMA_METHOD = "Gamma(4, rate 2) - 2 as -log(U1 U2 U3 U4)/2 - 2, U = 1 - Generator.random() in (0, 1]"

GAMMA_SHAPE = 4
GAMMA_RATE = 2.0


class EntryDist(str, enum.Enum):
    NORMAL = "normal"
    GAMMA = "gamma"

    @property
    def nu4(self) -> float:
        return 3.0 if self is EntryDist.NORMAL else 4.5


@dataclass(frozen=True)
class SeedSpec:
    """Identifies one replicate stream.

    ``stream`` optionally namespaces the replicate index (the Monte Carlo
    engine uses it to give every grid cell and scenario its own streams).
    """

    master_seed: int
    replicate_index: int = 0
    stream: Tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        if self.master_seed < 0 or self.replicate_index < 0:
            raise ValueError("seeds and replicate indices must be nonnegative")
        key = tuple(self.stream) + (self.replicate_index,)
        ss = np.random.SeedSequence(self.master_seed, spawn_key=key)
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class PopulationSpec:
    """Entry law of ``Z`` plus the covariance ``Sigma`` in ``X = Sigma^{1/2} Z``."""

    entry_dist: EntryDist
    sigma: SigmaSpec = None
    nu4: float = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "entry_dist", EntryDist(self.entry_dist))
        if self.nu4 is None:
            object.__setattr__(self, "nu4", self.entry_dist.nu4)

    def describe(self) -> str:
        sigma = self.sigma.describe() if self.sigma is not None else "identity"
        return f"{self.entry_dist.value}:{sigma}"


def gamma_draw(stream: np.random.Generator, size=None):
    """Centered Gamma(shape 4, rate 2) draws: mean 0, variance 1, fourth moment 4.5.

    A shape-4 Gamma is a sum of four Exponential(rate 2) variates; with
    inverse-CDF exponentials this is ``-log(U1 U2 U3 U4) / 2``.
    """
    shape = (GAMMA_SHAPE,) if size is None else (GAMMA_SHAPE,) + tuple(np.atleast_1d(size))
    u = 1.0 - stream.random(shape)
    g = -np.log(np.prod(u, axis=0)) / GAMMA_RATE
    out = g - GAMMA_SHAPE / GAMMA_RATE
    return float(out) if size is None else out


def draw_entries(dist: EntryDist, stream: np.random.Generator, p: int, n: int) -> np.ndarray:
    if dist is EntryDist.NORMAL:
        return stream.standard_normal((p, n))
    return gamma_draw(stream, (p, n))


def sample(spec: PopulationSpec, p: int, n: int, seed: SeedSpec) -> DataMatrix:
    """Draw a ``p x n`` data matrix ``X = Sigma^{1/2} Z``; deterministic in ``seed``."""
    return DataMatrix(sample_array(spec, p, n, seed))


def sample_array(spec: PopulationSpec, p: int, n: int, seed: SeedSpec) -> np.ndarray:
    if p < 1 or n < 1:
        raise ValueError("p and n must be positive")
    Z = draw_entries(spec.entry_dist, seed.generator(), p, n)
    if spec.sigma is None:
        return Z
    if spec.sigma.p != p:
        raise ValueError(f"Sigma is {spec.sigma.p}-dimensional but p = {p}")
    return spec.sigma.sqrt_apply(Z)
