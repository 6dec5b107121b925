"""Monte Carlo engine: empirical size/power tables and CLT moment checks."""

from __future__ import annotations

import io
import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .calibration import DEFAULT_NULL, NullModel, null_z, upper_quantile
from .errors import PlanParseError
from .matrixcore import gram, summarize_gram
from .populations import (GAMMA_METHOD, GAUSSIAN_METHOD, GENERATOR_FAMILY, EntryDist,
                          PopulationSpec, SeedSpec, sample_array)
from .power import SigmaKind, SigmaSpec, functionals, john_power, qlrt_power
from .teststats import StatKind, compute

MIN_REPLICATIONS = 100
CSV_COLUMNS = ("p", "n", "test", "scenario", "rate", "stderr", "replications", "seed")


@dataclass(frozen=True)
class Scenario:
    """A named population whose covariance is rebuilt for each dimension ``p``.

    ``sigma`` is ``("identity", sigma2)`` or ``("twopoint", a, b, delta)``.
    """

    label: str
    entry: EntryDist
    sigma: Tuple = ("identity", 1.0)

    def __post_init__(self):
        object.__setattr__(self, "entry", EntryDist(self.entry))

    def sigma_spec(self, p: int) -> SigmaSpec:
        kind, *args = self.sigma
        if kind == SigmaKind.SCALED_IDENTITY.value:
            return SigmaSpec.identity(p, *args)
        if kind == SigmaKind.TWO_POINT.value:
            return SigmaSpec.two_point(p, *args)
        raise ValueError(f"unsupported sigma kind {kind!r}")

    def population(self, p: int) -> PopulationSpec:
        return PopulationSpec(self.entry, self.sigma_spec(p))

    @property
    def is_null(self) -> bool:
        return self.sigma[0] == SigmaKind.SCALED_IDENTITY.value

    def describe(self) -> str:
        return f"{self.entry.value} {' '.join(str(a) for a in self.sigma)}"


@dataclass(frozen=True)
class ExperimentPlan:
    grid: Tuple[Tuple[int, int], ...]
    tests: Tuple[StatKind, ...]
    scenarios: Tuple[Scenario, ...]
    level: float = 0.05
    replications: int = 2000
    master_seed: int = 0
    workers: int = 1
    theory: bool = False
    name: str = "plan"

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple((int(p), int(n)) for p, n in self.grid))
        object.__setattr__(self, "tests", tuple(StatKind(t) for t in self.tests))
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if not 0.0 < self.level < 1.0:
            raise PlanParseError(f"level {self.level} not in (0, 1)")
        if self.replications < MIN_REPLICATIONS:
            raise PlanParseError(f"replications = {self.replications} < {MIN_REPLICATIONS}")
        if not self.grid or not self.tests or not self.scenarios:
            raise PlanParseError("plan needs a grid, tests and at least one scenario")
        labels = [s.label for s in self.scenarios]
        if len(set(labels)) != len(labels):
            raise PlanParseError("scenario labels must be unique")

    @property
    def null_pops(self) -> List[Scenario]:
        return [s for s in self.scenarios if s.is_null]

    @property
    def alt_pops(self) -> List[Scenario]:
        return [s for s in self.scenarios if not s.is_null]


@dataclass(frozen=True)
class CellResult:
    p: int
    n: int
    test: StatKind
    scenario: str
    rejections: int
    degenerate: int
    replications: int
    seed: int
    theory: Optional[float] = None
    runtime: float = 0.0

    @property
    def rate(self) -> float:
        return self.rejections / self.replications

    @property
    def stderr(self) -> float:
        r = self.rate
        return math.sqrt(r * (1.0 - r) / self.replications)


@dataclass
class SimulationReport:
    plan: ExperimentPlan
    rows: List[CellResult] = field(default_factory=list)

    def get(self, p: int, n: int, test, scenario: str) -> CellResult:
        test = StatKind(test)
        for r in self.rows:
            if (r.p, r.n, r.test, r.scenario) == (p, n, test, scenario):
                return r
        raise KeyError((p, n, test, scenario))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(CSV_COLUMNS) + "\n")
        for r in self.rows:
            out.write(f"{r.p},{r.n},{r.test.value},{r.scenario},{r.rate:.17g},"
                      f"{r.stderr:.17g},{r.replications},{r.seed}\n")
        return out.getvalue()

    def manifest(self) -> Dict[str, str]:
        plan = self.plan
        m = {
            "plan": plan.name,
            "package_version": __version__,
            "numpy_version": np.__version__,
            "generator": GENERATOR_FAMILY,
            "gaussian_method": GAUSSIAN_METHOD,
            "gamma_method": GAMMA_METHOD,
            "master_seed": str(plan.master_seed),
            "replications": str(plan.replications),
            "level": repr(plan.level),
            "grid": ",".join(f"{p}x{n}" for p, n in plan.grid),
            "tests": ",".join(t.value for t in plan.tests),
        }
        for s in plan.scenarios:
            m[f"scenario.{s.label}"] = s.describe()
        return m

    def manifest_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.manifest().items())

    def write(self, prefix) -> Tuple[Path, Path]:
        prefix = Path(prefix)
        csv_path = prefix.with_name(prefix.name + ".csv")
        man_path = prefix.with_name(prefix.name + ".manifest")
        csv_path.write_text(self.to_csv())
        man_path.write_text(self.manifest_text())
        return csv_path, man_path

    def format_table(self) -> str:
        if any(r.theory is not None for r in self.rows):
            return _format_theory_table(self)
        return _format_grid_table(self)


def _format_grid_table(report: SimulationReport) -> str:
    plan = report.plan
    tests = plan.tests
    head1 = f"{'(p,n)':>12} |" + "|".join(
        f"{s.label:^{9 * len(tests)}}" for s in plan.scenarios)
    head2 = f"{'':>12} |" + "|".join(
        "".join(f"{t.value[:8]:>9}" for t in tests) for _ in plan.scenarios)
    lines = [head1, head2, "-" * len(head2)]
    for p, n in plan.grid:
        cells = []
        for s in plan.scenarios:
            cells.append("".join(f"{report.get(p, n, t, s.label).rate:>9.4f}" for t in tests))
        lines.append(f"{f'({p},{n})':>12} |" + "|".join(cells))
    return "\n".join(lines) + "\n"


def _format_theory_table(report: SimulationReport) -> str:
    plan = report.plan
    tests = plan.tests
    head1 = f"{'scenario':>16} {'(p,n)':>10} |" + "|".join(f"{t.value:^19}" for t in tests)
    head2 = f"{'':>16} {'':>10} |" + "|".join(f"{'empirical':>10}{'theory':>9}" for _ in tests)
    lines = [head1, head2, "-" * len(head2)]
    for s in plan.scenarios:
        for p, n in plan.grid:
            cells = []
            for t in tests:
                r = report.get(p, n, t, s.label)
                th = "-" if r.theory is None else f"{r.theory:.4f}"
                cells.append(f"{r.rate:>10.4f}{th:>9}")
            lines.append(f"{s.label:>16} {f'({p},{n})':>10} |" + "|".join(cells))
    return "\n".join(lines) + "\n"


def _stream_key(p: int, n: int, label: str) -> Tuple[int, int, int]:
    return (p, n, zlib.crc32(label.encode()))


def _replicate_z(pop: PopulationSpec, p: int, n: int, seed: SeedSpec, tests, nu4) -> List[float]:
    X = sample_array(pop, p, n, seed)
    G = gram(X)
    need_logdet = StatKind.QLRT in tests
    s = summarize_gram(G, p, need_logdet=need_logdet, strict=False)
    out = []
    for t in tests:
        stat = compute(t, s, G)
        out.append(null_z(stat, NullModel(DEFAULT_NULL[t], nu4, n, p)))
    return out


def _run_chunk(pop, p, n, master_seed, stream, indices, tests, nu4):
    return [_replicate_z(pop, p, n, SeedSpec(master_seed, i, stream), tests, nu4) for i in indices]


def simulate_z(
    pop: PopulationSpec,
    p: int,
    n: int,
    tests: Sequence[StatKind],
    replications: int,
    master_seed: int,
    stream: Tuple[int, ...] = (),
    workers: int = 1,
) -> np.ndarray:
    """Standardized statistics, shape ``(replications, len(tests))``, row ``i`` from replicate ``i``.

    Replicates are split into contiguous index blocks; each block's rows are
    written back at their replicate indices, so the output does not depend on
    ``workers`` or on scheduling.
    """
    tests = tuple(StatKind(t) for t in tests)
    nu4 = pop.nu4
    workers = max(1, int(workers))
    blocks = np.array_split(np.arange(replications), min(workers * 4, replications))
    out = np.empty((replications, len(tests)))
    if workers == 1:
        for idx in blocks:
            out[idx] = _run_chunk(pop, p, n, master_seed, stream, idx, tests, nu4)
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [(idx, pool.submit(_run_chunk, pop, p, n, master_seed, stream, idx, tests, nu4))
                   for idx in blocks]
        for idx, fut in futures:
            out[idx] = fut.result()
    return out


def theoretical_power(test: StatKind, sigma: SigmaSpec, nu4: float, n: int, p: int, level: float):
    if test not in (StatKind.JOHN, StatKind.QLRT):
        return None
    f = functionals(sigma)
    fn = john_power if test is StatKind.JOHN else qlrt_power
    return fn(f, nu4, n, p, level)


def run_size_power(plan: ExperimentPlan, workers: Optional[int] = None) -> SimulationReport:
    """Run every (cell, scenario) of ``plan`` and tally rejections at ``plan.level``.

    Degenerate quasi-LRT replicates (singular Gram) have ``z = +inf`` and
    count as rejections; they are also tallied in ``CellResult.degenerate``.
    """
    workers = plan.workers if workers is None else workers
    crit = upper_quantile(plan.level)
    report = SimulationReport(plan)
    for p, n in plan.grid:
        for scen in plan.scenarios:
            pop = scen.population(p)
            t0 = time.perf_counter()
            z = simulate_z(pop, p, n, plan.tests, plan.replications, plan.master_seed,
                           _stream_key(p, n, scen.label), workers)
            elapsed = time.perf_counter() - t0
            for j, t in enumerate(plan.tests):
                theory = None
                if plan.theory:
                    import warnings

                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        theory = theoretical_power(t, pop.sigma, pop.nu4, n, p, plan.level)
                report.rows.append(CellResult(
                    p=p, n=n, test=t, scenario=scen.label,
                    rejections=int(np.sum(z[:, j] > crit)),
                    degenerate=int(np.sum(np.isinf(z[:, j]))),
                    replications=plan.replications, seed=plan.master_seed,
                    theory=theory, runtime=elapsed,
                ))
    return report


# --------------------------------------------------------------------------
# plan files


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "yes", "true", "on"):
        return True
    if v in ("0", "no", "false", "off"):
        return False
    raise PlanParseError(f"not a boolean: {value!r}")


def _parse_scenario(label: str, value: str) -> Scenario:
    parts = value.split()
    if len(parts) < 2:
        raise PlanParseError(f"scenario.{label}: expected '<entry> <sigma> [params]'")
    entry, kind, *args = parts
    try:
        entry = EntryDist(entry)
        nums = [float(a) for a in args]
    except ValueError as exc:
        raise PlanParseError(f"scenario.{label}: {exc}") from None
    if kind == "identity":
        if len(nums) > 1:
            raise PlanParseError(f"scenario.{label}: identity takes at most one parameter")
        return Scenario(label, entry, ("identity", nums[0] if nums else 1.0))
    if kind == "twopoint":
        if len(nums) != 3:
            raise PlanParseError(f"scenario.{label}: twopoint needs 'a b delta'")
        return Scenario(label, entry, ("twopoint", *nums))
    raise PlanParseError(f"scenario.{label}: unknown sigma kind {kind!r}")


def parse_plan(text: str, name: str = "plan") -> ExperimentPlan:
    """Parse the ``key = value`` plan format (see ``README.md``)."""
    kw = {"name": name}
    scenarios = []
    required = {"grid", "tests", "replications", "seed"}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PlanParseError(f"line {lineno}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        seen.add(key)
        try:
            if key == "grid":
                kw["grid"] = tuple(tuple(int(v) for v in cell.lower().split("x"))
                                   for cell in value.replace(" ", "").split(","))
                if any(len(c) != 2 for c in kw["grid"]):
                    raise ValueError("grid cells are written PxN")
            elif key == "tests":
                kw["tests"] = tuple(StatKind(t.strip().lower()) for t in value.split(","))
            elif key == "level":
                kw["level"] = float(value)
            elif key == "replications":
                kw["replications"] = int(value)
            elif key == "seed":
                kw["master_seed"] = int(value)
            elif key == "workers":
                kw["workers"] = int(value)
            elif key == "theory":
                kw["theory"] = _parse_bool(value)
            elif key == "name":
                kw["name"] = value
            elif key.startswith("scenario."):
                scenarios.append(_parse_scenario(key[len("scenario."):], value))
            else:
                raise PlanParseError(f"unknown key {key!r}")
        except PlanParseError as exc:
            raise PlanParseError(f"line {lineno}: {exc}") from None
        except ValueError as exc:
            raise PlanParseError(f"line {lineno}: {key}: {exc}") from None
    missing = required - seen
    if missing:
        raise PlanParseError(f"missing keys: {', '.join(sorted(missing))}")
    if kw.get("replications", 0) < 1:
        raise PlanParseError("replications must be positive")
    return ExperimentPlan(scenarios=tuple(scenarios), **kw)


PLAN_DIR = Path(__file__).parent / "plans"


def load_plan(name_or_path) -> ExperimentPlan:
    """Load a plan file by path, or a bundled plan by name (e.g. ``table1_desk``)."""
    path = Path(name_or_path)
    if not path.exists():
        bundled = PLAN_DIR / (path.name if path.suffix == ".plan" else path.name + ".plan")
        if not bundled.exists():
            raise PlanParseError(f"no plan file {name_or_path!s}")
        path = bundled
    return parse_plan(path.read_text(), name=path.stem)


# --------------------------------------------------------------------------
# CLT moment checks


LEMMAS = ("L1", "L2", "L3", "L4")


@dataclass
class LemmaReport:
    which: str
    p: int
    n: int
    replications: int
    labels: Tuple[str, str]
    samples: np.ndarray
    target_mean: np.ndarray
    target_cov: np.ndarray
    #: leading finite-n size of the off-diagonal covariance, where known
    finite_n_cov01: Optional[float] = None

    @property
    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    @property
    def mean_stderr(self) -> np.ndarray:
        return self.samples.std(axis=0, ddof=1) / math.sqrt(self.replications)

    @property
    def cov(self) -> np.ndarray:
        return np.cov(self.samples, rowvar=False)

    @property
    def cov_stderr(self) -> np.ndarray:
        d = self.samples - self.mean
        prods = d[:, :, None] * d[:, None, :]
        return prods.std(axis=0, ddof=1) / math.sqrt(self.replications)

    def checks(self, var_rtol: float = 0.15, nsigma: float = 3.0) -> Dict[str, bool]:
        """Mean within ``nsigma`` stderr of target, variances within ``var_rtol``,
        covariance within ``nsigma`` stderr of target."""
        mean, se = self.mean, self.mean_stderr
        cov, cse = self.cov, self.cov_stderr
        out = {}
        for k, lab in enumerate(self.labels):
            out[f"mean[{lab}]"] = bool(abs(mean[k] - self.target_mean[k]) <= nsigma * se[k])
            tv = self.target_cov[k, k]
            out[f"var[{lab}]"] = bool(abs(cov[k, k] - tv) <= var_rtol * tv)
        out["cov"] = bool(abs(cov[0, 1] - self.target_cov[0, 1]) <= nsigma * cse[0, 1])
        return out

    def format(self) -> str:
        lines = [f"{self.which} at (p,n)=({self.p},{self.n}), {self.replications} replications"]
        mean, se, cov = self.mean, self.mean_stderr, self.cov
        cse = self.cov_stderr
        for k, lab in enumerate(self.labels):
            lines.append(f"  mean[{lab}] = {mean[k]:.6g} +/- {se[k]:.3g} (target {self.target_mean[k]:.6g})")
        for i in range(2):
            for j in range(i, 2):
                lines.append(f"  cov[{i},{j}] = {cov[i, j]:.6g} +/- {cse[i, j]:.3g} "
                             f"(target {self.target_cov[i, j]:.6g})")
        if self.finite_n_cov01 is not None:
            lines.append(f"  finite-n leading term of cov[0,1]: {self.finite_n_cov01:.6g}")
        return "\n".join(lines)


def _lemma_coordinates(which, G, p, n, nu4, f):
    M = G / p
    t1 = np.trace(M)
    if which in ("L1", "L2"):
        sum_l = math.sqrt(p / n) * (t1 - n)
        if which == "L1":
            sum_l2 = (p / n) * (np.sum(M * M) - 2 * t1 + n)
            return sum_l2 - n - (nu4 - 2), sum_l
        logdet = summarize_gram(G, p, need_logdet=True).logdet
        r = math.sqrt(n / p)
        v = (math.sqrt(p / n) * logdet + 0.5 * math.sqrt(n ** 3 / p)
             + n * n / (6 * p) * r + (nu4 - 2) / 2 * r)
        return sum_l, v
    g, th, om = f.gamma, f.theta, f.omega
    tr_sigma, tr_sigma2 = p * g, p * th
    scale = math.sqrt(n * tr_sigma2)
    sum_l = (np.trace(G) - n * tr_sigma) / scale
    if which == "L3":
        D = G - tr_sigma * np.eye(n)
        sum_l2 = np.sum(D * D) / scale ** 2
        return sum_l2 - n - (om / th * (nu4 - 3) + 1), sum_l
    logdet = summarize_gram(G, p, need_logdet=True).logdet
    v = (math.sqrt(p / n) * logdet - math.sqrt(p * n) * math.log(g)
         + th / (2 * g ** 2) * math.sqrt(n ** 3 / p)
         + ((th ** 2 / (2 * g ** 4) - th * math.sqrt(th) / (3 * g ** 3)) * n * n / p
            + th / (2 * g ** 2) + om / (2 * g ** 2) * (nu4 - 3)) * math.sqrt(n / p))
    return sum_l, v


def lemma_targets(which: str, nu4: float, n: int, p: int, f=None):
    """Limit mean and covariance asserted for the selected two-vector."""
    c = n / p
    if which == "L1":
        return np.zeros(2), np.diag([4.0, nu4 - 1.0])
    if which == "L2":
        a = nu4 - 1.0
        return np.zeros(2), np.array([[a, a * (1 + c)], [a * (1 + c), a + c * (2 * nu4 - 1)]])
    g, th, om = f.gamma, f.theta, f.omega
    k = om / th * (nu4 - 3) + 2
    if which == "L3":
        return np.zeros(2), np.diag([4.0, k])
    off = k * (math.sqrt(th) / g + th * math.sqrt(th) / g ** 3 * c)
    v22 = k * th / g ** 2 + (2 * om / th * (nu4 - 3) + 5) * th ** 2 * c / g ** 4
    return np.zeros(2), np.array([[k, off], [off, v22]])


_LABELS = {
    "L1": ("sum l^2 - n - (nu4-2)", "sum l"),
    "L2": ("sum l", "centered log-sum"),
    "L3": ("sum l^2 - n - (w/t(nu4-3)+1)", "sum l"),
    "L4": ("sum l", "centered log-sum"),
}


def _lemma_chunk(which, pop, p, n, master_seed, indices, f):
    rows = []
    for i in indices:
        X = sample_array(pop, p, n, SeedSpec(master_seed, int(i), (p, n, zlib.crc32(which.encode()))))
        rows.append(_lemma_coordinates(which, gram(X), p, n, pop.nu4, f))
    return rows


def verify_lemma_moments(
    which: str,
    pop: PopulationSpec,
    p: int,
    n: int,
    replications: int,
    master_seed: int,
    workers: int = 1,
) -> LemmaReport:
    """Simulate one of the L1-L4 eigenvalue-moment vectors and compare with its limit.

    L1/L2 take a null population (``Sigma = I``); L3/L4 use the functionals
    of ``pop.sigma``.
    """
    which = which.upper()
    if which not in LEMMAS:
        raise ValueError(f"unknown lemma {which!r}; choose from {', '.join(LEMMAS)}")
    sigma = pop.sigma if pop.sigma is not None else SigmaSpec.identity(p)
    if which in ("L1", "L2") and not (sigma.kind is SigmaKind.SCALED_IDENTITY and sigma.params[0] == 1.0):
        raise ValueError(f"{which} describes the null population with Sigma = I")
    pop = PopulationSpec(pop.entry_dist, sigma, pop.nu4)
    f = functionals(sigma)
    blocks = np.array_split(np.arange(replications), min(max(1, workers) * 4, replications))
    out = np.empty((replications, 2))
    if workers <= 1:
        for idx in blocks:
            out[idx] = _lemma_chunk(which, pop, p, n, master_seed, idx, f)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futs = [(idx, ex.submit(_lemma_chunk, which, pop, p, n, master_seed, idx, f)) for idx in blocks]
            for idx, fut in futs:
                out[idx] = fut.result()
    mean, cov = lemma_targets(which, pop.nu4, n, p, f)
    extra = None
    if which == "L1":
        # E[M_jk^2 (M_jj - 1)] terms: 2 (nu4 - 1)(n - 1) / sqrt(n p), vanishing only as n/p -> 0
        extra = 2.0 * (pop.nu4 - 1.0) * (n - 1) / math.sqrt(n * p)
    return LemmaReport(which, p, n, replications, _LABELS[which], out, mean, cov, extra)
