"""Seeded Monte Carlo studies: sampling, convergence rates, tail quantiles.

Replication r at sample size n draws from a counter-based generator
derived from ``(master_seed, n, r)``, so studies are reproducible
bit-for-bit and replications are independent of execution order.  Set
the environment variable ``NPMIX_THREADS`` to fan replications out over
a thread pool; results are reduced in (n, replication) order either way.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .divergences import chi2_exact
from .exceptions import NpmixError, StudyError
from .kernels import KernelSpec
from .measures import AtomicMeasure, EmpiricalPmf
from .solver import SolverConfig, oracle_grid_solver, solve
from .transport import GotConfig, got_w1, w1

_SAMPLER_TAIL_TOL = 1e-13


def replication_rng(master_seed: int, n: int, r: int) -> np.random.Generator:
    """Independent counter-based stream for replication ``r`` at size ``n``."""
    seq = np.random.SeedSequence(entropy=(int(master_seed), int(n), int(r)))
    return np.random.Generator(np.random.Philox(seq))


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def sample_mixture(kernel: KernelSpec, Q: AtomicMeasure, n: int, seed) -> np.ndarray:
    """Draw ``n`` observations from the mixture PMF of ``Q``.

    Each draw picks an atom by inverting the weight CDF, then inverts the
    kernel CDF at that atom.  Deterministic given the seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _as_generator(seed)
    u_atom = rng.random(n)
    u_val = rng.random(n)
    atom_idx = np.searchsorted(Q._cumweights, u_atom, side="left")
    atom_idx = np.minimum(atom_idx, Q.n_atoms - 1)
    xmax = kernel.truncation_index(_SAMPLER_TAIL_TOL)
    xs = np.arange(xmax + 1)
    out = np.empty(n, dtype=np.int64)
    for j in range(Q.n_atoms):
        mask = atom_idx == j
        if not mask.any():
            continue
        cdf = np.cumsum(kernel.pmf(xs, float(Q.locations[j])))
        cdf[-1] = max(cdf[-1], 1.0)
        out[mask] = np.searchsorted(cdf, u_val[mask], side="left")
    return out


def _ls_slope(ns: np.ndarray, means: np.ndarray):
    slope, intercept = np.polyfit(np.log(ns), np.log(means), 1)
    return float(slope), float(intercept)


@dataclass
class RateReport:
    """Per-n Monte Carlo summaries of both transport distances.

    ``to_csv`` writes one row per sample size with columns
    ``n,reps_used,mean_got,stderr_got,mean_w1,stderr_w1`` (fixed order).
    """

    n_grid: np.ndarray
    reps_used: np.ndarray
    mean_got: np.ndarray
    stderr_got: np.ndarray
    mean_w1: np.ndarray
    stderr_w1: np.ndarray
    slope_got: float
    intercept_got: float
    slope_w1: float
    intercept_w1: float
    n_failures: int
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("n,reps_used,mean_got,stderr_got,mean_w1,stderr_w1\n")
            for i, n in enumerate(self.n_grid):
                fh.write(f"{int(n)},{int(self.reps_used[i])},"
                         f"{self.mean_got[i]!r},{self.stderr_got[i]!r},"
                         f"{self.mean_w1[i]!r},{self.stderr_w1[i]!r}\n")


def _pool_map(fn, args_list):
    threads = int(os.environ.get("NPMIX_THREADS", "1"))
    if threads > 1 and len(args_list) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, args_list))
    return [fn(a) for a in args_list]


def rate_study(kernel: KernelSpec, Q: AtomicMeasure, divergence: str,
               method: str, n_grid: Sequence[int], reps: int, sigma: float,
               master_seed: int,
               solver_config: Optional[SolverConfig] = None,
               got_config: Optional[GotConfig] = None) -> RateReport:
    """Monte Carlo estimate of how both distances shrink with n.

    For each n and replication: sample from the mixture, fit the mixing
    distribution, and record the smoothed and plain distances to the
    truth.  Failed replications are excluded and counted; more than 10%
    failures aborts the study.
    """
    n_grid = np.asarray(list(n_grid), dtype=np.int64)
    if n_grid.size == 0 or np.any(np.diff(n_grid) <= 0):
        raise StudyError("n_grid must be nonempty and strictly increasing")
    if reps < 2:
        raise StudyError("reps must be >= 2")
    cfg = solver_config or SolverConfig(divergence=divergence)
    if cfg.divergence != divergence:
        cfg = SolverConfig(**{**cfg.__dict__, "divergence": divergence})
    gcfg = got_config or GotConfig(sigma=sigma)

    def one(task):
        n, r = task
        rng = replication_rng(master_seed, n, r)
        try:
            xs = sample_mixture(kernel, Q, n, rng)
            emp = EmpiricalPmf.from_samples(xs)
            fitted, _ = solve(emp, kernel, cfg, method)
            return (got_w1(Q, fitted, gcfg), w1(Q, fitted))
        except NpmixError:
            return None

    mean_got, se_got, mean_w1, se_w1, used = [], [], [], [], []
    failures = 0
    for n in n_grid:
        results = _pool_map(one, [(int(n), r) for r in range(reps)])
        ok = [res for res in results if res is not None]
        failures += reps - len(ok)
        if len(ok) < 2:
            raise StudyError(f"too few successful replications at n={n}")
        gvals = np.array([g for g, _ in ok])
        wvals = np.array([v for _, v in ok])
        used.append(len(ok))
        mean_got.append(gvals.mean())
        se_got.append(gvals.std(ddof=1) / math.sqrt(len(ok)))
        mean_w1.append(wvals.mean())
        se_w1.append(wvals.std(ddof=1) / math.sqrt(len(ok)))
    if failures > 0.1 * reps * n_grid.size:
        raise StudyError(f"{failures} solver failures exceed the 10% budget")

    mean_got = np.asarray(mean_got)
    mean_w1 = np.asarray(mean_w1)
    slope_got, icept_got = _ls_slope(n_grid, mean_got)
    slope_w1, icept_w1 = _ls_slope(n_grid, mean_w1)
    return RateReport(
        n_grid=n_grid, reps_used=np.asarray(used, dtype=np.int64),
        mean_got=mean_got, stderr_got=np.asarray(se_got),
        mean_w1=mean_w1, stderr_w1=np.asarray(se_w1),
        slope_got=slope_got, intercept_got=icept_got,
        slope_w1=slope_w1, intercept_w1=icept_w1,
        n_failures=failures,
        metadata={"kernel": kernel.family, "theta_star": kernel.theta_star,
                  "sigma": gcfg.sigma, "divergence": divergence,
                  "method": method, "seed": master_seed, "reps": reps})


@dataclass
class Chi2Report:
    """Empirical tail quantiles of the exact chi-square statistic vs. n.

    The reference curve is ``C * n^-1 (log n)^(theta_star + 4)
    * delta^-(1 + eps(n))`` with ``eps(n) = log log n / log n`` and C
    fitted so the curve touches the quantile at the smallest n.
    ``to_csv`` columns: ``n,reps,quantile,epsilon,bound`` (fixed order).
    """

    n_grid: np.ndarray
    reps: int
    delta: float
    quantiles: np.ndarray
    epsilons: np.ndarray
    bound: np.ndarray
    fitted_c: float
    below_bound: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def all_below(self) -> bool:
        return bool(np.all(self.below_bound))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("n,reps,quantile,epsilon,bound\n")
            for i, n in enumerate(self.n_grid):
                fh.write(f"{int(n)},{self.reps},{self.quantiles[i]!r},"
                         f"{self.epsilons[i]!r},{self.bound[i]!r}\n")


def chi2_study(kernel: KernelSpec, Q: AtomicMeasure, n_grid: Sequence[int],
               reps: int, delta: float, master_seed: int) -> Chi2Report:
    """Empirical (1-delta)-quantiles of chi2(empirical || mixture) vs. n."""
    n_grid = np.asarray(list(n_grid), dtype=np.int64)
    if not 0.0 < delta < 1.0:
        raise StudyError("delta must lie strictly between 0 and 1")
    if n_grid.size == 0 or np.any(np.diff(n_grid) <= 0):
        raise StudyError("n_grid must be nonempty and strictly increasing")
    if int(n_grid.min()) < 16:
        raise StudyError("min(n_grid) must be >= 16 so eps(n) lies in (0, 1)")
    if reps < 2:
        raise StudyError("reps must be >= 2")

    def one(task):
        n, r = task
        rng = replication_rng(master_seed, n, r)
        xs = sample_mixture(kernel, Q, n, rng)
        return chi2_exact(EmpiricalPmf.from_samples(xs), kernel, Q)

    quantiles = []
    for n in n_grid:
        vals = np.asarray(_pool_map(one, [(int(n), r) for r in range(reps)]))
        quantiles.append(float(np.quantile(vals, 1.0 - delta)))
    quantiles = np.asarray(quantiles)

    logn = np.log(n_grid.astype(float))
    eps = np.log(logn) / logn
    factor = (1.0 / n_grid) * logn ** (kernel.theta_star + 4.0) * delta ** (-(1.0 + eps))
    fitted_c = float(quantiles[0] / factor[0])
    bound = fitted_c * factor
    below = quantiles <= bound * (1.0 + 1e-12)
    return Chi2Report(
        n_grid=n_grid, reps=reps, delta=delta, quantiles=quantiles,
        epsilons=eps, bound=bound, fitted_c=fitted_c, below_bound=below,
        metadata={"kernel": kernel.family, "theta_star": kernel.theta_star,
                  "seed": master_seed})


# -- solver comparison over a fixed instance suite ---------------------------


@dataclass(frozen=True)
class Instance:
    """A fixed estimation problem: a sample plus its kernel."""

    name: str
    samples: tuple
    kernel_family: str
    theta_star: float

    def kernel(self) -> KernelSpec:
        return KernelSpec.by_name(self.kernel_family, self.theta_star)

    def empirical(self) -> EmpiricalPmf:
        return EmpiricalPmf.from_samples(np.asarray(self.samples))


def default_instance_suite() -> list:
    """Five synthetic instances exercising distinct solution geometries."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(20240311)))
    pois_mix = np.where(rng.random(200) < 0.4, 1.0, 3.0)
    pois_sample = rng.poisson(pois_mix)
    geo = KernelSpec.geometric(0.8)
    geo_mean = AtomicMeasure(np.array([0.3, 0.7]), np.array([0.5, 0.5]), 0.8)
    geo_sample = sample_mixture(geo, geo_mean, 150, rng)
    return [
        Instance("single_value", tuple([2] * 100), "poisson", 5.0),
        Instance("two_cell", tuple([0] * 50 + [3] * 50), "poisson", 4.0),
        Instance("poisson_mix", tuple(int(v) for v in pois_sample), "poisson", 5.0),
        Instance("geometric_mix", tuple(int(v) for v in geo_sample), "geometric", 0.8),
        Instance("skewed", tuple([0] * 70 + [1] * 20 + [4] * 10), "poisson", 4.0),
    ]


@dataclass
class ComparisonRow:
    instance: str
    divergence: str
    phi_vdm: float
    phi_isdm: float
    phi_oracle: float
    iters_vdm: int
    iters_isdm: int
    max_abs_gap: float
    monotone_vdm: bool
    monotone_isdm: bool
    cert_vdm: float
    cert_isdm: float
    error: str = ""


@dataclass
class ComparisonTable:
    rows: list

    def max_gap(self) -> float:
        return max(r.max_abs_gap for r in self.rows if not r.error)

    def to_csv(self, path) -> None:
        cols = ("instance,divergence,phi_vdm,phi_isdm,phi_oracle,"
                "iters_vdm,iters_isdm,max_abs_gap,monotone_vdm,"
                "monotone_isdm,cert_vdm,cert_isdm,error\n")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(cols)
            for r in self.rows:
                fh.write(f"{r.instance},{r.divergence},{r.phi_vdm!r},"
                         f"{r.phi_isdm!r},{r.phi_oracle!r},{r.iters_vdm},"
                         f"{r.iters_isdm},{r.max_abs_gap!r},"
                         f"{int(r.monotone_vdm)},{int(r.monotone_isdm)},"
                         f"{r.cert_vdm!r},{r.cert_isdm!r},{r.error}\n")


def solver_comparison(instances: Sequence[Instance],
                      config: Optional[SolverConfig] = None,
                      oracle_grid_points: int = 4096) -> ComparisonTable:
    """Run both solvers plus the dense-grid oracle on every instance.

    Each instance runs under all five divergences.  Per-cell solver
    errors are recorded in the row rather than aborting the table.
    """
    from .divergences import DIVERGENCES
    from .solver import min_directional_derivative, objective

    if not instances:
        raise StudyError("need at least one instance")
    base = config or SolverConfig(stop_tol=5e-7, max_outer_iters=3_000_000,
                                  trace_every=64)
    rows = []
    for inst in instances:
        kernel = inst.kernel()
        emp = inst.empirical()
        for name in DIVERGENCES:
            cfg = SolverConfig(**{**base.__dict__, "divergence": name})
            try:
                m_vdm, tr_vdm = solve(emp, kernel, cfg, "vdm")
                m_isdm, tr_isdm = solve(emp, kernel, cfg, "isdm")
                _, phi_star = oracle_grid_solver(emp, kernel, name,
                                                 oracle_grid_points)
                phi_v = objective(name, emp, kernel, m_vdm)
                phi_i = objective(name, emp, kernel, m_isdm)
                gaps = [abs(phi_v - phi_star), abs(phi_i - phi_star),
                        abs(phi_v - phi_i)]
                cert_v, _ = min_directional_derivative(
                    name, emp, kernel, m_vdm, cfg.grid_size, cfg.refine_iters)
                cert_i, _ = min_directional_derivative(
                    name, emp, kernel, m_isdm, cfg.grid_size, cfg.refine_iters)
                rows.append(ComparisonRow(
                    inst.name, name, phi_v, phi_i, phi_star,
                    tr_vdm.n_iters, tr_isdm.n_iters, max(gaps),
                    tr_vdm.is_monotone(), tr_isdm.is_monotone(),
                    cert_v, cert_i))
            except NpmixError as exc:
                rows.append(ComparisonRow(
                    inst.name, name, math.nan, math.nan, math.nan,
                    0, 0, math.nan, False, False, math.nan, math.nan,
                    error=f"{type(exc).__name__}: {exc}"))
    return ComparisonTable(rows)
