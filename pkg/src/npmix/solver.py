"""Minimum-distance solvers over probability measures on [0, theta_star].

Two conditional-gradient-style methods are provided:

* ``vdm`` repeatedly mixes in the point mass with the steepest descent
  direction, found by a grid scan plus golden-section refinement, with a
  one-dimensional line search on the mixing coefficient.
* ``isdm`` adds all locally steep point masses per iteration and then
  re-optimizes every atom weight with a simplex-constrained convex
  solver (``fully_corrective_weights``).

Both stop once the minimum directional derivative over point masses
exceeds ``-stop_tol``; by convexity that certificate also bounds the
objective gap to the optimum by ``stop_tol``.  ``oracle_grid_solver``
solves the same convex program over a fixed dense grid and serves as an
independent reference in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from . import _vdm_kernel
from ._validation import check_scalar
from .divergences import DivergenceLike, get_divergence
from .exceptions import ConfigurationError, NumericalError, SupportViolationError
from .kernels import KernelSpec
from .measures import AtomicMeasure, EmpiricalPmf

_INVPHI = 0.6180339887498949
_ATOM_CAPACITY = 2048


@dataclass
class SolverConfig:
    """Knobs shared by both solvers.

    ``stop_tol`` is the directional-derivative tolerance tau: iteration
    stops once ``min_lambda Phi'(G, delta_lambda) >= -tau``.  The default
    ``init_location=None`` places the starting point mass at
    ``theta_star / 2``.
    """

    divergence: str = "kl"
    grid_size: int = 512
    refine_iters: int = 60
    stop_tol: float = 1e-8
    max_outer_iters: int = 500
    weight_tol: float = 1e-10
    merge_radius: float = 1e-8
    prune_eps: float = 1e-12
    init_location: Optional[float] = None
    eps_search_iters: int = 80
    trace_every: int = 1

    def __post_init__(self):
        if self.grid_size < 2:
            raise ConfigurationError("grid_size must be >= 2")
        if self.stop_tol < 0:
            raise ConfigurationError("stop_tol must be >= 0")
        if self.max_outer_iters < 1:
            raise ConfigurationError("max_outer_iters must be >= 1")
        if self.trace_every < 1:
            raise ConfigurationError("trace_every must be >= 1")
        get_divergence(self.divergence)


@dataclass
class SolverTrace:
    """Per-iteration history of one solve.

    ``objective`` excludes the constant w-term (see ``objective()``);
    rows are recorded every ``trace_every`` iterations plus the exit
    iteration.  ``new_atoms`` holds the location(s) mixed in at each
    recorded iteration (empty tuple at the converged exit row).
    """

    objective: np.ndarray
    min_directional_derivative: np.ndarray
    atom_count: np.ndarray
    new_atoms: list
    status: str
    n_iters: int
    trace_every: int = 1

    def is_monotone(self, slack: float = 1e-12) -> bool:
        return bool(np.all(np.diff(self.objective) <= slack))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("iteration,objective,min_directional_derivative,atom_count,new_atoms\n")
            for k in range(len(self.objective)):
                atoms = ";".join(repr(a) for a in self.new_atoms[k])
                fh.write(f"{k * self.trace_every},{self.objective[k]!r},"
                         f"{self.min_directional_derivative[k]!r},"
                         f"{int(self.atom_count[k])},{atoms}\n")


# -- objective and directional derivative -----------------------------------


def _mixture_on_support(kernel: KernelSpec, G: AtomicMeasure,
                        values: np.ndarray) -> np.ndarray:
    return G.weights @ kernel.pmf_grid(values, G.locations)


def objective(div: DivergenceLike, emp: EmpiricalPmf, kernel: KernelSpec,
              G: AtomicMeasure) -> float:
    """Optimization objective: sum_x phi(alpha_x, mu_x(G)), w-term omitted.

    The constant w-term does not affect the argmin; ``divergences.evaluate``
    reports the full distance.
    """
    d = get_divergence(div)
    mu = _mixture_on_support(kernel, G, emp.values)
    if d.requires_positive_q:
        bad = (emp.freqs > 0) & (mu <= 0)
        if bad.any():
            raise SupportViolationError(
                f"{d.name} objective undefined: mixture mass vanishes at "
                f"x={emp.values[bad].tolist()}")
    return float(np.sum(d.phi(emp.freqs, mu)))


def directional_derivative(div: DivergenceLike, emp: EmpiricalPmf,
                           kernel: KernelSpec, G: AtomicMeasure,
                           lam: float) -> float:
    """Gateaux derivative of the objective at G toward the point mass at lam."""
    d = get_divergence(div)
    lam = float(lam)
    if not 0.0 <= lam <= kernel.theta_star:
        raise ValueError(f"lambda={lam} outside [0, {kernel.theta_star}]")
    if G.n_atoms == 1 and G.locations[0] == 0.0 and np.any(emp.values > 0):
        raise ValueError(
            "directional derivative undefined at the point mass at zero "
            "when positive values were observed")
    mu = _mixture_on_support(kernel, G, emp.values)
    if d.requires_positive_q and np.any((emp.freqs > 0) & (mu <= 0)):
        raise SupportViolationError(
            f"{d.name} derivative undefined: mixture mass vanishes on support")
    c = d.dphi_dy2(emp.freqs, mu)
    f_lam = kernel.pmf(emp.values, lam)
    return float(c @ (f_lam - mu))


def min_directional_derivative(div: DivergenceLike, emp: EmpiricalPmf,
                               kernel: KernelSpec, G: AtomicMeasure,
                               grid_size: int = 512,
                               refine_iters: int = 60):
    """Minimum of Phi'(G, delta_lambda) over a refined lambda grid.

    Returns ``(value, argmin_lambda)``; this is the convergence
    certificate both solvers use.
    """
    d = get_divergence(div)
    values = emp.values
    mu = _mixture_on_support(kernel, G, values)
    c = d.dphi_dy2(emp.freqs, mu)
    base = float(c @ mu)
    grid = np.linspace(0.0, kernel.theta_star, grid_size)
    D = kernel.pmf_grid(values, grid) @ c - base
    j = int(np.argmin(D))
    lo = grid[max(j - 1, 0)]
    hi = grid[min(j + 1, grid_size - 1)]

    def dir_at(lam):
        return float(c @ kernel.pmf(values, lam)) - base

    lam_ref, val_ref = _golden_min(dir_at, lo, hi, refine_iters)
    if D[j] <= val_ref:
        return float(D[j]), float(grid[j])
    return float(val_ref), float(lam_ref)


def _golden_min(f: Callable[[float], float], a: float, b: float, iters: int):
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


# -- vertex direction method --------------------------------------------------


def _prepare(emp: EmpiricalPmf, kernel: KernelSpec, config: SolverConfig):
    d = get_divergence(config.divergence)
    lam0 = config.init_location
    if lam0 is None:
        lam0 = kernel.theta_star / 2.0
    lam0 = float(lam0)
    if not 0.0 < lam0 < kernel.theta_star:
        raise ConfigurationError(
            f"init_location={lam0} must lie strictly inside (0, {kernel.theta_star})")
    grid = np.linspace(0.0, kernel.theta_star, config.grid_size)
    P_grid = kernel.pmf_grid(emp.values, grid)
    return d, lam0, grid, P_grid


def vdm(emp: EmpiricalPmf, kernel: KernelSpec, config: SolverConfig):
    """Vertex direction method.  Returns ``(measure, trace)``.

    Hitting ``max_outer_iters`` is not an error: the best measure so far
    is returned with ``trace.status == "max_iters"``.
    """
    d, lam0, grid, P_grid = _prepare(emp, kernel, config)
    values = emp.values.astype(float)
    alphas = emp.freqs.astype(float)
    locs0 = np.array([lam0])
    wts0 = np.array([1.0])

    if kernel._code is not None:
        lgam = gammaln(values + 1.0)
        (locs, wts, status_code, n_iters, t_obj, t_mindd, t_atoms,
         t_newloc) = _vdm_kernel.vdm_loop(
            kernel._code, d.code, values, lgam, alphas, grid, P_grid,
            locs0, wts0, config.stop_tol, config.max_outer_iters,
            config.refine_iters, config.eps_search_iters,
            config.merge_radius, config.prune_eps, _ATOM_CAPACITY,
            config.trace_every)
        new_atoms = [() if math.isnan(x) else (float(x),) for x in t_newloc]
    else:
        (locs, wts, status_code, n_iters, t_obj, t_mindd, t_atoms,
         new_atoms) = _vdm_python(
            d, emp, kernel, grid, P_grid, locs0, wts0, config)

    status = "converged" if status_code == _vdm_kernel.STATUS_CONVERGED else "max_iters"
    measure = AtomicMeasure.from_raw(locs, wts, kernel.theta_star,
                                     config.merge_radius, config.prune_eps)
    trace = SolverTrace(np.asarray(t_obj), np.asarray(t_mindd),
                        np.asarray(t_atoms, dtype=np.int64), list(new_atoms),
                        status, int(n_iters), config.trace_every)
    return measure, trace


def _vdm_python(d, emp, kernel, grid, P_grid, locs0, wts0, config):
    """Pure-python twin of the jitted loop, for custom kernels."""
    values = emp.values
    alphas = emp.freqs

    def phi_total(mu):
        if d.requires_positive_q and np.any(mu <= 0):
            return math.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.sum(d.phi(alphas, mu))
        return float(val) if np.isfinite(val) else math.inf

    locs = list(locs0)
    wts = list(wts0)
    mu = wts0 @ kernel.pmf_grid(values, locs0)
    t_obj, t_mindd, t_atoms, new_atoms = [], [], [], []
    status = _vdm_kernel.STATUS_MAX_ITERS
    n_iters = 0
    for it in range(config.max_outer_iters):
        n_iters = it + 1
        c = d.dphi_dy2(alphas, mu)
        base = float(c @ mu)
        D = P_grid @ c - base
        j = int(np.argmin(D))
        lo = grid[max(j - 1, 0)]
        hi = grid[min(j + 1, len(grid) - 1)]
        lam_ref, val_ref = _golden_min(
            lambda lam: float(c @ kernel.pmf(values, lam)) - base,
            lo, hi, config.refine_iters)
        if D[j] <= val_ref:
            lam, dmin = float(grid[j]), float(D[j])
        else:
            lam, dmin = float(lam_ref), float(val_ref)
        record = (it % config.trace_every == 0) or dmin >= -config.stop_tol
        if record:
            t_obj.append(phi_total(mu))
            t_mindd.append(dmin)
            t_atoms.append(len(locs))
            new_atoms.append(() if dmin >= -config.stop_tol else (lam,))
        if dmin >= -config.stop_tol:
            status = _vdm_kernel.STATUS_CONVERGED
            break
        f_new = kernel.pmf(values, lam)
        dvec = f_new - mu
        eps, _ = _golden_min(lambda e: phi_total(mu + e * dvec), 0.0, 1.0,
                             config.eps_search_iters)
        mu = mu + eps * dvec
        wts = [w * (1.0 - eps) for w in wts]
        locs.append(lam)
        wts.append(eps)
        order = np.argsort(locs)
        locs = [locs[i] for i in order]
        wts = [wts[i] for i in order]
        merged = AtomicMeasure.from_raw(locs, wts, kernel.theta_star,
                                        config.merge_radius, config.prune_eps)
        locs = list(merged.locations)
        wts = list(merged.weights)
    return (np.asarray(locs), np.asarray(wts), status, n_iters,
            np.asarray(t_obj), np.asarray(t_mindd), np.asarray(t_atoms),
            new_atoms)


# -- fully corrective weight solver ------------------------------------------


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u + (1.0 - css) / np.arange(1, u.size + 1) > 0)[0][-1]
    lam = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(v + lam, 0.0)


def fully_corrective_weights(locations, emp: EmpiricalPmf, kernel: KernelSpec,
                             div: DivergenceLike, tol: float,
                             init_weights=None, max_iters: int = 10000) -> np.ndarray:
    """Minimize the convex weight objective over the probability simplex.

    Uses projected gradient with a Barzilai-Borwein step and Armijo
    backtracking; stops when the first-order optimality gap
    ``max_j (g @ w - g_j)`` drops to ``tol`` (that gap also bounds the
    objective error for this convex program) or after ``max_iters``.
    Locations contributing no kernel mass on the observed support get
    weight zero.
    """
    d = get_divergence(div)
    locations = np.atleast_1d(np.asarray(locations, dtype=float))
    if locations.size == 0:
        raise ValueError("need at least one candidate location")
    tol = check_scalar(tol, "tol", nonnegative=True)
    alphas = emp.freqs
    F = kernel.pmf_grid(emp.values, locations)  # (L, q)
    active = np.max(F, axis=1) > 1e-300
    if not active.any():
        raise SupportViolationError(
            "no candidate location yields kernel mass on the observed support")
    Fa = F[active]
    La = Fa.shape[0]

    def obj(w):
        mu = w @ Fa
        if d.requires_positive_q and np.any((alphas > 0) & (mu <= 0)):
            return math.inf, mu
        with np.errstate(divide="ignore", invalid="ignore"):
            val = float(np.sum(d.phi(alphas, mu)))
        return (val if np.isfinite(val) else math.inf), mu

    if init_weights is not None:
        w = np.maximum(np.asarray(init_weights, dtype=float)[active], 0.0)
        s = w.sum()
        w = w / s if s > 0 else np.full(La, 1.0 / La)
    else:
        w = np.full(La, 1.0 / La)
    fval, mu = obj(w)
    if not np.isfinite(fval):
        w = np.full(La, 1.0 / La)
        fval, mu = obj(w)
    if not np.isfinite(fval):
        raise SupportViolationError(
            f"{d.name} weight objective is infinite even at uniform weights; "
            "some observed value has no kernel mass from any candidate")

    grad = Fa @ d.dphi_dy2(alphas, mu)
    step = 1.0
    w_prev = None
    grad_prev = None
    for _ in range(max_iters):
        gap = float(np.max(w @ grad - grad))
        if gap <= tol:
            break
        if w_prev is not None:
            dw = w - w_prev
            dg = grad - grad_prev
            denom = float(dw @ dg)
            if denom > 0:
                step = float(dw @ dw) / denom
        step = min(max(step, 1e-12), 1e12)
        # Armijo backtracking along the projection arc
        accepted = False
        s = step
        for _bt in range(80):
            w_new = _project_simplex(w - s * grad)
            f_new, mu_new = obj(w_new)
            decr = float(grad @ (w_new - w))
            if np.isfinite(f_new) and f_new <= fval + 1e-4 * decr:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break  # step collapsed to rounding level: first-order stationary
        if not np.isfinite(f_new):
            raise NumericalError(
                f"weight solver produced a non-finite objective "
                f"(step={s}, gap={gap})")
        w_prev, grad_prev = w, grad
        w, fval, mu = w_new, f_new, mu_new
        grad = Fa @ d.dphi_dy2(alphas, mu)

    out = np.zeros(locations.size)
    out[active] = w
    return out


def oracle_grid_solver(emp: EmpiricalPmf, kernel: KernelSpec,
                       div: DivergenceLike, grid_points: int,
                       tol: float = 1e-10):
    """Solve the convex weight program over a uniform dense grid.

    Returns ``(measure, objective_value)``; the objective is evaluated at
    the optimal weights before pruning.
    """
    if grid_points < 2:
        raise ConfigurationError("grid_points must be >= 2")
    d = get_divergence(div)
    grid = np.linspace(0.0, kernel.theta_star, grid_points)
    w = fully_corrective_weights(grid, emp, kernel, d, tol)
    mu = w @ kernel.pmf_grid(emp.values, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_star = float(np.sum(d.phi(emp.freqs, mu)))
    measure = AtomicMeasure.from_raw(grid, w, kernel.theta_star,
                                     merge_radius=0.0, prune_eps=1e-12)
    return measure, phi_star


# -- intra simplex direction method -------------------------------------------


def _local_minima_indices(D: np.ndarray) -> list:
    """Grid indices of local minima: interior dips plus descending endpoints."""
    idx = []
    M = D.size
    if M >= 2 and D[0] < D[1]:
        idx.append(0)
    for j in range(1, M - 1):
        if D[j] < D[j - 1] and D[j] < D[j + 1]:
            idx.append(j)
    if M >= 2 and D[M - 1] < D[M - 2]:
        idx.append(M - 1)
    return idx


def isdm(emp: EmpiricalPmf, kernel: KernelSpec, config: SolverConfig):
    """Intra simplex direction method.  Returns ``(measure, trace)``.

    Each iteration refines every local minimum of the directional
    derivative over the lambda grid, keeps those below ``-stop_tol`` as
    candidate atoms, and re-optimizes all weights over the union of old
    and new support with ``fully_corrective_weights`` (warm-started at
    the incumbent so the objective never increases).
    """
    d, lam0, grid, P_grid = _prepare(emp, kernel, config)
    values = emp.values
    alphas = emp.freqs
    tau = config.stop_tol

    locs = np.array([lam0])
    wts = np.array([1.0])

    def phi_total(mu):
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.sum(d.phi(alphas, mu))
        return float(val) if np.isfinite(val) else math.inf

    t_obj, t_mindd, t_atoms, new_atoms = [], [], [], []
    status = "max_iters"
    n_iters = 0
    for it in range(config.max_outer_iters):
        n_iters = it + 1
        mu = wts @ kernel.pmf_grid(values, locs)
        c = d.dphi_dy2(alphas, mu)
        base = float(c @ mu)
        D = P_grid @ c - base

        def dir_at(lam):
            return float(c @ kernel.pmf(values, lam)) - base

        refined = []
        for j in _local_minima_indices(D):
            lo = grid[max(j - 1, 0)]
            hi = grid[min(j + 1, len(grid) - 1)]
            lam_ref, val_ref = _golden_min(dir_at, lo, hi, config.refine_iters)
            if D[j] <= val_ref:
                refined.append((float(grid[j]), float(D[j])))
            else:
                refined.append((float(lam_ref), float(val_ref)))
        jmin = int(np.argmin(D))
        dmin = min([float(D[jmin])] + [v for _, v in refined])
        cands = sorted({lam for lam, v in refined if v < -tau})
        if float(D[jmin]) < -tau and not any(
                abs(grid[jmin] - l) <= config.merge_radius for l in cands):
            cands.append(float(grid[jmin]))

        t_obj.append(phi_total(mu))
        t_mindd.append(dmin)
        t_atoms.append(locs.size)
        new_atoms.append(tuple(cands) if dmin < -tau else ())

        if dmin >= -tau:
            status = "converged"
            break

        support = np.concatenate([locs, np.asarray(cands)])
        support, first = np.unique(support, return_index=True)
        init = np.concatenate([wts, np.zeros(len(cands))])[first]
        w = fully_corrective_weights(support, emp, kernel, d,
                                     config.weight_tol, init_weights=init)
        merged = AtomicMeasure.from_raw(support, w, kernel.theta_star,
                                        config.merge_radius, config.prune_eps)
        locs = merged.locations.copy()
        wts = merged.weights.copy()

    measure = AtomicMeasure.from_raw(locs, wts, kernel.theta_star,
                                     config.merge_radius, config.prune_eps)
    trace = SolverTrace(np.asarray(t_obj), np.asarray(t_mindd),
                        np.asarray(t_atoms, dtype=np.int64), new_atoms,
                        status, n_iters, 1)
    return measure, trace


def solve(emp: EmpiricalPmf, kernel: KernelSpec, config: SolverConfig,
          method: str = "vdm"):
    """Dispatch to ``vdm`` or ``isdm`` by name."""
    if method == "vdm":
        return vdm(emp, kernel, config)
    if method == "isdm":
        return isdm(emp, kernel, config)
    raise ConfigurationError(f"unknown method {method!r}; use 'vdm' or 'isdm'")
