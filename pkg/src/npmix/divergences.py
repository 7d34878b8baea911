"""The generalized-distance family w(p) + sum_x phi(p(x), q(x)).

Five concrete instances are provided: squared Hellinger, Le Cam,
Jensen-Shannon, Kullback-Leibler and chi-square.  Each phi satisfies
phi(0, y2) = 0 exactly, so the distance between an empirical PMF and a
model PMF can be evaluated over the observed support only: the terms at
unobserved x vanish and the constant w-term absorbs the remaining
q-dependence because q sums to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .exceptions import SupportViolationError
from .kernels import KernelSpec
from .measures import AtomicMeasure, EmpiricalPmf

_CHI2_GUARD = 1e-300

# numba dispatch codes (order matters, mirrored in solver._vdm_kernel)
DIV_CODE = {"hellinger2": 0, "lecam": 1, "js": 2, "kl": 3, "chi2": 4}


@dataclass(frozen=True)
class GeneralizedDivergence:
    """One member of the decomposable distance family.

    ``phi`` and ``dphi_dy2`` are vectorized over numpy arrays; ``w_term``
    is the constant w(p) completing the exact value of the distance.
    """

    name: str
    w_term: float
    phi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dphi_dy2: Callable[[np.ndarray, np.ndarray], np.ndarray]
    code: int
    requires_positive_q: bool

    def __repr__(self) -> str:
        return f"GeneralizedDivergence({self.name!r})"


def _phi_hellinger2(y1, y2):
    return -np.sqrt(np.asarray(y1) * np.asarray(y2))


def _dphi_hellinger2(y1, y2):
    return -0.5 * np.sqrt(np.asarray(y1) / np.asarray(y2))


def _phi_lecam(y1, y2):
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    s = y1 + y2
    with np.errstate(invalid="ignore"):
        out = np.where(s > 0, -2.0 * y1 * y2 / np.where(s > 0, s, 1.0), 0.0)
    return out


def _dphi_lecam(y1, y2):
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    r = y1 / (y1 + y2)
    return -2.0 * r * r


def _phi_js(y1, y2):
    # y1*log(y1/(y1+y2)) + y2*log(y2/(y1+y2)), via log1p for accuracy
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(y1 > 0, -y1 * np.log1p(np.where(y1 > 0, y2 / np.where(y1 > 0, y1, 1.0), 0.0)), 0.0)
        t2 = np.where(y2 > 0, -y2 * np.log1p(np.where(y2 > 0, y1 / np.where(y2 > 0, y2, 1.0), 0.0)), 0.0)
    return t1 + t2


def _dphi_js(y1, y2):
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    return -np.log1p(y1 / y2)


def _phi_kl(y1, y2):
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(y1 > 0, y1 * np.log(np.where(y1 > 0, y1, 1.0) / y2), 0.0)
    return out


def _dphi_kl(y1, y2):
    return -np.asarray(y1, dtype=float) / np.asarray(y2, dtype=float)


def _phi_chi2(y1, y2):
    y1 = np.asarray(y1, dtype=float)
    y2 = np.maximum(np.asarray(y2, dtype=float), _CHI2_GUARD)
    return y1 * y1 / y2


def _dphi_chi2(y1, y2):
    y1 = np.asarray(y1, dtype=float)
    y2 = np.maximum(np.asarray(y2, dtype=float), _CHI2_GUARD)
    return -(y1 / y2) ** 2


DIVERGENCES = {
    "hellinger2": GeneralizedDivergence(
        "hellinger2", 1.0, _phi_hellinger2, _dphi_hellinger2,
        DIV_CODE["hellinger2"], False),
    "lecam": GeneralizedDivergence(
        "lecam", 1.0, _phi_lecam, _dphi_lecam, DIV_CODE["lecam"], False),
    "js": GeneralizedDivergence(
        "js", 2.0 * math.log(2.0), _phi_js, _dphi_js, DIV_CODE["js"], False),
    "kl": GeneralizedDivergence(
        "kl", 0.0, _phi_kl, _dphi_kl, DIV_CODE["kl"], True),
    "chi2": GeneralizedDivergence(
        "chi2", -1.0, _phi_chi2, _dphi_chi2, DIV_CODE["chi2"], True),
}

DivergenceLike = Union[str, GeneralizedDivergence]


def get_divergence(div: DivergenceLike) -> GeneralizedDivergence:
    if isinstance(div, GeneralizedDivergence):
        return div
    try:
        return DIVERGENCES[div]
    except KeyError:
        raise ValueError(
            f"unknown divergence {div!r}; choose from {sorted(DIVERGENCES)}") from None


def _q_values(emp: EmpiricalPmf, q) -> np.ndarray:
    if callable(q):
        return np.asarray([float(q(int(v))) for v in emp.values])
    arr = np.asarray(q, dtype=float)
    if arr.shape != emp.values.shape:
        raise ValueError("q array must align with the empirical support")
    return arr


def _check_support(div: GeneralizedDivergence, emp: EmpiricalPmf,
                   qvals: np.ndarray) -> None:
    if not div.requires_positive_q:
        return
    bad = (emp.freqs > 0) & (qvals < _CHI2_GUARD)
    if bad.any():
        where = emp.values[bad]
        raise SupportViolationError(
            f"{div.name} needs q > 0 on the observed support; "
            f"q vanishes at x={where.tolist()}")


def evaluate(div: DivergenceLike, emp: EmpiricalPmf, q) -> float:
    """Exact distance between ``emp`` and a full PMF ``q``.

    ``q`` is either a callable ``x -> probability`` (must sum to one over
    all of Z>=0) or an array of q-values aligned with ``emp.values``.
    Because phi(0, .) = 0 and q sums to one, summing phi over the observed
    support plus the constant w-term gives the exact value.
    """
    d = get_divergence(div)
    qvals = _q_values(emp, q)
    _check_support(d, emp, qvals)
    return float(d.w_term + np.sum(d.phi(emp.freqs, qvals)))


@dataclass(frozen=True)
class ChainReport:
    """Values of the five distances plus the six pairwise inequalities."""

    values: dict
    checks: dict

    @property
    def all_hold(self) -> bool:
        return all(self.checks.values())


def chain_check(emp: EmpiricalPmf, q, slack: float = 1e-12) -> ChainReport:
    """Evaluate all five distances and their comparison inequalities.

    Checks 2*H2 <= KL <= chi2, H2 <= LC <= 2*H2 and LC <= JS <= 2log2*LC,
    each with additive ``slack``.
    """
    vals = {name: evaluate(name, emp, q) for name in DIVERGENCES}
    h2, lc, js, kl, x2 = (vals["hellinger2"], vals["lecam"], vals["js"],
                          vals["kl"], vals["chi2"])
    checks = {
        "2h2_le_kl": 2.0 * h2 <= kl + slack,
        "kl_le_chi2": kl <= x2 + slack,
        "h2_le_lecam": h2 <= lc + slack,
        "lecam_le_2h2": lc <= 2.0 * h2 + slack,
        "lecam_le_js": lc <= js + slack,
        "js_le_2log2_lecam": js <= 2.0 * math.log(2.0) * lc + slack,
    }
    return ChainReport(values=vals, checks=checks)


def chi2_exact(emp: EmpiricalPmf, kernel: KernelSpec, Q: AtomicMeasure) -> float:
    """Exact chi-square distance between ``emp`` and the mixture PMF of Q.

    Equals ``sum_observed freq^2 / mu - 1``; the unobserved tail enters
    only through the mixture summing to one, so no truncation is needed.
    """
    mu = kernel.mixture_pmf(Q, emp.values)
    d = DIVERGENCES["chi2"]
    _check_support(d, emp, mu)
    return float(np.sum(emp.freqs ** 2 / mu) - 1.0)
