"""Hermite-based analysis of Gaussian-smoothed Lipschitz functions.

For a 1-Lipschitz function l with l(0) = 0, the smoothed function
``l_sigma = l * N(0, sigma^2)`` has derivatives expressible through
probabilists' Hermite polynomials:

    l_sigma^(x)(theta) = (-1)^x sigma^(-x)
        * integral l(theta - s) He_x(s / sigma) phi_sigma(s) ds.

From those derivatives at zero, ``taylor_approx`` builds the Taylor
polynomial P of degree k-1 for v(theta) = e^theta (l_sigma(theta) -
l_sigma(0)), so that e^(-theta) P(theta) approximates
l_sigma(theta) - l_sigma(0) on [0, theta_star].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from ._validation import check_scalar
from .exceptions import NumericalError

_HERMITE_MAX_ORDER = 60
_DERIVATIVE_MAX_ORDER = 40
_QUAD_RANGE_SIGMAS = 10.0
_QUAD_ABS_TOL = 1e-10


def hermite_he(x: int, t):
    """Probabilists' Hermite polynomial He_x(t), by the three-term recurrence."""
    if x < 0:
        raise ValueError("order must be nonnegative")
    if x > _HERMITE_MAX_ORDER:
        raise ValueError(f"order {x} above supported cap {_HERMITE_MAX_ORDER}")
    t = np.asarray(t, dtype=float)
    h_prev = np.ones_like(t)
    if x == 0:
        return h_prev if t.ndim else float(h_prev)
    h = t.copy()
    for n in range(1, x):
        h, h_prev = t * h - n * h_prev, h
    return h if t.ndim else float(h)


@dataclass(frozen=True)
class LipschitzTestFn:
    """A 1-Lipschitz test function with l(0) = 0.

    ``smoothed`` optionally provides a closed form for l * N(0, sigma^2)
    as a callable (sigma, theta) -> value, used to cross-check the
    quadrature and to evaluate cheaply on dense grids.
    """

    name: str
    fn: Callable[[float], float]
    smoothed: Optional[Callable[[float, float], float]] = None


def identity_fn() -> LipschitzTestFn:
    return LipschitzTestFn("identity", lambda t: t,
                           smoothed=lambda sigma, theta: theta)


def shifted_abs_fn(m: float) -> LipschitzTestFn:
    """l(theta) = |theta - m| - m; the shift keeps l(0) = 0."""

    def fn(t):
        return abs(t - m) - m

    def smoothed(sigma, theta):
        d = theta - m
        z = d / sigma
        phi = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        cdf = 0.5 * math.erfc(-z / math.sqrt(2.0))
        return d * (2.0 * cdf - 1.0) + 2.0 * sigma * phi - m

    return LipschitzTestFn(f"shifted_abs_{m:g}", fn, smoothed=smoothed)


def default_test_functions(theta_star: float):
    """The fixed pair used by the verification studies."""
    return identity_fn(), shifted_abs_fn(theta_star / 2.0)


def _kink_points(f: LipschitzTestFn, sigma: float, theta: float):
    # |theta - m| - m has a kink at s = theta - m in the convolution variable
    if f.name.startswith("shifted_abs_"):
        m = float(f.name.split("_")[-1])
        kink = theta - m
        if abs(kink) < _QUAD_RANGE_SIGMAS * sigma:
            return [kink]
    return []


def smoothed_value(f: LipschitzTestFn, sigma: float, theta: float) -> float:
    """l_sigma(theta) by quadrature over [-10 sigma, 10 sigma]."""
    sigma = check_scalar(sigma, "sigma", positive=True)
    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))

    def integrand(s):
        return f.fn(theta - s) * norm * math.exp(-0.5 * (s / sigma) ** 2)

    lim = _QUAD_RANGE_SIGMAS * sigma
    val, err = quad(integrand, -lim, lim, epsabs=_QUAD_ABS_TOL, epsrel=1e-12,
                    limit=300, points=_kink_points(f, sigma, theta))
    if not math.isfinite(val) or err > 1e-6:
        raise NumericalError(f"smoothing quadrature failed (err={err})")
    return float(val)


def smoothed_derivative(f: LipschitzTestFn, sigma: float, x: int,
                        theta: float) -> float:
    """x-th derivative of l_sigma at theta (signed value).

    Order zero reproduces ``smoothed_value``.  The magnitude obeys
    ``sigma^-x sqrt(x!) sqrt(theta^2 + sigma^2)``.
    """
    sigma = check_scalar(sigma, "sigma", positive=True)
    if x < 0:
        raise ValueError("derivative order must be nonnegative")
    if x > _DERIVATIVE_MAX_ORDER:
        raise ValueError(
            f"derivative order {x} above supported cap {_DERIVATIVE_MAX_ORDER}")
    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    sign = -1.0 if x % 2 else 1.0

    def integrand(s):
        he = hermite_he(x, s / sigma)
        return f.fn(theta - s) * he * norm * math.exp(-0.5 * (s / sigma) ** 2)

    lim = _QUAD_RANGE_SIGMAS * sigma
    val, err = quad(integrand, -lim, lim, epsabs=_QUAD_ABS_TOL, epsrel=1e-12,
                    limit=300, points=_kink_points(f, sigma, theta))
    if not math.isfinite(val):
        raise NumericalError("derivative quadrature diverged")
    return float(sign * sigma ** (-x) * val)


@dataclass(frozen=True)
class TaylorApprox:
    """Degree-(k-1) polynomial approximation of l_sigma - l_sigma(0).

    ``coefficients[j]`` is c_j in P(theta) = sum c_j theta^j, with
    b_j = j! c_j the matching kernel-series coefficients;
    ``sup_error`` is max over a theta-grid of
    |l_sigma(theta) - l_sigma(0) - e^(-theta) P(theta)|.
    """

    sigma: float
    degree: int
    coefficients: np.ndarray
    b: np.ndarray
    sup_error: float

    def polynomial(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.polynomial.polynomial.polyval(theta, self.coefficients)


def taylor_approx(f: LipschitzTestFn, sigma: float, k: int,
                  theta_star: float, grid_points: int = 1000) -> TaylorApprox:
    """Build the Taylor polynomial of v(theta) = e^theta (l_sigma - l_sigma(0)).

    v's derivatives at zero come from the Leibniz rule over the smoothed
    derivatives; c_j = v^(j)(0) / j!.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    sigma = check_scalar(sigma, "sigma", positive=True)
    theta_star = check_scalar(theta_star, "theta_star", positive=True)

    derivs = np.array([smoothed_derivative(f, sigma, x, 0.0) for x in range(k)])
    ell0 = derivs[0]
    coeffs = np.empty(k)
    for j in range(k):
        vj = sum(math.comb(j, x) * derivs[x] for x in range(j + 1)) - ell0
        coeffs[j] = vj / math.factorial(j)
    b = coeffs * np.array([math.factorial(j) for j in range(k)])

    thetas = np.linspace(0.0, theta_star, grid_points)
    if f.smoothed is not None:
        smooth_vals = np.array([f.smoothed(sigma, t) for t in thetas])
        smooth0 = f.smoothed(sigma, 0.0)
    else:
        smooth_vals = np.array([smoothed_value(f, sigma, t) for t in thetas])
        smooth0 = smoothed_value(f, sigma, 0.0)
    approx = np.exp(-thetas) * np.polynomial.polynomial.polyval(thetas, coeffs)
    sup_error = float(np.max(np.abs(smooth_vals - smooth0 - approx)))
    return TaylorApprox(sigma, k - 1, coeffs, b, sup_error)


def coefficient_shape_ratio(approx: TaylorApprox) -> float:
    """max_x |c_x| x! / ((x+1)^(1/2) 2^x (1 + (x / (e sigma^2))^(x/2))).

    The numerator growth is what the coefficient bound permits up to an
    instance constant; the max ratio is that constant's empirical value.
    """
    sigma2 = approx.sigma ** 2
    best = 0.0
    for x, c in enumerate(approx.coefficients):
        denom = (math.sqrt(x + 1) * 2.0 ** x
                 * (1.0 + (x / (math.e * sigma2)) ** (x / 2.0)))
        ratio = abs(c) * math.factorial(x) / denom
        best = max(best, ratio)
    return best


def sup_error_bound_factor(k: int, sigma: float, theta_star: float) -> float:
    """(k+1)^(1/2) (2 theta_star)^k (1 + (k / (e sigma^2))^(k/2)) / k!."""
    return (math.sqrt(k + 1) * (2.0 * theta_star) ** k
            * (1.0 + (k / (math.e * sigma ** 2)) ** (k / 2.0))
            / math.factorial(k))
