"""Discrete exponential-family kernels f(x; theta) = g(theta) w(x) theta^x.

The built-in families are Poisson (g = exp(-theta), w = 1/x!) and
Geometric (g = 1 - theta, w = 1); arbitrary members of the family can be
supplied via ``KernelSpec.custom``.  All PMF values are computed in log
space so large observation values do not overflow, with the convention
0^0 = 1 so a point mass at zero behaves as the theta -> 0 limit.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from ._validation import check_scalar
from .exceptions import ConfigurationError
from .measures import AtomicMeasure

_ENVELOPE_MAX_TERMS = 10 ** 6
_GMAX_PROBE_POINTS = 1001

# numba dispatch codes for the built-in families
KERNEL_CODE_POISSON = 0
KERNEL_CODE_GEOMETRIC = 1


class KernelSpec:
    """A kernel family together with its parameter bound ``theta_star``.

    ``theta_star`` must be strictly below ``theta_c``, the radius of
    convergence of ``sum_x w(x) theta^x`` (infinite for Poisson, 1 for
    Geometric).  Custom kernels must supply ``theta_c`` explicitly; the
    library does not estimate radii of convergence.
    """

    def __init__(self, family: str, theta_star: float, theta_c: float,
                 g: Optional[Callable[[float], float]] = None,
                 w: Optional[Callable[[int], float]] = None):
        self.family = family
        self.theta_star = check_scalar(theta_star, "theta_star", positive=True)
        self.theta_c = float(theta_c)
        if not self.theta_star < self.theta_c:
            raise ConfigurationError(
                f"theta_star={self.theta_star} must be < theta_c={self.theta_c}")
        self._g = g
        self._w = w
        if family == "poisson":
            self._code = KERNEL_CODE_POISSON
        elif family == "geometric":
            self._code = KERNEL_CODE_GEOMETRIC
        elif family == "custom":
            self._code = None
            if g is None or w is None:
                raise ConfigurationError("custom kernels need g and w evaluators")
            self._validate_custom()
        else:
            raise ConfigurationError(f"unknown kernel family {family!r}")

    # -- constructors --------------------------------------------------------

    @classmethod
    def poisson(cls, theta_star: float) -> "KernelSpec":
        return cls("poisson", theta_star, math.inf)

    @classmethod
    def geometric(cls, theta_star: float) -> "KernelSpec":
        return cls("geometric", theta_star, 1.0)

    @classmethod
    def custom(cls, g: Callable[[float], float], w: Callable[[int], float],
               theta_star: float, theta_c: float) -> "KernelSpec":
        return cls("custom", theta_star, theta_c, g=g, w=w)

    @classmethod
    def by_name(cls, name: str, theta_star: float) -> "KernelSpec":
        if name == "poisson":
            return cls.poisson(theta_star)
        if name == "geometric":
            return cls.geometric(theta_star)
        raise ConfigurationError(f"unknown kernel name {name!r}")

    def _validate_custom(self) -> None:
        # f must define a PMF: check truncated normalization on a theta probe.
        trunc = self.truncation_index(1e-12)
        xs = np.arange(trunc + 1)
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            theta = frac * self.theta_star
            total = float(np.sum(self.pmf(xs, theta)))
            if abs(total - 1.0) > 1e-10:
                raise ConfigurationError(
                    f"custom kernel does not normalize at theta={theta}: "
                    f"truncated sum {total!r}")

    # -- PMF evaluation -------------------------------------------------------

    def _check_theta(self, theta: float) -> float:
        theta = float(theta)
        if not 0.0 <= theta <= self.theta_star:
            raise ValueError(
                f"theta={theta} outside [0, {self.theta_star}]")
        return theta

    def pmf(self, x, theta: float):
        """PMF f(x; theta) for integer ``x`` (scalar or array)."""
        theta = self._check_theta(theta)
        xs = np.atleast_1d(np.asarray(x))
        if np.any(xs < 0):
            raise ValueError("x must be nonnegative")
        out = self._pmf_vector(xs.astype(np.int64), theta)
        return float(out[0]) if np.isscalar(x) or np.ndim(x) == 0 else out

    def _pmf_vector(self, xs: np.ndarray, theta: float) -> np.ndarray:
        if theta == 0.0:
            if self.family == "custom":
                base = float(self._g(0.0) * self._w(0))
            else:
                base = 1.0
            return np.where(xs == 0, base, 0.0)
        logt = math.log(theta)
        if self.family == "poisson":
            logp = -theta + xs * logt - gammaln(xs + 1.0)
        elif self.family == "geometric":
            logp = math.log1p(-theta) + xs * logt
        else:
            g = float(self._g(theta))
            if g <= 0:
                raise ValueError(f"g(theta) must be positive, got {g} at theta={theta}")
            wvals = np.asarray([float(self._w(int(v))) for v in xs])
            if np.any(wvals <= 0):
                raise ValueError("w(x) must be positive on evaluated support")
            logp = math.log(g) + np.log(wvals) + xs * logt
        return np.exp(logp)

    def pmf_grid(self, xs, thetas) -> np.ndarray:
        """Matrix ``P[t, j] = f(xs[j]; thetas[t])``."""
        xs = np.atleast_1d(np.asarray(xs)).astype(np.int64)
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        if np.any(thetas < 0) or np.any(thetas > self.theta_star):
            raise ValueError("thetas outside [0, theta_star]")
        if self.family == "custom":
            return np.vstack([self._pmf_vector(xs, float(t)) for t in thetas])
        xsf = xs.astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            logt = np.log(thetas)[:, None]
            if self.family == "poisson":
                logp = -thetas[:, None] + xsf[None, :] * logt - gammaln(xsf + 1.0)[None, :]
            else:
                logp = np.log1p(-thetas)[:, None] + xsf[None, :] * logt
        P = np.exp(logp)
        zero = thetas == 0.0
        if zero.any():
            P[zero, :] = 0.0
            P[np.ix_(zero, xs == 0)] = 1.0
        return P

    def mixture_pmf(self, G: AtomicMeasure, x):
        """Mixture PMF ``sum_j weight_j f(x; location_j)``."""
        xs = np.atleast_1d(np.asarray(x)).astype(np.int64)
        P = self.pmf_grid(xs, G.locations)
        out = G.weights @ P
        return float(out[0]) if np.isscalar(x) or np.ndim(x) == 0 else out

    # -- truncation ------------------------------------------------------------

    def envelope_term(self, x: int) -> float:
        """Upper envelope for f(x; theta) over theta in [0, theta_star]."""
        ts = self.theta_star
        if self.family == "poisson":
            return math.exp(x * math.log(ts) - math.lgamma(x + 1)) if x > 0 else 1.0
        if self.family == "geometric":
            return ts ** x
        gmax = self._custom_gmax()
        return gmax * float(self._w(int(x))) * ts ** x

    def _custom_gmax(self) -> float:
        if not hasattr(self, "_gmax_cache"):
            probe = np.linspace(0.0, self.theta_star, _GMAX_PROBE_POINTS)
            self._gmax_cache = max(float(self._g(float(t))) for t in probe)
        return self._gmax_cache

    def truncation_index(self, tol: float) -> int:
        """Smallest X with envelope tail ``sum_{x > X} <= tol``.

        Raises ``ConfigurationError`` if the envelope series has not
        dropped below ``tol`` within 10^6 terms.
        """
        tol = check_scalar(tol, "tol", positive=True)
        terms = [self.envelope_term(0)]
        x = 0
        # extend the table until terms are decreasing and negligible
        while True:
            x += 1
            if x > _ENVELOPE_MAX_TERMS:
                raise ConfigurationError(
                    f"envelope tail did not fall below {tol} within "
                    f"{_ENVELOPE_MAX_TERMS} terms")
            t = self.envelope_term(x)
            terms.append(t)
            if x > self.theta_star and t < terms[-2] and t < tol * 1e-6:
                break
        arr = np.asarray(terms)
        # bound on the neglected remainder via the last decay ratio
        ratio = arr[-1] / arr[-2]
        remainder = arr[-1] * ratio / (1.0 - ratio) if ratio < 1.0 else math.inf
        # suffix sums from the small end avoid cancellation
        suffix = np.cumsum(arr[::-1])[::-1]
        tails = np.append(suffix[1:], 0.0) + remainder
        qualifying = np.nonzero(tails <= tol)[0]
        if qualifying.size == 0:
            raise ConfigurationError(
                f"envelope tail did not fall below {tol} within table")
        return int(qualifying[0])

    def __repr__(self) -> str:
        return f"KernelSpec({self.family!r}, theta_star={self.theta_star})"
