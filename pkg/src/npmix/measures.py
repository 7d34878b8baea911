"""Finite discrete probability measures on [0, theta_star] and empirical PMFs.

``AtomicMeasure`` stores a finite list of (location, weight) atoms with
weights summing to one; it is the representation used both for candidate
mixing distributions during optimization and for fitted results.
``EmpiricalPmf`` holds the distinct values, counts and relative
frequencies of an integer sample.

Both types are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._validation import check_count_samples, check_scalar
from .exceptions import DegenerateMeasureError

DEFAULT_MERGE_RADIUS = 1e-8
DEFAULT_PRUNE_EPS = 1e-12


@dataclass(frozen=True)
class AtomicMeasure:
    """A finite atomic probability measure on ``[0, theta_star]``.

    Locations must be strictly increasing and inside ``[0, theta_star]``;
    weights must be positive.  Weights are normalized to sum to one at
    construction time, and the stored arrays are marked read-only.
    """

    locations: np.ndarray
    weights: np.ndarray
    theta_star: float

    def __post_init__(self):
        locs = np.atleast_1d(np.asarray(self.locations, dtype=float))
        wts = np.atleast_1d(np.asarray(self.weights, dtype=float))
        ts = check_scalar(self.theta_star, "theta_star", positive=True)
        if locs.ndim != 1 or wts.ndim != 1 or locs.shape != wts.shape:
            raise ValueError("locations and weights must be 1-D arrays of equal length")
        if locs.size == 0:
            raise DegenerateMeasureError("measure must have at least one atom")
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(wts))):
            raise ValueError("locations and weights must be finite")
        if np.any(np.diff(locs) <= 0):
            raise ValueError("locations must be strictly increasing")
        if locs[0] < 0.0 or locs[-1] > ts:
            raise ValueError(f"locations must lie in [0, {ts}]")
        if np.any(wts <= 0):
            raise ValueError("weights must be strictly positive")
        total = wts.sum()
        if total <= 0:
            raise DegenerateMeasureError("total weight must be positive")
        wts = wts / total
        cum = np.cumsum(wts)
        cum[-1] = 1.0
        locs.flags.writeable = False
        wts.flags.writeable = False
        cum.flags.writeable = False
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "theta_star", ts)
        object.__setattr__(self, "_cumweights", cum)

    # -- constructors ------------------------------------------------------

    @classmethod
    def point_mass(cls, location: float, theta_star: float) -> "AtomicMeasure":
        return cls(np.array([location]), np.array([1.0]), theta_star)

    @classmethod
    def from_raw(cls, locations, weights, theta_star: float,
                 merge_radius: float = DEFAULT_MERGE_RADIUS,
                 prune_eps: float = DEFAULT_PRUNE_EPS) -> "AtomicMeasure":
        """Build a canonical measure from raw, possibly unnormalized atoms.

        Weights may be zero (dropped); atom order is arbitrary.  Atoms
        within ``merge_radius`` of each other are merged at their
        weight-weighted mean location, then weights below ``prune_eps``
        (after normalization) are dropped and the rest renormalized.
        """
        locs = np.atleast_1d(np.asarray(locations, dtype=float))
        wts = np.atleast_1d(np.asarray(weights, dtype=float))
        ts = check_scalar(theta_star, "theta_star", positive=True)
        if locs.shape != wts.shape:
            raise ValueError("locations and weights must have equal length")
        if np.any(wts < 0):
            raise ValueError("weights must be nonnegative")
        keep = wts > 0
        locs, wts = locs[keep], wts[keep]
        if locs.size == 0 or wts.sum() <= 0:
            raise DegenerateMeasureError("no atom carries positive weight")
        order = np.argsort(locs, kind="stable")
        locs, wts = locs[order], wts[order]
        locs, wts = _merge_atoms(locs, wts, merge_radius)
        locs, wts = _prune_atoms(locs, wts, prune_eps)
        locs = np.clip(locs, 0.0, ts)
        return cls(locs, wts, ts)

    # -- queries -----------------------------------------------------------

    @property
    def n_atoms(self) -> int:
        return int(self.locations.size)

    def cdf(self, t):
        """Right-continuous CDF, evaluated at scalar or array ``t``."""
        idx = np.searchsorted(self.locations, t, side="right")
        cum = np.concatenate(([0.0], self._cumweights))
        out = cum[idx]
        return float(out) if np.isscalar(t) else out

    def mean(self) -> float:
        return float(self.weights @ self.locations)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        atoms = [[float(l), float(w)] for l, w in zip(self.locations, self.weights)]
        return json.dumps({"theta_star": self.theta_star, "atoms": atoms})

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def from_json(cls, text: str) -> "AtomicMeasure":
        obj = json.loads(text)
        atoms = np.asarray(obj["atoms"], dtype=float).reshape(-1, 2)
        return cls(atoms[:, 0], atoms[:, 1], float(obj["theta_star"]))

    @classmethod
    def load(cls, path) -> "AtomicMeasure":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def __repr__(self) -> str:
        return (f"AtomicMeasure(n_atoms={self.n_atoms}, "
                f"theta_star={self.theta_star})")


def canonicalize(measure: AtomicMeasure,
                 merge_radius: float = DEFAULT_MERGE_RADIUS,
                 prune_eps: float = DEFAULT_PRUNE_EPS) -> AtomicMeasure:
    """Merge nearby atoms, drop tiny weights and renormalize.

    Idempotent: applying it twice with the same thresholds gives the
    same measure.  Raises ``DegenerateMeasureError`` if pruning removes
    every atom.
    """
    return AtomicMeasure.from_raw(measure.locations, measure.weights,
                                  measure.theta_star, merge_radius, prune_eps)


def _merge_atoms(locs: np.ndarray, wts: np.ndarray, radius: float):
    """Merge sorted atoms whose locations fall within ``radius``.

    Clusters are merged at the weight-weighted mean; passes repeat until
    stable so the operation is idempotent even when merged means drift
    within ``radius`` of a neighbour.
    """
    if radius < 0:
        raise ValueError("merge_radius must be >= 0")
    while True:
        if locs.size <= 1:
            return locs, wts
        new_locs = [locs[0]]
        new_wts = [wts[0]]
        merged_any = False
        for loc, w in zip(locs[1:], wts[1:]):
            if loc - new_locs[-1] <= radius:
                tot = new_wts[-1] + w
                new_locs[-1] = (new_wts[-1] * new_locs[-1] + w * loc) / tot
                new_wts[-1] = tot
                merged_any = True
            else:
                new_locs.append(loc)
                new_wts.append(w)
        locs = np.asarray(new_locs)
        wts = np.asarray(new_wts)
        if not merged_any:
            return locs, wts


def _prune_atoms(locs: np.ndarray, wts: np.ndarray, prune_eps: float):
    """Drop weights below ``prune_eps`` after normalization, repeatedly."""
    if prune_eps < 0:
        raise ValueError("prune_eps must be >= 0")
    while True:
        total = wts.sum()
        if total <= 0 or locs.size == 0:
            raise DegenerateMeasureError("pruning removed all atoms")
        wts = wts / total
        keep = wts >= prune_eps
        if keep.all():
            return locs, wts
        if not keep.any():
            raise DegenerateMeasureError("pruning removed all atoms")
        locs, wts = locs[keep], wts[keep]


@dataclass(frozen=True)
class EmpiricalPmf:
    """Distinct values, counts and frequencies of an integer sample."""

    values: np.ndarray
    counts: np.ndarray
    n: int

    def __post_init__(self):
        vals = np.atleast_1d(np.asarray(self.values, dtype=np.int64))
        cnts = np.atleast_1d(np.asarray(self.counts, dtype=np.int64))
        if vals.shape != cnts.shape or vals.ndim != 1 or vals.size == 0:
            raise ValueError("values and counts must be nonempty 1-D arrays of equal length")
        if np.any(np.diff(vals) <= 0):
            raise ValueError("values must be strictly increasing")
        if np.any(vals < 0):
            raise ValueError("values must be nonnegative")
        if np.any(cnts <= 0):
            raise ValueError("counts must be positive")
        if int(cnts.sum()) != int(self.n):
            raise ValueError("counts must sum to n")
        freqs = cnts / float(self.n)
        vals.flags.writeable = False
        cnts.flags.writeable = False
        freqs.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "counts", cnts)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "_freqs", freqs)

    @property
    def freqs(self) -> np.ndarray:
        """Relative frequencies ``counts / n``."""
        return self._freqs

    @property
    def n_distinct(self) -> int:
        return int(self.values.size)

    @classmethod
    def from_samples(cls, samples: Iterable[int]) -> "EmpiricalPmf":
        arr = check_count_samples(samples)
        vals, cnts = np.unique(arr, return_counts=True)
        return cls(vals, cnts, int(arr.size))

    def freq_of(self, value: int) -> float:
        idx = np.searchsorted(self.values, value)
        if idx < self.values.size and self.values[idx] == value:
            return float(self._freqs[idx])
        return 0.0

    # -- CSV round trip (columns: value,count) ------------------------------

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("value,count\n")
            for v, c in zip(self.values, self.counts):
                fh.write(f"{int(v)},{int(c)}\n")

    @classmethod
    def from_csv(cls, path) -> "EmpiricalPmf":
        vals, cnts = [], []
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header.lower() != "value,count":
                raise ValueError(f"expected header 'value,count', got {header!r}")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                v, c = line.split(",")
                vals.append(int(v))
                cnts.append(int(c))
        if not vals:
            raise ValueError("empty input: no rows in CSV")
        return cls(np.asarray(vals), np.asarray(cnts), int(np.sum(cnts)))

    def __repr__(self) -> str:
        return f"EmpiricalPmf(n={self.n}, n_distinct={self.n_distinct})"
