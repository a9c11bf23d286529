"""Client-side input preparation and the aggregator's clamp rule."""

from __future__ import annotations

import numbers
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .freq_mech import FrequencyEstimate


@dataclass(frozen=True)
class JointDomain:
    """Domain of (feature value, class label) pairs for one feature."""

    n_values: int
    n_classes: int

    def __post_init__(self):
        if self.n_values < 1:
            raise InvalidInputError("feature cardinality must be >= 1")
        if self.n_classes < 2:
            raise InvalidInputError("need at least 2 classes")

    @property
    def size(self) -> int:
        return self.n_values * self.n_classes

    def to_dict(self):
        return {"n_values": self.n_values, "n_classes": self.n_classes}


def _is_int(x):
    return isinstance(x, numbers.Integral) and not isinstance(x, bool)


def encode_joint(a, v, domain: JointDomain):
    """Map feature value ``a`` and class ``v`` (both 1-based) to ``(a-1)*k + v``.

    Accepts scalars or equal-length integer arrays.
    """
    k = domain.n_classes
    if np.ndim(a) == 0 and np.ndim(v) == 0:
        if not (_is_int(a) and _is_int(v)) or not (1 <= a <= domain.n_values and 1 <= v <= k):
            raise InvalidInputError(f"({a!r}, {v!r}) outside [1,{domain.n_values}]x[1,{k}]")
        return (int(a) - 1) * k + int(v)
    a = np.asarray(a)
    v = np.asarray(v)
    if (a.min(initial=1) < 1 or a.max(initial=1) > domain.n_values
            or v.min(initial=1) < 1 or v.max(initial=1) > k):
        raise InvalidInputError("feature or class index out of range")
    return (a.astype(np.int64) - 1) * k + v


def decode_joint(e: int, domain: JointDomain) -> tuple[int, int]:
    if not _is_int(e) or not 1 <= e <= domain.size:
        raise InvalidInputError(f"joint index {e!r} outside [1, {domain.size}]")
    a, r = divmod(int(e) - 1, domain.n_classes)
    return a + 1, r + 1


@dataclass(frozen=True)
class Binning:
    """Equal-width bins over ``[lo, hi]``.

    Bins are left-closed and right-open except the last, which also contains
    ``hi``.  Values outside the range fall into the edge bins.
    """

    lo: float
    hi: float
    n_bins: int

    def __post_init__(self):
        if not self.hi > self.lo:
            raise InvalidInputError(f"binning needs max > min, got [{self.lo}, {self.hi}]")
        if self.n_bins < 2:
            raise InvalidInputError("binning needs at least 2 bins")

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.n_bins

    @property
    def edges(self) -> np.ndarray:
        return self.lo + self.width * np.arange(self.n_bins + 1)

    def to_dict(self):
        return {"min": self.lo, "max": self.hi, "n_bins": self.n_bins}


def discretize(x, binning: Binning):
    """1-based bin index of ``x`` (scalar or array)."""
    idx = np.floor((np.asarray(x, dtype=float) - binning.lo) / binning.width).astype(np.int64) + 1
    idx = np.clip(idx, 1, binning.n_bins)
    return int(idx) if idx.ndim == 0 else idx


def clamp_estimates(est: FrequencyEstimate) -> FrequencyEstimate:
    """Replace every non-positive estimated count with 1."""
    counts = np.where(est.counts > 0, est.counts, 1.0)
    return FrequencyEstimate(counts, est.m)
