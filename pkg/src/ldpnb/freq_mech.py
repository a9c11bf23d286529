"""Categorical frequency oracles: DE, SUE, OUE, SHE and THE.

Each protocol is an encode/perturb/aggregate triple over the value domain
``{1, ..., d}``.  Client-side functions produce one report per call; the
``*_many`` variants simulate many individuals at once (still one report per
individual) and return the reports stacked along the first axis.

Aggregation returns unbiased count estimates ``E_i = (c_i - m*q) / (p - q)``
(plain component sums for SHE).  Estimates may be negative; clamping is left
to the caller.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    EmptyInputError,
    InconsistentReportsError,
    InvalidDomainError,
    InvalidInputError,
)
from .privacy import PrivacyParams, laplace_noise


class Mechanism(str, Enum):
    DE = "DE"
    SUE = "SUE"
    OUE = "OUE"
    SHE = "SHE"
    THE = "THE"

    @classmethod
    def parse(cls, name) -> "Mechanism":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).upper())
        except ValueError:
            raise InvalidInputError(f"unknown mechanism {name!r}") from None


UNARY = (Mechanism.SUE, Mechanism.OUE)
HISTOGRAM = (Mechanism.SHE, Mechanism.THE)


@dataclass(frozen=True)
class FrequencyEstimate:
    """Estimated per-value counts ``E_1..E_d`` from ``m`` reports."""

    counts: np.ndarray
    m: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != 1:
            raise InvalidInputError("counts must be a 1-D vector")
        if self.m < 0:
            raise InvalidInputError("m must be >= 0")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def d(self) -> int:
        return len(self.counts)


def _check_domain(d):
    if not isinstance(d, numbers.Integral) or d < 2:
        raise InvalidDomainError(f"domain size must be an integer >= 2, got {d!r}")


def _check_value(v, d):
    if isinstance(v, bool) or not isinstance(v, numbers.Integral) or not 1 <= v <= d:
        raise InvalidInputError(f"value {v!r} outside domain [1, {d}]")


def _check_values(values, d) -> np.ndarray:
    values = np.asarray(values)
    if values.ndim != 1:
        raise InvalidInputError("expected a 1-D array of values")
    if values.size and (not np.issubdtype(values.dtype, np.integer)
                        or values.min() < 1 or values.max() > d):
        raise InvalidInputError(f"values outside domain [1, {d}]")
    return values.astype(np.int64, copy=False)


# -- perturbation parameters -------------------------------------------------

def de_params(params: PrivacyParams, d: int) -> tuple[float, float]:
    """Keep probability ``p`` and per-alternative probability ``q`` for DE."""
    _check_domain(d)
    # written with exp(-eps) so that eps -> inf gives (1, 0) without overflow
    t = math.exp(-params.epsilon)
    p = 1.0 / (1.0 + (d - 1) * t)
    q = t / (1.0 + (d - 1) * t)
    return p, q


def ue_params(params: PrivacyParams, kind) -> tuple[float, float]:
    kind = Mechanism.parse(kind)
    eps = params.epsilon
    if kind is Mechanism.SUE:
        t = math.exp(-eps / 2.0)
        return 1.0 / (1.0 + t), t / (1.0 + t)
    if kind is Mechanism.OUE:
        t = math.exp(-eps)
        return 0.5, t / (1.0 + t)
    raise InvalidInputError(f"{kind.value} is not a unary encoding")


def the_params(params: PrivacyParams) -> tuple[float, float]:
    """Probabilities that a noisy 1 (``p``) or a noisy 0 (``q``) exceeds theta.

    With Laplace scale ``b = 2/eps`` and ``0 < theta < 1``:
    ``Pr[1 + Lap(b) > theta] = 1 - exp((theta - 1)/b) / 2`` and
    ``Pr[Lap(b) > theta] = exp(-theta/b) / 2``.
    """
    half = params.epsilon / 2.0
    theta = params.theta
    p = 1.0 - 0.5 * math.exp(half * (theta - 1.0))
    q = 0.5 * math.exp(-half * theta)
    return p, q


def mechanism_params(kind, params: PrivacyParams, d: int) -> tuple[float, float] | None:
    """``(p, q)`` used by the debiasing step, or ``None`` for SHE."""
    kind = Mechanism.parse(kind)
    if kind is Mechanism.DE:
        return de_params(params, d)
    if kind in UNARY:
        return ue_params(params, kind)
    if kind is Mechanism.THE:
        return the_params(params)
    return None


# -- client side ---------------------------------------------------------------

def de_perturb(v: int, params: PrivacyParams, d: int, rng: np.random.Generator) -> int:
    _check_domain(d)
    _check_value(v, d)
    p, _ = de_params(params, d)
    if rng.random() < p:
        return int(v)
    # uniform over the d-1 other values
    w = int(rng.integers(1, d))
    return w + 1 if w >= v else w


def de_perturb_many(values, params: PrivacyParams, d: int, rng: np.random.Generator) -> np.ndarray:
    _check_domain(d)
    values = _check_values(values, d)
    p, _ = de_params(params, d)
    keep = rng.random(values.shape) < p
    other = rng.integers(1, d, size=values.shape)
    other = other + (other >= values)
    return np.where(keep, values, other)


def ue_perturb(v: int, params: PrivacyParams, d: int, kind, rng: np.random.Generator) -> np.ndarray:
    _check_domain(d)
    _check_value(v, d)
    return ue_perturb_many(np.array([v]), params, d, kind, rng)[0]


def ue_perturb_many(values, params: PrivacyParams, d: int, kind, rng: np.random.Generator) -> np.ndarray:
    _check_domain(d)
    values = _check_values(values, d)
    p, q = ue_params(params, kind)
    m = len(values)
    bits = rng.random((m, d)) < q
    rows = np.arange(m)
    bits[rows, values - 1] = rng.random(m) < p
    return bits.astype(np.uint8)


def he_perturb(v: int, params: PrivacyParams, d: int, rng: np.random.Generator) -> np.ndarray:
    _check_domain(d)
    _check_value(v, d)
    return he_perturb_many(np.array([v]), params, d, rng)[0]


def he_perturb_many(values, params: PrivacyParams, d: int, rng: np.random.Generator) -> np.ndarray:
    _check_domain(d)
    values = _check_values(values, d)
    m = len(values)
    out = laplace_noise(2.0 / params.epsilon, rng, size=(m, d))
    out[np.arange(m), values - 1] += 1.0
    return out


def perturb(v: int, params: PrivacyParams, d: int, kind, rng: np.random.Generator):
    kind = Mechanism.parse(kind)
    if kind is Mechanism.DE:
        return de_perturb(v, params, d, rng)
    if kind in UNARY:
        return ue_perturb(v, params, d, kind, rng)
    return he_perturb(v, params, d, rng)


def perturb_many(values, params: PrivacyParams, d: int, kind, rng: np.random.Generator) -> np.ndarray:
    kind = Mechanism.parse(kind)
    if kind is Mechanism.DE:
        return de_perturb_many(values, params, d, rng)
    if kind in UNARY:
        return ue_perturb_many(values, params, d, kind, rng)
    return he_perturb_many(values, params, d, rng)


# -- aggregator side -------------------------------------------------------------

def _stack(reports, ndim):
    if isinstance(reports, np.ndarray):
        arr = reports
    else:
        reports = list(reports)
        if not reports:
            raise EmptyInputError("no reports to aggregate")
        try:
            arr = np.asarray(reports)
        except ValueError as exc:
            raise InconsistentReportsError(f"reports have mixed shapes: {exc}") from None
    if arr.ndim != ndim or arr.dtype == object:
        raise InconsistentReportsError(
            f"expected reports stacked to {ndim} dimension(s), got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise EmptyInputError("no reports to aggregate")
    return arr


def aggregate(reports, params: PrivacyParams, d: int, kind) -> FrequencyEstimate:
    """Estimate how many reporters hold each value in ``{1..d}``."""
    kind = Mechanism.parse(kind)
    _check_domain(d)
    if kind is Mechanism.DE:
        arr = _stack(reports, 1)
        if not np.issubdtype(arr.dtype, np.integer):
            raise InconsistentReportsError("DE reports must be integer indices")
        if arr.min() < 1 or arr.max() > d:
            raise InvalidInputError(f"DE report outside domain [1, {d}]")
        c = np.bincount(arr - 1, minlength=d).astype(float)
    else:
        arr = _stack(reports, 2)
        if arr.shape[1] != d:
            raise InconsistentReportsError(f"report length {arr.shape[1]} != domain size {d}")
        if kind is Mechanism.SHE:
            return FrequencyEstimate(arr.sum(axis=0, dtype=float), len(arr))
        if kind is Mechanism.THE:
            c = (arr > params.theta).sum(axis=0).astype(float)
        else:
            c = arr.sum(axis=0, dtype=float)
    m = len(arr)
    p, q = mechanism_params(kind, params, d)
    return FrequencyEstimate((c - m * q) / (p - q), m)


@dataclass(frozen=True)
class FrequencyOracle:
    """One configured protocol: mechanism kind, budget and domain size."""

    kind: Mechanism
    params: PrivacyParams
    d: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Mechanism.parse(self.kind))
        _check_domain(self.d)

    @property
    def pq(self):
        return mechanism_params(self.kind, self.params, self.d)

    def perturb(self, v, rng):
        return perturb(v, self.params, self.d, self.kind, rng)

    def perturb_many(self, values, rng):
        return perturb_many(values, self.params, self.d, self.kind, rng)

    def aggregate(self, reports) -> FrequencyEstimate:
        return aggregate(reports, self.params, self.d, self.kind)

    def collect(self, values, rng) -> FrequencyEstimate:
        """Perturb every value and aggregate; zero reports give all-zero counts."""
        values = np.asarray(values, dtype=np.int64)
        if values.size == 0:
            return FrequencyEstimate(np.zeros(self.d), 0)
        return self.aggregate(self.perturb_many(values, rng))
