"""Laplace-based reporting of values normalized to [-1, 1].

Covers single-value perturbation, the one-bit report for n-dimensional
vectors, class-masked vectors that hide the reporter's label, and the
aggregator-side mean and per-class moment estimators.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegeneratePriorError, EmptyInputError, InvalidInputError, NormalizationError
from .privacy import PrivacyParams, laplace_noise

VARIANCE_FLOOR = 1e-4


class MomentTarget(str, Enum):
    VALUE = "value"
    SQUARE = "square"


def _check_range(v, lo=-1.0, hi=1.0):
    arr = np.asarray(v, dtype=float)
    if arr.size and (np.isnan(arr).any() or arr.min() < lo or arr.max() > hi):
        raise NormalizationError(f"values must lie in [{lo}, {hi}]")
    return arr


def laplace_perturb(v, params: PrivacyParams, scale_multiplier: float = 1.0, rng=None):
    """``v + Lap(2 * scale_multiplier / eps)``.

    Use ``scale_multiplier = n`` when an individual reports all ``n``
    coordinates of a vector.  ``v`` may be a scalar or an array.
    """
    if scale_multiplier <= 0:
        raise InvalidInputError("scale_multiplier must be positive")
    arr = _check_range(v)
    scale = 2.0 * scale_multiplier / params.epsilon
    if arr.ndim == 0:
        return float(arr) + laplace_noise(scale, rng)
    return arr + laplace_noise(scale, rng, size=arr.shape)


# -- one-bit reports ---------------------------------------------------------------

@dataclass(frozen=True)
class OneBitReport:
    feature: int  # 1-based
    sign: int  # +1 or -1


def onebit_magnitude(params: PrivacyParams, n: int) -> float:
    """``(e^eps + 1) / (e^eps - 1) * n``, the size of every reconstructed report."""
    return n / math.tanh(params.epsilon / 2.0)


def onebit_probability(v, params: PrivacyParams):
    """``Pr[u = 1] = (v (e^eps - 1) + e^eps + 1) / (2 e^eps + 2)``."""
    return 0.5 + 0.5 * np.asarray(v, dtype=float) * math.tanh(params.epsilon / 2.0)


def onebit_perturb(vector, params: PrivacyParams, rng: np.random.Generator) -> OneBitReport:
    vec = _check_range(np.atleast_1d(vector))
    if vec.ndim != 1 or len(vec) < 1:
        raise InvalidInputError("one-bit reporting needs a non-empty 1-D vector")
    features, signs = onebit_perturb_many(vec[None, :], params, rng)
    return OneBitReport(int(features[0]), int(signs[0]))


def onebit_perturb_many(matrix, params: PrivacyParams, rng: np.random.Generator):
    """One-bit reports for each row of an ``(m, n)`` matrix.

    Returns ``(features, signs)``: the 1-based coordinate each individual
    picked and the transmitted sign.
    """
    mat = _check_range(matrix)
    if mat.ndim != 2 or mat.shape[1] < 1:
        raise InvalidInputError("expected an (m, n) matrix with n >= 1")
    m, n = mat.shape
    j = rng.integers(0, n, size=m)
    prob = onebit_probability(mat[np.arange(m), j], params)
    signs = np.where(rng.random(m) < prob, 1, -1)
    return j + 1, signs


def onebit_reconstruct(signs, params: PrivacyParams, n: int):
    """Aggregator-side value ``+-(e^eps + 1)/(e^eps - 1) * n`` for each sign."""
    return np.asarray(signs, dtype=float) * onebit_magnitude(params, n)


def onebit_feature_means(features, signs, params: PrivacyParams, n: int) -> np.ndarray:
    """Per-coordinate mean of one-bit reports.

    Each coordinate's reconstructed values are averaged over the reports that
    selected it and then scaled back by ``1/n``.  Coordinates nobody selected
    come back as NaN.
    """
    features = np.asarray(features)
    values = onebit_reconstruct(signs, params, n)
    sums = np.bincount(features - 1, weights=values, minlength=n)
    counts = np.bincount(features - 1, minlength=n)
    with np.errstate(invalid="ignore", divide="ignore"):
        # a coordinate chosen with prob 1/n carries n * v_j in expectation
        return sums / counts / n


# -- class-masked vectors ----------------------------------------------------------

def _payload(v, target: MomentTarget):
    target = MomentTarget(target)
    arr = _check_range(v)
    return arr * arr if target is MomentTarget.SQUARE else arr


def masked_vector_perturb(v: float, target, class_index: int, k: int,
                          params: PrivacyParams, rng: np.random.Generator,
                          scale_multiplier: float = 1.0) -> np.ndarray:
    """Length-``k`` vector holding the payload in slot ``class_index``, Laplace-noised everywhere."""
    if k < 1 or not 1 <= class_index <= k:
        raise InvalidInputError(f"class index {class_index!r} outside [1, {k}]")
    return masked_vectors_many(np.array([v], dtype=float), np.array([class_index]), k,
                               target, params, rng, scale_multiplier)[0]


def masked_vectors_many(values, classes, k: int, target, params: PrivacyParams,
                        rng: np.random.Generator, scale_multiplier: float = 1.0) -> np.ndarray:
    """Masked reports for ``m`` individuals.

    ``values`` has shape ``(m,)`` or ``(m, n)``; the result has shape
    ``(m, k)`` or ``(m, n, k)`` respectively.
    """
    payload = _payload(values, target)
    classes = np.asarray(classes)
    if classes.shape[0] != payload.shape[0]:
        raise InvalidInputError("values and classes differ in length")
    if classes.size and (classes.min() < 1 or classes.max() > k):
        raise InvalidInputError(f"class index outside [1, {k}]")
    onehot = np.eye(k)[classes - 1]
    if payload.ndim == 2:
        clean = payload[:, :, None] * onehot[:, None, :]
    else:
        clean = payload[:, None] * onehot
    scale = 2.0 * scale_multiplier / params.epsilon
    return clean + laplace_noise(scale, rng, size=clean.shape)


# -- estimators ------------------------------------------------------------------------

def estimate_mean(reports) -> float:
    """Arithmetic mean of noisy reports (exact for Fraction inputs)."""
    if isinstance(reports, np.ndarray):
        if reports.size == 0:
            raise EmptyInputError("no reports")
        return float(reports.mean())
    items = list(reports)
    if not items:
        raise EmptyInputError("no reports")
    return statistics.mean(items)


@dataclass(frozen=True)
class ClassMoments:
    mean: np.ndarray
    mean_sq: np.ndarray
    var: np.ndarray


def check_priors(priors) -> np.ndarray:
    priors = np.asarray(priors, dtype=float)
    if priors.ndim != 1 or priors.size == 0 or np.any(~(priors > 0)):
        raise DegeneratePriorError("class priors must be strictly positive")
    if abs(priors.sum() - 1.0) > 1e-9:
        raise DegeneratePriorError(f"class priors sum to {priors.sum()}, not 1")
    return priors


def estimate_class_moments(value_reports, square_reports, class_priors,
                           floor: float = VARIANCE_FLOOR) -> ClassMoments:
    """Per-class mean, mean of squares and variance from masked-vector reports.

    The observed slot-``j`` mean equals ``P(C_j) * mu_j``, so it is divided by
    the class prior.  Variance is ``mu_sq - mu**2``, floored at ``floor``.
    """
    priors = check_priors(class_priors)
    vals = np.asarray(value_reports, dtype=float)
    sqs = np.asarray(square_reports, dtype=float)
    if vals.size == 0 or sqs.size == 0:
        raise EmptyInputError("both value and square report groups must be non-empty")
    k = len(priors)
    if vals.shape[-1] != k or sqs.shape[-1] != k:
        raise InvalidInputError("masked vector length differs from number of classes")
    mu = vals.mean(axis=0) / priors
    mu_sq = sqs.mean(axis=0) / priors
    var = np.maximum(mu_sq - mu * mu, floor)
    return ClassMoments(mu, mu_sq, var)
