"""Naive Bayes models: assembly from (noisy) estimates, prediction, reference fit.

Scores are kept in log space.  Discrete features store a conditional
probability table ``probs[a-1, j-1] = P(F = a | C_j)``; Gaussian features
store per-class mean and variance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .cont_mech import VARIANCE_FLOOR, check_priors
from .dataio import Dataset
from .encoding import clamp_estimates
from .errors import EmptyInputError, InvalidInputError, SchemaError
from .freq_mech import FrequencyEstimate

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class DiscreteFeature:
    probs: np.ndarray  # (n_values, k)
    unseen: np.ndarray  # (k,) probability for a value outside the training domain

    @property
    def n_values(self) -> int:
        return self.probs.shape[0]

    def log_likelihood(self, values) -> np.ndarray:
        """``(m, k)`` log-probabilities for an array of 1-based values."""
        values = np.asarray(values)
        idx = np.rint(values).astype(np.int64)
        known = (idx >= 1) & (idx <= self.n_values)
        out = np.empty((len(idx), self.probs.shape[1]))
        out[known] = np.log(self.probs[idx[known] - 1])
        out[~known] = np.log(self.unseen)
        return out


@dataclass(frozen=True)
class GaussianFeature:
    mean: np.ndarray  # (k,)
    var: np.ndarray  # (k,)

    def log_likelihood(self, values) -> np.ndarray:
        x = np.asarray(values, dtype=float)[:, None]
        return -0.5 * (_LOG_2PI + np.log(self.var)) - (x - self.mean) ** 2 / (2.0 * self.var)


Feature = Union[DiscreteFeature, GaussianFeature]


@dataclass(frozen=True)
class NaiveBayesModel:
    priors: np.ndarray
    features: tuple[Feature, ...]

    @property
    def k(self) -> int:
        return len(self.priors)

    @property
    def n(self) -> int:
        return len(self.features)

    def to_dict(self):
        feats = []
        for f in self.features:
            if isinstance(f, DiscreteFeature):
                feats.append({"type": "discrete", "probs": f.probs.tolist(), "unseen": f.unseen.tolist()})
            else:
                feats.append({"type": "gaussian", "mean": f.mean.tolist(), "var": f.var.tolist()})
        return {"priors": self.priors.tolist(), "features": feats}

    @classmethod
    def from_dict(cls, d) -> "NaiveBayesModel":
        feats = []
        for f in d["features"]:
            if f["type"] == "discrete":
                feats.append(DiscreteFeature(np.asarray(f["probs"], float), np.asarray(f["unseen"], float)))
            elif f["type"] == "gaussian":
                feats.append(GaussianFeature(np.asarray(f["mean"], float), np.asarray(f["var"], float)))
            else:
                raise SchemaError(f"unknown feature type {f['type']!r}")
        return cls(np.asarray(d["priors"], float), tuple(feats))


def save_model(model: NaiveBayesModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


def load_model(path) -> NaiveBayesModel:
    return NaiveBayesModel.from_dict(json.loads(Path(path).read_text()))


def _normalized_priors(class_est: FrequencyEstimate) -> np.ndarray:
    counts = class_est.counts
    if np.any(counts <= 0):
        raise InvalidInputError("class estimates must be clamped positive first")
    return counts / counts.sum()


def assemble_discrete(class_est: FrequencyEstimate, joint_ests: Sequence[FrequencyEstimate],
                      n_values: Sequence[int] | None = None) -> NaiveBayesModel:
    """Build priors and CPTs from clamped class and joint (value, class) estimates."""
    priors = _normalized_priors(class_est)
    k = len(priors)
    if n_values is not None and len(n_values) != len(joint_ests):
        raise SchemaError("one joint estimate per feature is required")
    feats = []
    for i, est in enumerate(joint_ests):
        if est.d % k:
            raise SchemaError(f"feature {i}: joint domain {est.d} is not a multiple of k={k}")
        n_i = est.d // k
        if n_values is not None and n_values[i] != n_i:
            raise SchemaError(f"feature {i}: joint domain {est.d} != {n_values[i]} * {k}")
        if np.any(est.counts <= 0):
            raise InvalidInputError(f"feature {i}: estimates must be clamped positive first")
        table = est.counts.reshape(n_i, k)
        totals = table.sum(axis=0)
        feats.append(DiscreteFeature(table / totals, 1.0 / totals))
    return NaiveBayesModel(priors, tuple(feats))


def assemble_gaussian(class_priors, moments, floor: float = VARIANCE_FLOOR) -> NaiveBayesModel:
    """``moments`` holds one ``(mean, var)`` pair of length-k arrays per feature."""
    priors = check_priors(class_priors)
    feats = []
    for i, (mean, var) in enumerate(moments):
        mean = np.asarray(mean, dtype=float)
        var = np.asarray(var, dtype=float)
        if mean.shape != priors.shape or var.shape != priors.shape:
            raise SchemaError(f"feature {i}: moments must have one entry per class")
        if np.any(~(var >= floor)):
            raise InvalidInputError(f"feature {i}: variance below floor {floor}")
        feats.append(GaussianFeature(mean, var))
    return NaiveBayesModel(priors, tuple(feats))


def log_scores(model: NaiveBayesModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n:
        raise SchemaError(f"instances have {X.shape[-1]} features, model expects {model.n}")
    scores = np.tile(np.log(model.priors), (len(X), 1))
    for i, feat in enumerate(model.features):
        scores += feat.log_likelihood(X[:, i])
    return scores


def predict(model: NaiveBayesModel, x) -> tuple[int, np.ndarray]:
    """Predicted 1-based class and per-class log-scores for one instance.

    Ties go to the lowest class index.
    """
    scores = log_scores(model, np.asarray(x, dtype=float).reshape(1, -1))[0]
    return int(np.argmax(scores)) + 1, scores


def predict_many(model: NaiveBayesModel, X) -> np.ndarray:
    return np.argmax(log_scores(model, X), axis=1) + 1


def reference_fit(train: Dataset, floor: float = VARIANCE_FLOOR) -> NaiveBayesModel:
    """Non-private model from exact counts and moments, same clamp and floor rules."""
    if len(train) == 0:
        raise EmptyInputError("empty training set")
    k = train.schema.k
    y = train.y
    class_counts = np.bincount(y - 1, minlength=k).astype(float)
    class_est = clamp_estimates(FrequencyEstimate(class_counts, len(y)))
    priors = class_est.counts / class_est.counts.sum()
    feats = []
    for i, col in enumerate(train.schema.columns):
        x = train.X[:, i]
        if col.is_categorical:
            n_i = col.n_values
            idx = (np.rint(x).astype(np.int64) - 1) * k + y
            counts = np.bincount(idx - 1, minlength=n_i * k).astype(float)
            est = clamp_estimates(FrequencyEstimate(counts, len(y)))
            table = est.counts.reshape(n_i, k)
            totals = table.sum(axis=0)
            feats.append(DiscreteFeature(table / totals, 1.0 / totals))
        else:
            mean = np.zeros(k)
            var = np.full(k, floor)
            for j in range(k):
                xs = x[y == j + 1]
                if len(xs):
                    mean[j] = xs.mean()
                    var[j] = max(xs.var(), floor)
            feats.append(GaussianFeature(mean, var))
    return NaiveBayesModel(priors, tuple(feats))


def accuracy(model: NaiveBayesModel, data: Dataset) -> float:
    if len(data) == 0:
        raise EmptyInputError("empty test set")
    return float(np.mean(predict_many(model, data.X) == data.y))
