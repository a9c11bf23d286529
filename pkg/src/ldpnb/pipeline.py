"""One private training run, from raw training records to a Naive Bayes model.

Every simulated individual is assigned exactly one report target, so each
individual's data passes through a single mechanism invocation at the full
budget.  Discrete data uses ``n + 1`` groups (class label plus one joint
feature/class group per feature).  The Gaussian path uses a class-label
group plus value/square moment groups; see :func:`gaussian_targets`.

Round-robin assignment goes by row position, so callers should pass rows in
random order (:func:`ldpnb.dataio.split` already permutes them).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import cont_mech
from .cont_mech import MomentTarget, VARIANCE_FLOOR
from .dataio import CONTINUOUS, CATEGORICAL, Column, Dataset, fit_ranges, normalize
from .dimred import DEFAULT_RIDGE, fit_dca, fit_pca, project
from .encoding import Binning, JointDomain, clamp_estimates, discretize, encode_joint
from .errors import ConfigError, SchemaError
from .freq_mech import FrequencyEstimate, FrequencyOracle, Mechanism
from .model import NaiveBayesModel, accuracy, assemble_discrete, assemble_gaussian, reference_fit
from .privacy import PrivacyParams


class Assignment(str, Enum):
    ROUND_ROBIN = "round_robin"
    UNIFORM_RANDOM = "uniform_random"


class ContinuousMode(str, Enum):
    DISCRETIZE = "discretize"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class ClassTarget:
    def __str__(self):
        return "class"


@dataclass(frozen=True)
class FeatureTarget:
    feature: int  # 0-based column

    def __str__(self):
        return f"feature[{self.feature}]"


@dataclass(frozen=True)
class MomentGroup:
    """Reports of a value or its square; ``feature=None`` means every feature at once."""

    feature: int | None
    moment: MomentTarget

    def __str__(self):
        where = "all" if self.feature is None else self.feature
        return f"{self.moment.value}[{where}]"


@dataclass(frozen=True)
class ReportAssignment:
    targets: tuple
    groups: np.ndarray  # (m,) index into targets
    strategy: Assignment

    def members(self, t: int) -> np.ndarray:
        return np.flatnonzero(self.groups == t)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.groups, minlength=len(self.targets))


def assign(m: int, targets, strategy=Assignment.ROUND_ROBIN, rng=None) -> ReportAssignment:
    targets = tuple(targets)
    if not targets:
        raise ConfigError("at least one report target is required", field="targets")
    strategy = Assignment(strategy)
    if m < len(targets):
        warnings.warn(f"{m} individuals for {len(targets)} report targets; some groups stay empty",
                      stacklevel=2)
    if strategy is Assignment.ROUND_ROBIN:
        groups = np.arange(m) % len(targets)
    else:
        if rng is None:
            raise ConfigError("uniform random assignment needs a random generator", field="assignment")
        groups = rng.integers(0, len(targets), size=m)
    return ReportAssignment(targets, groups, strategy)


@dataclass(frozen=True)
class RunConfig:
    mechanism: Mechanism = Mechanism.DE
    privacy: PrivacyParams = field(default_factory=lambda: PrivacyParams(1.0))
    mode: ContinuousMode = ContinuousMode.DISCRETIZE
    n_bins: int = 4
    approach: int = 3
    class_hiding: bool = True
    dimred: str | None = None
    dimred_dims: int = 1
    ridge: float = DEFAULT_RIDGE
    assignment: Assignment = Assignment.ROUND_ROBIN
    split: float = 0.8
    repetitions: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mechanism", Mechanism.parse(self.mechanism))
        try:
            object.__setattr__(self, "mode", ContinuousMode(self.mode))
            object.__setattr__(self, "assignment", Assignment(self.assignment))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.dimred is not None and self.dimred not in ("pca", "dca"):
            raise ConfigError(f"unknown method {self.dimred!r}", field="dimred")
        if self.approach not in (1, 2, 3):
            raise ConfigError("approach must be 1, 2 or 3", field="approach")
        if self.n_bins < 2:
            raise ConfigError("need at least 2 bins", field="n_bins")
        if self.dimred_dims < 1:
            raise ConfigError("must be >= 1", field="dimred_dims")
        if not 0.0 < self.split < 1.0:
            raise ConfigError("must lie in (0, 1)", field="split")
        if self.repetitions < 1:
            raise ConfigError("must be >= 1", field="repetitions")

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


# -- discrete path ------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteCollection:
    """Aggregator state after one collection round (before clamping)."""

    assignment: ReportAssignment
    class_est: FrequencyEstimate
    joint_ests: tuple[FrequencyEstimate, ...]

    @property
    def n_reports(self) -> int:
        return self.class_est.m + sum(e.m for e in self.joint_ests)


def collect_discrete(train: Dataset, config: RunConfig, rng: np.random.Generator) -> DiscreteCollection:
    schema = train.schema
    if not schema.all_categorical:
        raise SchemaError("discrete path needs categorical (or discretized) features")
    k = schema.k
    if k < 2:
        raise SchemaError("private estimation needs at least 2 classes")
    targets = [ClassTarget()] + [FeatureTarget(i) for i in range(schema.n)]
    a = assign(len(train), targets, config.assignment, rng)

    idx = a.members(0)
    class_est = FrequencyOracle(config.mechanism, config.privacy, k).collect(train.y[idx], rng)
    joint = []
    for i, col in enumerate(schema.columns):
        idx = a.members(i + 1)
        domain = JointDomain(col.n_values, k)
        values = encode_joint(np.rint(train.X[idx, i]).astype(np.int64), train.y[idx], domain)
        oracle = FrequencyOracle(config.mechanism, config.privacy, domain.size)
        joint.append(oracle.collect(values, rng))
    return DiscreteCollection(a, class_est, tuple(joint))


def run_discrete(train: Dataset, config: RunConfig, rng: np.random.Generator) -> NaiveBayesModel:
    c = collect_discrete(train, config, rng)
    return assemble_discrete(clamp_estimates(c.class_est),
                             [clamp_estimates(e) for e in c.joint_ests],
                             train.schema.n_values)


# -- Gaussian path --------------------------------------------------------------------

def gaussian_targets(n: int, approach: int, class_hiding: bool = True) -> list:
    """Class-label group plus moment groups.

    Approach 3 (and approach 2 with hidden labels) uses one value and one
    square group per feature, ``2n + 1`` groups in total.  Approach 1 and the
    plain one-bit approach 2 have each moment-group member report a whole
    vector, so they need only a value group and a square group.
    """
    if approach == 1 or (approach == 2 and not class_hiding):
        return [ClassTarget(), MomentGroup(None, MomentTarget.VALUE), MomentGroup(None, MomentTarget.SQUARE)]
    targets = [ClassTarget()]
    for i in range(n):
        targets += [MomentGroup(i, MomentTarget.VALUE), MomentGroup(i, MomentTarget.SQUARE)]
    return targets


@dataclass(frozen=True)
class GaussianCollection:
    assignment: ReportAssignment
    class_est: FrequencyEstimate
    priors: np.ndarray
    moments: tuple  # per feature (mean, var)
    n_reports: int


def _labeled_means(reports, labels, k):
    # per-class mean of reports whose label is in the clear; NaN when a class is absent
    sums = np.zeros((k,) + reports.shape[1:])
    np.add.at(sums, labels - 1, reports)
    counts = np.bincount(labels - 1, minlength=k).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / counts.reshape((k,) + (1,) * (reports.ndim - 1))


def _finish_moments(mu, mu_sq, floor):
    # classes with no reports fall back to an uninformative N(0, 1)
    missing = np.isnan(mu) | np.isnan(mu_sq)
    mu = np.where(missing, 0.0, mu)
    var = np.where(missing, 1.0, np.maximum(mu_sq - mu * mu, floor))
    return mu, var


def collect_gaussian(train: Dataset, config: RunConfig, rng: np.random.Generator,
                     floor: float = VARIANCE_FLOOR) -> GaussianCollection:
    schema = train.schema
    if not schema.all_continuous:
        raise SchemaError("Gaussian path needs continuous features")
    k, n = schema.k, schema.n
    if k < 2:
        raise SchemaError("private estimation needs at least 2 classes")
    params = config.privacy
    approach = config.approach
    strategy = config.assignment
    if approach == 2 and config.class_hiding:
        # each individual picks its (feature, moment) pair itself
        strategy = Assignment.UNIFORM_RANDOM
    a = assign(len(train), gaussian_targets(n, approach, config.class_hiding), strategy, rng)

    idx = a.members(0)
    class_est = FrequencyOracle(config.mechanism, params, k).collect(train.y[idx], rng)
    counts = clamp_estimates(class_est).counts
    priors = counts / counts.sum()

    X, y = train.X, train.y
    group = {t: a.members(g) for g, t in enumerate(a.targets)}
    moments = []
    if approach == 1:
        vi = group[MomentGroup(None, MomentTarget.VALUE)]
        si = group[MomentGroup(None, MomentTarget.SQUARE)]
        if config.class_hiding:
            vals = cont_mech.masked_vectors_many(X[vi], y[vi], k, MomentTarget.VALUE, params, rng, n)
            sqs = cont_mech.masked_vectors_many(X[si], y[si], k, MomentTarget.SQUARE, params, rng, n)
            for i in range(n):
                if len(vi) and len(si):
                    cm = cont_mech.estimate_class_moments(vals[:, i, :], sqs[:, i, :], priors, floor)
                    moments.append((cm.mean, cm.var))
                else:
                    moments.append(_finish_moments(np.full(k, np.nan), np.full(k, np.nan), floor))
        else:
            vals = cont_mech.laplace_perturb(X[vi], params, n, rng)
            sqs = cont_mech.laplace_perturb(X[si] ** 2, params, n, rng)
            mu = _labeled_means(vals, y[vi], k)
            mu_sq = _labeled_means(sqs, y[si], k)
            for i in range(n):
                moments.append(_finish_moments(mu[:, i], mu_sq[:, i], floor))
    elif approach == 2 and not config.class_hiding:
        # one-bit reports of the whole value (or squared) vector, label in the clear
        per_moment = {}
        for moment in (MomentTarget.VALUE, MomentTarget.SQUARE):
            members = group[MomentGroup(None, moment)]
            payload = X[members] ** 2 if moment is MomentTarget.SQUARE else X[members]
            feats, signs = cont_mech.onebit_perturb_many(payload, params, rng)
            est = np.full((k, n), np.nan)
            labels = y[members]
            for j in range(k):
                sel = labels == j + 1
                if sel.any():
                    est[j] = cont_mech.onebit_feature_means(feats[sel], signs[sel], params, n)
            per_moment[moment] = est
        for i in range(n):
            moments.append(_finish_moments(per_moment[MomentTarget.VALUE][:, i],
                                           per_moment[MomentTarget.SQUARE][:, i], floor))
    else:
        for i in range(n):
            vi = group[MomentGroup(i, MomentTarget.VALUE)]
            si = group[MomentGroup(i, MomentTarget.SQUARE)]
            if config.class_hiding:
                if len(vi) == 0 or len(si) == 0:
                    moments.append(_finish_moments(np.full(k, np.nan), np.full(k, np.nan), floor))
                    continue
                vals = cont_mech.masked_vectors_many(X[vi, i], y[vi], k, MomentTarget.VALUE, params, rng)
                sqs = cont_mech.masked_vectors_many(X[si, i], y[si], k, MomentTarget.SQUARE, params, rng)
                cm = cont_mech.estimate_class_moments(vals, sqs, priors, floor)
                moments.append((cm.mean, cm.var))
            else:
                vals = cont_mech.laplace_perturb(X[vi, i], params, 1.0, rng)
                sqs = cont_mech.laplace_perturb(X[si, i] ** 2, params, 1.0, rng)
                moments.append(_finish_moments(_labeled_means(vals, y[vi], k),
                                               _labeled_means(sqs, y[si], k), floor))
    return GaussianCollection(a, class_est, priors, tuple(moments), int(a.sizes.sum()))


def run_gaussian(train: Dataset, config: RunConfig, rng: np.random.Generator) -> NaiveBayesModel:
    c = collect_gaussian(train, config, rng)
    return assemble_gaussian(c.priors, c.moments)


def fit_private(train: Dataset, config: RunConfig, rng: np.random.Generator) -> NaiveBayesModel:
    if train.schema.all_categorical:
        return run_discrete(train, config, rng)
    return run_gaussian(train, config, rng)


def evaluate(model: NaiveBayesModel, test: Dataset) -> float:
    return accuracy(model, test)


# -- preprocessing --------------------------------------------------------------------

def prepare(train: Dataset, test: Dataset, config: RunConfig) -> tuple[Dataset, Dataset]:
    """Normalize, optionally project, and discretize according to ``config``.

    All ranges, projections and bins are learned from ``train`` only.
    """
    schema = train.schema
    if schema.all_categorical:
        if config.dimred is not None:
            raise ConfigError("dimensionality reduction needs continuous features", field="dimred")
        return train, test
    ranged = fit_ranges(train)
    train, test = normalize(train, ranged), normalize(test, ranged)
    if config.dimred is not None:
        if not schema.all_continuous:
            raise ConfigError("dimensionality reduction needs all features continuous", field="dimred")
        r = config.dimred_dims
        if config.dimred == "pca":
            P = fit_pca(train.X, r)
        else:
            P = fit_dca(train.X, train.y, r, config.ridge)
        cols = [Column(f"{config.dimred}{j + 1}", CONTINUOUS, lo=-1.0, hi=1.0) for j in range(P.n_out)]
        train = train.with_features(project(train.X, P), cols)
        test = test.with_features(project(test.X, P), cols)
    if config.mode is ContinuousMode.GAUSSIAN:
        if not train.schema.all_continuous:
            raise SchemaError("Gaussian path needs all features continuous")
        return train, test
    return _discretized(train, config.n_bins), _discretized(test, config.n_bins)


def _discretized(data: Dataset, n_bins: int) -> Dataset:
    X = data.X.copy()
    cols = []
    binning = Binning(-1.0, 1.0, n_bins)
    for j, col in enumerate(data.schema.columns):
        if col.is_categorical:
            cols.append(col)
            continue
        X[:, j] = discretize(X[:, j], binning)
        cols.append(Column(col.name, CATEGORICAL, tuple(f"bin{b}" for b in range(1, n_bins + 1))))
    return data.with_features(X, cols)


def run_once(train: Dataset, test: Dataset, config: RunConfig, rng: np.random.Generator) -> float:
    """Accuracy of one private model on prepared data."""
    return evaluate(fit_private(train, config, rng), test)


def reference_accuracy(train: Dataset, test: Dataset) -> float:
    return evaluate(reference_fit(train), test)
