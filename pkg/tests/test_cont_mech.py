import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from ldpnb.cont_mech import (
    VARIANCE_FLOOR,
    MomentTarget,
    estimate_class_moments,
    estimate_mean,
    laplace_perturb,
    masked_vector_perturb,
    masked_vectors_many,
    onebit_feature_means,
    onebit_magnitude,
    onebit_perturb,
    onebit_perturb_many,
    onebit_reconstruct,
)
from ldpnb.errors import DegeneratePriorError, EmptyInputError, InvalidInputError, NormalizationError
from ldpnb.privacy import PrivacyParams

EPS1 = PrivacyParams(1.0)
INF = PrivacyParams(math.inf)


def test_laplace_perturb_mean(rng):
    out = laplace_perturb(np.full(100_000, 0.3), EPS1, rng=rng)
    assert out.mean() == pytest.approx(0.3, abs=0.02)


def test_laplace_perturb_scale_multiplier(rng):
    out = laplace_perturb(np.zeros(100_000), EPS1, scale_multiplier=4, rng=rng)
    # Lap(b) has variance 2 b^2 with b = 2 * 4 / eps
    assert out.var() == pytest.approx(2 * 8.0**2, rel=0.03)


def test_laplace_perturb_noise_free(rng):
    assert laplace_perturb(0.3, INF, rng=rng) == 0.3


@pytest.mark.parametrize("v", [1.5, -1.01, float("nan")])
def test_laplace_perturb_range(v, rng):
    with pytest.raises(NormalizationError):
        laplace_perturb(v, EPS1, rng=rng)


def test_onebit_reconstruction_unbiased_scalar(rng):
    feats, signs = onebit_perturb_many(np.full((100_000, 1), 0.5), EPS1, rng)
    assert set(feats.tolist()) == {1}
    assert onebit_reconstruct(signs, EPS1, 1).mean() == pytest.approx(0.5, abs=0.05)


def test_onebit_single_report(rng):
    rep = onebit_perturb([0.2, -0.4, 0.9], EPS1, rng)
    assert 1 <= rep.feature <= 3 and rep.sign in (-1, 1)
    with pytest.raises(NormalizationError):
        onebit_perturb([0.2, 1.4], EPS1, rng)


def test_onebit_magnitude_formula():
    e = math.exp(1.0)
    assert onebit_magnitude(EPS1, 3) == pytest.approx(3 * (e + 1) / (e - 1), rel=1e-12)


@pytest.mark.parametrize("vec", [[0.5], [-0.3, 0.8], [0.1, -0.9, 0.4, 0.0]])
def test_onebit_coordinate_means_within_three_se(vec, rng):
    n = len(vec)
    m = 100_000
    feats, signs = onebit_perturb_many(np.tile(vec, (m, 1)), EPS1, rng)
    est = onebit_feature_means(feats, signs, EPS1, n)
    counts = np.bincount(feats - 1, minlength=n)
    # each reconstructed report is +-M, so its variance is at most M^2
    se = onebit_magnitude(EPS1, n) / n / np.sqrt(counts)
    assert np.all(np.abs(est - vec) <= 3 * se)
    assert np.all(np.abs(est - vec) <= 0.05)


def test_masked_vector_noise_free(rng):
    out = masked_vector_perturb(0.4, MomentTarget.VALUE, 2, 3, INF, rng)
    assert out.tolist() == [0.0, 0.4, 0.0]
    sq = masked_vector_perturb(-0.5, MomentTarget.SQUARE, 1, 2, INF, rng)
    assert sq.tolist() == [0.25, 0.0]


def test_masked_vector_mean(rng):
    out = masked_vectors_many(np.full(100_000, 0.4), np.full(100_000, 2), 3, "value", EPS1, rng)
    assert np.allclose(out.mean(axis=0), [0, 0.4, 0], atol=0.02)


def test_masked_vector_bad_class(rng):
    with pytest.raises(InvalidInputError):
        masked_vector_perturb(0.4, MomentTarget.VALUE, 4, 3, EPS1, rng)


def test_masked_vectors_matrix_shape(rng):
    out = masked_vectors_many(np.zeros((7, 4)), np.ones(7, dtype=int), 3, "square", EPS1, rng)
    assert out.shape == (7, 4, 3)


def test_masked_vector_l1_sensitivity_grid():
    grid = np.linspace(-1, 1, 9)
    k = 3
    for target in MomentTarget:
        clean = {}
        for v, j in itertools.product(grid, range(1, k + 1)):
            clean[v, j] = masked_vectors_many(np.array([v]), np.array([j]), k, target, INF, None)[0]
        vecs = np.array(list(clean.values()))
        diffs = np.abs(vecs[:, None, :] - vecs[None, :, :]).sum(axis=2)
        assert diffs.max() <= 2.0 + 1e-12


def test_estimate_mean_examples(rng):
    assert estimate_mean([Fraction(1, 10), Fraction(3, 10), Fraction(5, 10)]) == Fraction(3, 10)
    assert estimate_mean(np.array([0.1, 0.3, 0.5])) == pytest.approx(0.3)
    noisy = laplace_perturb(np.full(100_000, 0.7), EPS1, rng=rng)
    assert estimate_mean(noisy) == pytest.approx(0.7, abs=0.02)
    with pytest.raises(EmptyInputError):
        estimate_mean([])
    with pytest.raises(EmptyInputError):
        estimate_mean(np.array([]))


def test_class_moments_constant_data():
    vals = np.full((10, 1), 0.5)
    cm = estimate_class_moments(vals, vals**2, [1.0])
    assert cm.mean[0] == pytest.approx(0.5)
    assert cm.mean_sq[0] == pytest.approx(0.25)
    assert cm.var[0] == VARIANCE_FLOOR


def test_class_moments_errors():
    good = np.zeros((3, 2))
    with pytest.raises(DegeneratePriorError):
        estimate_class_moments(good, good, [1.0, 0.0])
    with pytest.raises(EmptyInputError):
        estimate_class_moments(np.zeros((0, 2)), good, [0.5, 0.5])


def test_class_moments_synthetic(rng):
    m = 100_000
    x = np.clip(rng.normal(0.2, 0.1, size=m), -1, 1)
    labels = np.ones(m, dtype=int)
    half = m // 2
    vals = masked_vectors_many(x[:half], labels[:half], 1, "value", PrivacyParams(2.0), rng)
    sqs = masked_vectors_many(x[half:], labels[half:], 1, "square", PrivacyParams(2.0), rng)
    cm = estimate_class_moments(vals, sqs, [1.0])
    assert cm.mean[0] == pytest.approx(0.2, abs=0.03)
    assert cm.var[0] == pytest.approx(0.01, abs=0.02)


def test_variance_never_below_floor(rng):
    for seed in range(20):
        r = np.random.default_rng(seed)
        vals = r.laplace(0, 5, size=(30, 3))
        cm = estimate_class_moments(vals, r.laplace(0, 5, size=(30, 3)), [0.2, 0.3, 0.5])
        assert np.all(cm.var >= VARIANCE_FLOOR)
