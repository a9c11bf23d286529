import numpy as np
import pytest

from ldpnb.dimred import ProjectionMatrix, fit_dca, fit_pca, project, scatter_matrices
from ldpnb.errors import DegenerateDataError, DegenerateLabelsError, InvalidDimsError


def test_pca_line():
    t = np.linspace(-1, 1, 50)
    P = fit_pca(np.column_stack([t, 2 * t]), 1)
    assert np.allclose(P.matrix[0], np.array([1, 2]) / np.sqrt(5), atol=1e-10)


def test_pca_isotropic_eigenvalues(rng):
    X = rng.normal(size=(200_000, 3))
    P = fit_pca(X, 3)
    assert np.allclose(P.eigenvalues, 1.0, atol=0.02)
    assert np.allclose(P.matrix @ P.matrix.T, np.eye(3), atol=1e-10)


def test_pca_known_covariance(rng):
    X = rng.normal(size=(100_000, 3)) * np.sqrt([9.0, 4.0, 1.0])
    P = fit_pca(X, 2)
    Z = project(X, P, normalize=False)
    assert Z.var(axis=0, ddof=1) == pytest.approx([9.0, 4.0], rel=0.05)


def test_pca_variance_accounting(rng):
    X = rng.normal(size=(500, 4)) @ rng.normal(size=(4, 4))
    total = np.trace(np.cov(X, rowvar=False))
    for r in range(1, 5):
        Z = project(X, fit_pca(X, r), normalize=False)
        captured = Z.var(axis=0, ddof=1).sum()
        assert captured <= total * (1 + 1e-9)
        if r == 4:
            assert captured == pytest.approx(total, rel=1e-6)


def test_pca_errors():
    with pytest.raises(InvalidDimsError):
        fit_pca(np.zeros((5, 2)) + np.arange(5)[:, None], 3)
    with pytest.raises(DegenerateDataError):
        fit_pca(np.ones((5, 2)), 1)


def test_sign_convention(rng):
    X = rng.normal(size=(300, 4))
    for P in (fit_pca(X, 2), fit_pca(-X, 2)):
        for row in P.matrix:
            assert row[np.argmax(np.abs(row))] > 0


def test_dca_finds_discriminant_axis(rng):
    m = 4000
    y = np.repeat([1, 2], m // 2)
    X = rng.normal(size=(m, 3))
    X[:, 0] += np.where(y == 1, -3.0, 3.0)
    P = fit_dca(X, y, 1)
    angle = np.degrees(np.arccos(abs(P.matrix[0, 0]) / np.linalg.norm(P.matrix[0])))
    assert angle < 5


def test_dca_with_correlated_noise(rng):
    # the discriminant direction differs from the top-variance direction
    m = 6000
    y = np.repeat([1, 2], m // 2)
    X = rng.normal(size=(m, 2)) * [1.0, 10.0]
    X[:, 0] += np.where(y == 1, -1.0, 1.0)
    assert abs(fit_pca(X, 1).matrix[0, 1]) > 0.99
    assert abs(fit_dca(X, y, 1).matrix[0, 0]) > 0.99


def test_dca_no_signal_still_returns(rng):
    X = rng.normal(size=(400, 3))
    y = rng.integers(1, 3, size=400)
    sw, sb = scatter_matrices(X, y)
    assert np.abs(sb).max() < 0.05
    P = fit_dca(X, y, 2)
    assert P.matrix.shape == (2, 3)


def test_dca_errors(rng):
    X = rng.normal(size=(20, 3))
    with pytest.raises(DegenerateLabelsError):
        fit_dca(X, np.ones(20), 1)
    with pytest.raises(InvalidDimsError):
        fit_dca(X, np.arange(20) % 2, 4)
    with pytest.raises(InvalidDimsError):
        fit_dca(X, np.arange(19) % 2, 1)


def test_project_centering_and_identity():
    P = ProjectionMatrix(np.eye(3), np.array([1.0, 2.0, 3.0]), "pca", np.ones(3))
    assert np.allclose(project([1.0, 2.0, 3.0], P, normalize=False), 0.0)
    assert np.allclose(project([2.0, 2.0, 5.0], P, normalize=False), [1.0, 0.0, 2.0])
    with pytest.raises(InvalidDimsError):
        project([1.0, 2.0], P)
    with pytest.raises(InvalidDimsError):
        project([1.0, 2.0, 3.0], P)  # no recorded output range


def test_project_normalizes_training_range(rng):
    X = rng.normal(size=(100, 3))
    P = fit_pca(X, 2)
    Z = project(X, P)
    assert np.allclose(Z.min(axis=0), -1) and np.allclose(Z.max(axis=0), 1)
    assert np.all(np.abs(project(10 * X, P)) <= 1)


def test_projection_roundtrip(rng):
    P = fit_dca(rng.normal(size=(50, 3)), np.arange(50) % 2, 2)
    Q = ProjectionMatrix.from_dict(P.to_dict())
    assert np.array_equal(P.matrix, Q.matrix) and np.array_equal(P.out_max, Q.out_max)
