"""Linear dimensionality reduction applied before perturbation.

``fit_pca`` keeps the top-variance directions of the sample covariance.
``fit_dca`` is a Fisher-style discriminant projection: the leading
generalized eigenvectors of the between-class scatter against the
ridge-regularized within-class scatter.

Both return a :class:`ProjectionMatrix` that also records the min/max of the
projected training data so :func:`project` can map outputs to [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DegenerateDataError, DegenerateLabelsError, InvalidDimsError

DEFAULT_RIDGE = 1e-3


@dataclass(frozen=True)
class ProjectionMatrix:
    matrix: np.ndarray  # (r, n), unit-norm rows
    feature_means: np.ndarray  # (n,)
    method: str
    eigenvalues: np.ndarray  # (r,)
    out_min: np.ndarray | None = None
    out_max: np.ndarray | None = None

    @property
    def n_in(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_out(self) -> int:
        return self.matrix.shape[0]

    def to_dict(self):
        return {
            "method": self.method,
            "matrix": self.matrix.tolist(),
            "feature_means": self.feature_means.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "out_min": None if self.out_min is None else self.out_min.tolist(),
            "out_max": None if self.out_max is None else self.out_max.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        opt = lambda key: None if d.get(key) is None else np.asarray(d[key], dtype=float)  # noqa: E731
        return cls(np.asarray(d["matrix"], dtype=float), np.asarray(d["feature_means"], dtype=float),
                   d["method"], np.asarray(d["eigenvalues"], dtype=float),
                   opt("out_min"), opt("out_max"))


def _fix_signs(vectors):
    # columns are eigenvectors; make each one's largest-magnitude entry positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _as_matrix(data, r):
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise InvalidDimsError("data must be an (m, n) matrix")
    m, n = X.shape
    if not 1 <= r <= n:
        raise InvalidDimsError(f"target dims r={r} must satisfy 1 <= r <= n={n}")
    if m < 2:
        raise DegenerateDataError("need at least 2 rows")
    return X


def _with_output_range(P: ProjectionMatrix, X) -> ProjectionMatrix:
    Z = (X - P.feature_means) @ P.matrix.T
    return ProjectionMatrix(P.matrix, P.feature_means, P.method, P.eigenvalues,
                            Z.min(axis=0), Z.max(axis=0))


def fit_pca(data, r: int) -> ProjectionMatrix:
    X = _as_matrix(data, r)
    means = X.mean(axis=0)
    cov = np.cov(X - means, rowvar=False, ddof=1).reshape(X.shape[1], X.shape[1])
    if np.trace(cov) <= 0:
        raise DegenerateDataError("data has zero variance")
    evals, evecs = linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:r]
    vecs = _fix_signs(evecs[:, order])
    P = ProjectionMatrix(vecs.T.copy(), means, "pca", evals[order])
    return _with_output_range(P, X)


def scatter_matrices(data, labels):
    """Within- and between-class scatter, each divided by the row count."""
    X = np.asarray(data, dtype=float)
    labels = np.asarray(labels)
    m, n = X.shape
    mean = X.mean(axis=0)
    sw = np.zeros((n, n))
    sb = np.zeros((n, n))
    for c in np.unique(labels):
        Xc = X[labels == c]
        mc = Xc.mean(axis=0)
        D = Xc - mc
        sw += D.T @ D
        diff = (mc - mean)[:, None]
        sb += len(Xc) * (diff @ diff.T)
    return sw / m, sb / m


def fit_dca(data, labels, r: int, ridge: float = DEFAULT_RIDGE) -> ProjectionMatrix:
    X = _as_matrix(data, r)
    labels = np.asarray(labels)
    if len(labels) != len(X):
        raise InvalidDimsError("labels and data differ in length")
    if len(np.unique(labels)) < 2:
        raise DegenerateLabelsError("DCA needs at least two distinct class labels")
    if ridge <= 0:
        raise InvalidDimsError("ridge must be positive")
    sw, sb = scatter_matrices(X, labels)
    n = X.shape[1]
    evals, evecs = linalg.eigh(sb, sw + ridge * np.eye(n))
    order = np.argsort(evals)[::-1][:r]
    vecs = evecs[:, order]
    vecs = _fix_signs(vecs / np.linalg.norm(vecs, axis=0))
    P = ProjectionMatrix(vecs.T.copy(), X.mean(axis=0), "dca", evals[order])
    return _with_output_range(P, X)


def project(x, P: ProjectionMatrix, normalize: bool = True):
    """Center and project ``x`` (a vector or an ``(m, n)`` matrix).

    With ``normalize`` the outputs are mapped affinely so the training data's
    projected range becomes [-1, 1]; values beyond it are clipped.
    """
    X = np.asarray(x, dtype=float)
    if X.shape[-1] != P.n_in:
        raise InvalidDimsError(f"expected {P.n_in} input dims, got {X.shape[-1]}")
    Z = (X - P.feature_means) @ P.matrix.T
    if not normalize:
        return Z
    if P.out_min is None:
        raise InvalidDimsError("projection has no recorded output range")
    span = P.out_max - P.out_min
    span = np.where(span > 0, span, 1.0)
    return np.clip(2.0 * (Z - P.out_min) / span - 1.0, -1.0, 1.0)
