"""The four linear whitening transforms and their stability diagnostics.

A whitening matrix W for a distribution with covariance S satisfies
W S W^T = I (equivalently W^T W = S^{-1}).  The four constructions:

    zca       W = Z T^{-1/2} Z^T        symmetric inverse square root of S
    pca       W = T^{-1/2} Z^T          rotate to principal axes, then rescale
    cholesky  W = C^{-1}                S = C C^T, W lower triangular
    zca_cor   W = O L^{-1/2} O^T V^{-1/2}   symmetric root of P^{-1}, after
                                            rescaling by the variances

where S = Z T Z^T and P = O L O^T are the eigendecompositions of the
covariance and correlation matrices.  cholesky and zca_cor are scale
stable: rescaling the input components by any positive diagonal matrix
leaves the whitened output unchanged.  pca is not.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DataError, NegativityWarning, NumericalError
from .sample import (
    DEGENERACY_RTOL,
    MomentSummary,
    WeightedSample,
    cholesky_lower,
    moments,
    sym_eigen,
)

METHODS = ("zca", "pca", "cholesky", "zca_cor")

# Whitened entries more negative than this (relative to the largest whitened
# magnitude) trigger the negativity diagnostic.
NEGATIVITY_RTOL = 1e-9


@dataclass(frozen=True)
class WhiteningTransform:
    """A fitted whitening matrix with its method tag and diagnostics.

    ``whiteness_residual`` is max|W S W^T - I| for the covariance S the
    transform was fitted on.
    """

    method: str
    matrix: np.ndarray
    fitted_moments: MomentSummary
    whiteness_residual: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, sample: WeightedSample) -> WeightedSample:
        """Whiten a sample: map every support point by the fitted matrix.

        Weights are unchanged.  If the input is non-negative but the
        whitened points have negative entries beyond the diagnostic
        tolerance, a :class:`NegativityWarning` is emitted (the transform
        does not preserve the non-negative orthant for every correlation
        structure).
        """
        if sample.dim != self.dim:
            raise DataError(f"sample has dimension {sample.dim}, transform expects {self.dim}")
        out = sample.points @ self.matrix.T
        if np.all(sample.points >= 0.0):
            worst = float(out.min()) if out.size else 0.0
            scale = max(1.0, float(np.abs(out).max()))
            if worst < -NEGATIVITY_RTOL * scale:
                warnings.warn(
                    f"whitening a non-negative sample produced negative entries "
                    f"(worst {worst:.3e})",
                    NegativityWarning,
                    stacklevel=2,
                )
        return WeightedSample(out, sample.weights)


def _spd_eigen(m: MomentSummary):
    """Eigendecomposition of the covariance, rejecting singular/indefinite input."""
    eig = sym_eigen(m.covariance)
    tol = DEGENERACY_RTOL * max(float(np.max(m.variances)), 0.0)
    smallest = float(eig.eigenvalues[-1])
    if smallest <= tol:
        raise NumericalError(
            f"covariance is singular or indefinite: smallest eigenvalue {smallest:.3e}"
        )
    return eig


def _make_transform(method: str, matrix: np.ndarray, m: MomentSummary) -> WhiteningTransform:
    wsw = matrix @ m.covariance @ matrix.T
    residual = float(np.abs(wsw - np.eye(matrix.shape[0])).max())
    return WhiteningTransform(method=method, matrix=matrix, fitted_moments=m,
                              whiteness_residual=residual)


def fit_zca(m: MomentSummary) -> WhiteningTransform:
    """Symmetric (Mahalanobis) whitening: the inverse square root of the covariance."""
    eig = _spd_eigen(m)
    z = eig.eigenvectors
    w = (z * eig.eigenvalues**-0.5) @ z.T
    return _make_transform("zca", w, m)


def fit_pca(m: MomentSummary) -> WhiteningTransform:
    """Principal-component whitening: rotate to eigen-axes, then rescale.

    Deterministic under the sign convention of :func:`sym_eigen`, but not
    scale stable.
    """
    eig = _spd_eigen(m)
    w = eig.eigenvectors.T * eig.eigenvalues[:, None]**-0.5
    return _make_transform("pca", w, m)


def fit_cholesky(m: MomentSummary) -> WhiteningTransform:
    """Triangular whitening: W = C^{-1} for the factorization S = C C^T.

    W is lower triangular with positive diagonal, and the triangular
    structure is what makes this transform scale stable.
    """
    c = cholesky_lower(m.covariance)
    w = solve_triangular(c, np.eye(c.shape[0]), lower=True)
    return _make_transform("cholesky", w, m)


def fit_zca_cor(m: MomentSummary) -> WhiteningTransform:
    """Correlation whitening: symmetric root of P^{-1} after variance rescaling.

    W = O L^{-1/2} O^T V^{-1/2} where P = O L O^T.  The symmetric-root
    selection is the canonical one for inequality measurement; the
    correlation matrix is scale invariant, so the transform is scale stable.
    """
    if m.zero_variance:
        raise NumericalError(
            f"zero variance in component(s) {list(m.zero_variance)}; "
            "correlation whitening is undefined"
        )
    eig = sym_eigen(m.correlation)
    tol = DEGENERACY_RTOL
    smallest = float(eig.eigenvalues[-1])
    if smallest <= tol:
        raise NumericalError(
            f"correlation matrix is singular or indefinite: smallest eigenvalue {smallest:.3e}"
        )
    o = eig.eigenvectors
    p_inv_root = (o * eig.eigenvalues**-0.5) @ o.T
    w = p_inv_root / np.sqrt(m.variances)[None, :]
    return _make_transform("zca_cor", w, m)


_FITTERS = {
    "zca": fit_zca,
    "pca": fit_pca,
    "cholesky": fit_cholesky,
    "zca_cor": fit_zca_cor,
}


def fit_whitening(method: str, m: MomentSummary) -> WhiteningTransform:
    """Fit one of the four whitening transforms by name."""
    try:
        fitter = _FITTERS[method]
    except KeyError:
        raise DataError(f"unknown whitening method {method!r}; choose from {METHODS}") from None
    return fitter(m)


def scale_stability_check(method: str, sample: WeightedSample, q) -> float:
    """Max-abs deviation between whitening a sample and whitening its rescaling.

    Fits the method on the sample and on the componentwise-rescaled sample
    Q·X (q strictly positive), whitens each with its own fit, and returns
    the largest entrywise difference between the two whitened point sets.
    Zero (up to roundoff) exactly when the whitening process is scale
    stable; generically large for pca.
    """
    q = np.asarray(q, dtype=float).reshape(-1)
    if np.any(q <= 0) or not np.all(np.isfinite(q)):
        raise DataError("scale factors must be strictly positive and finite")
    base = fit_whitening(method, moments(sample))
    scaled_sample = sample.scaled(q)
    scaled = fit_whitening(method, moments(scaled_sample))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NegativityWarning)
        y_base = base.apply(sample).points
        y_scaled = scaled.apply(scaled_sample).points
    return float(np.abs(y_scaled - y_base).max())
