"""Constructors of influence sets for the supported statistical problems
(location, regression, GLM, covariance, meta-regression), the
affine-invariant normalization, and the projected triangle objective."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    DimensionError,
    InfluenceSet,
    InfluenceSpace,
    ValidationError,
    _as_2d,
)


@dataclass(frozen=True)
class GlmFamily:
    """Canonical-link GLM family; b' is the mean function."""

    name: str

    def __post_init__(self):
        if self.name not in ("gaussian", "logistic", "poisson"):
            raise ValidationError(f"unknown GLM family {self.name!r}")

    def mean(self, theta):
        theta = np.asarray(theta, float)
        if self.name == "gaussian":
            return theta
        if self.name == "logistic":
            # numerically stable sigmoid
            out = np.empty_like(theta)
            pos = theta >= 0
            out[pos] = 1.0 / (1.0 + np.exp(-theta[pos]))
            e = np.exp(theta[~pos])
            out[~pos] = e / (1.0 + e)
            return out
        return np.exp(theta)

    def mean_deriv(self, theta):
        """b''(theta), the derivative of the mean function."""
        theta = np.asarray(theta, float)
        if self.name == "gaussian":
            return np.ones_like(theta)
        if self.name == "logistic":
            mu = self.mean(theta)
            return mu * (1.0 - mu)
        return np.exp(theta)

    def check_response(self, Y):
        Y = np.asarray(Y, float)
        if self.name == "logistic" and (np.min(Y) < 0 or np.max(Y) > 1):
            raise ValidationError("logistic responses must lie in [0, 1]")
        if self.name == "poisson" and np.min(Y) < 0:
            raise ValidationError("poisson responses must be nonnegative")


GAUSSIAN = GlmFamily("gaussian")
LOGISTIC = GlmFamily("logistic")
POISSON = GlmFamily("poisson")


def location_influences(Z, mu):
    """Influences mu - z_i of the mean estimating equation, stored in
    factored form with a constant predictor column."""
    Z = _as_2d(Z, "Z")
    mu = np.asarray(mu, float).ravel()
    if mu.size != Z.shape[1]:
        raise DimensionError(f"point of dimension {mu.size}, data of dimension "
                             f"{Z.shape[1]}")
    n = Z.shape[0]
    return InfluenceSet.factored(np.ones((n, 1)), mu[None, :] - Z)


def regression_influences(X, y, beta):
    """Influences (x_i^T beta - y_i) x_i of least-squares regression."""
    X = _as_2d(X, "X")
    y = np.asarray(y, float).ravel()
    beta = np.asarray(beta, float).ravel()
    if y.size != X.shape[0]:
        raise DimensionError("y must have one entry per row of X")
    if beta.size != X.shape[1]:
        raise DimensionError("beta must match the number of predictors")
    resid = X @ beta - y
    return InfluenceSet.factored(X, resid[:, None])


def glm_influences(X, Y, B, family):
    """Influences x_i (b'(B^T x_i) - y_i)^T of a canonical-link GLM."""
    X = _as_2d(X, "X")
    Y = _as_2d(Y, "Y")
    B = np.asarray(B, float)
    if B.ndim == 1:
        B = B.reshape(X.shape[1], -1)
    if X.shape[0] != Y.shape[0]:
        raise DimensionError("X and Y must have the same number of rows")
    if B.shape != (X.shape[1], Y.shape[1]):
        raise DimensionError(f"coefficient shape {B.shape}, expected "
                             f"{(X.shape[1], Y.shape[1])}")
    family.check_response(Y)
    R = family.mean(X @ B) - Y
    return InfluenceSet.factored(X, R)


def covariance_influences(Y, Sigma):
    """Influences (y_i y_i^T - Sigma)/n of Gaussian covariance
    estimation; the direction is constrained to symmetric matrices."""
    Y = _as_2d(Y, "Y")
    Sigma = np.asarray(Sigma, float)
    m = Y.shape[1]
    if Sigma.shape != (m, m):
        raise DimensionError(f"covariance of shape {Sigma.shape}, expected {(m, m)}")
    if np.max(np.abs(Sigma - Sigma.T)) > 1e-10:
        raise ValidationError("Sigma must be symmetric")
    try:
        np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError:
        raise ValidationError("Sigma must be positive definite")
    n = Y.shape[0]
    T = np.stack([(np.outer(y, y) - Sigma).ravel() / n for y in Y])
    return InfluenceSet.explicit(T, shape=(m, m), space=InfluenceSpace.symmetric())


def meta_influences(blocks, beta, Sigma):
    """Influences of the between-study covariance in multivariate
    meta-regression.

    blocks is a list of (y_i, X_i, Sigma_i); the influence at study i is
    (S + S_i)^{-1} (S + S_i - R_i) (S + S_i)^{-1} with
    R_i = (y_i - X_i beta)(y_i - X_i beta)^T.
    """
    beta = np.asarray(beta, float).ravel()
    Sigma = np.asarray(Sigma, float)
    m = Sigma.shape[0]
    try:
        np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError:
        raise ValidationError("Sigma must be positive definite")
    rows = []
    for i, (y_i, X_i, Sigma_i) in enumerate(blocks):
        y_i = np.asarray(y_i, float).ravel()
        X_i = np.atleast_2d(np.asarray(X_i, float))
        Sigma_i = np.asarray(Sigma_i, float)
        resid = y_i - X_i @ beta
        R_i = np.outer(resid, resid)
        S = Sigma + Sigma_i
        try:
            Sinv = np.linalg.inv(S)
        except np.linalg.LinAlgError:
            raise ValidationError(f"Sigma + Sigma_i is singular at block {i}")
        T_i = Sinv @ (S - R_i) @ Sinv
        rows.append(T_i.ravel())
    return InfluenceSet.explicit(np.stack(rows), shape=(m, m),
                                 space=InfluenceSpace.symmetric())


def normalize_influences(inf, rank_tol=1e-10):
    """Affine-invariant normalization: replace the vectorized influence
    matrix by the rows of its left singular basis.

    The resulting depth only depends on the original influences through
    their row space, which yields affine invariance of the objective for
    any discrepancy function.
    """
    T = inf.explicit_matrix()
    U, s, _ = np.linalg.svd(T, full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        raise ValidationError("cannot normalize an all-zero influence matrix")
    rank = int(np.sum(s > rank_tol * s[0]))
    return InfluenceSet.explicit(U[:, :rank], shape=(1, rank))


def _augmented(P, col):
    out = np.empty(3)
    out[:2] = col
    out[2] = 1.0
    return out


def triangle_objective(Z, mu, phi, V, cond_tol=1e-10):
    """Smoothed projected simplicial depth objective: the sum over point
    triples of the product of phi applied to the barycentric coordinates
    of the projected target.

    V is an m x 2 column-orthonormal projection.  Degenerate (nearly
    collinear) projected triples are excluded; their count is available
    via triangle_objective_detailed.
    """
    value, _ = triangle_objective_detailed(Z, mu, phi, V, cond_tol=cond_tol)
    return value


def triangle_objective_detailed(Z, mu, phi, V, cond_tol=1e-10):
    Z = _as_2d(Z, "Z")
    mu = np.asarray(mu, float).ravel()
    V = np.asarray(V, float)
    m = Z.shape[1]
    if V.shape != (m, 2):
        raise DimensionError(f"projection of shape {V.shape}, expected {(m, 2)}")
    if np.max(np.abs(V.T @ V - np.eye(2))) > 1e-8:
        raise ValidationError("projection matrix must be column-orthonormal")
    P = Z @ V  # n x 2 projected points
    q = np.append(mu @ V, 1.0)
    n = Z.shape[0]
    total = 0.0
    excluded = 0
    for i, j, k in itertools.combinations(range(n), 3):
        M = np.column_stack([
            np.append(P[i], 1.0), np.append(P[j], 1.0), np.append(P[k], 1.0)
        ])
        sv = np.linalg.svd(M, compute_uv=False)
        if sv[-1] < cond_tol * sv[0]:
            excluded += 1
            continue
        xi = np.linalg.solve(M, q)
        total += float(np.prod(phi.value(xi)))
    return total, excluded
