"""Closed-form projections onto the feasible sets used by the solvers:
the unit sphere intersected with a linear influence space, sparse unit
vectors via quantile thresholding, affine-constrained unit vectors, and
subspace-constrained Stiefel frames via the polar factor."""

from __future__ import annotations

import numpy as np

from .model import (
    DegeneracyError,
    Direction,
    DimensionError,
    InfeasibleError,
    InfluenceSpace,
)

_TINY = 1e-300


def _orth_projector(A):
    """Orthogonal projector onto the column space of A."""
    U, s, _ = np.linalg.svd(np.atleast_2d(A), full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        return np.zeros((A.shape[0], A.shape[0]))
    r = int(np.sum(s > 1e-12 * s[0]))
    U = U[:, :r]
    return U @ U.T


def space_map(Y, space, shape):
    """Apply the orthogonal projector of a linear influence space to the
    p x m matrix Y (the map G(.) of the solvers).

    For "linear_constraint" only the homogeneous case a = 0 is linear
    and handled here (coordinates in omega are zeroed out).
    """
    p, m = shape
    Y = np.asarray(Y, float).reshape(p, m)
    kind = space.kind
    if kind == "full":
        return Y
    if kind == "symmetric":
        return 0.5 * (Y + Y.T)
    if kind == "subspace":
        PA = _orth_projector(space.A)
        PB = _orth_projector(space.B)
        return PA @ Y @ PB
    if kind == "linear_constraint":
        if space.a is not None and np.any(space.a != 0):
            raise DimensionError(
                "inhomogeneous linear constraints are not a linear space; "
                "use project_linear_constraint"
            )
        y = Y.ravel().copy()
        omega = _constraint_support(space, p * m)
        y[list(omega)] = 0.0
        return y.reshape(p, m)
    raise DimensionError(f"space kind {kind!r} has no linear projector")


def _constraint_support(space, dim):
    omega = space.omega if space.omega is not None else tuple(range(dim))
    return omega


def project_sphere(Y):
    """Normalize Y onto the unit Frobenius sphere.

    A (numerically) zero input maps to the deterministic fallback with
    all mass on the first entry, flagged as degenerate.
    """
    Y = np.asarray(Y, float)
    nrm = np.linalg.norm(Y)
    if nrm < _TINY:
        V = np.zeros_like(Y, dtype=float)
        V.flat[0] = 1.0
        return Direction(V, degenerate=True)
    return Direction(Y / nrm)


def project_subspace_sphere(Y, space, shape=None):
    """Project onto {V in G : ||V||_F = 1} for a linear space G: apply
    the orthogonal projector of G, then normalize."""
    Y = np.asarray(Y, float)
    if shape is None:
        shape = Y.reshape(Y.shape if Y.ndim == 2 else (-1, 1)).shape
        if Y.ndim == 1:
            shape = (Y.size, 1)
    P = space_map(Y, space, shape)
    out = project_sphere(P)
    return Direction(out.V.reshape(np.asarray(Y).shape), degenerate=out.degenerate)


def project_linear_constraint(y, A, a, omega=None):
    """Closest unit vector to y satisfying A y_omega = a.

    Returns a Direction over the full vector.  Requires a in the column
    space of A and ||A^+ a||_2 <= 1.
    """
    y = np.asarray(y, float).ravel()
    A = np.atleast_2d(np.asarray(A, float))
    a = np.atleast_1d(np.asarray(a, float))
    dim = y.size
    omega = tuple(omega) if omega is not None else tuple(range(dim))
    if A.shape[1] != len(omega):
        raise DimensionError("constraint matrix width must match |omega|")
    # embed the constraint into the full space
    Afull = np.zeros((A.shape[0], dim))
    Afull[:, list(omega)] = A
    Aplus = np.linalg.pinv(Afull)
    base = Aplus @ a
    resid = Afull @ base - a
    if np.linalg.norm(resid) > 1e-10 * max(1.0, np.linalg.norm(a)):
        raise InfeasibleError("a is not in the column space of A")
    base_norm = np.linalg.norm(base)
    if base_norm > 1.0 + 1e-12:
        raise InfeasibleError("||A^+ a||_2 > 1: the constraint misses the sphere")
    # component of y orthogonal to the row space of the embedded constraint
    Prow = _orth_projector(Afull.T)
    y_perp = y - Prow @ y
    scale = np.sqrt(max(0.0, 1.0 - base_norm**2))
    nrm = np.linalg.norm(y_perp)
    if scale <= 1e-15:
        return Direction(base / max(base_norm, _TINY))
    if nrm < _TINY:
        # deterministic completion: first basis direction of the orthogonal
        # complement of the row space
        comp = np.eye(dim) - Prow
        q = None
        for j in range(dim):
            col = comp[:, j]
            if np.linalg.norm(col) > 1e-12:
                q = col / np.linalg.norm(col)
                break
        if q is None:
            raise DegeneracyError("constraint determines the whole space but misses "
                                  "the sphere")
        return Direction(base + scale * q, degenerate=True)
    return Direction(base + scale * y_perp / nrm)


def project_sparse(y, s):
    """Closest unit vector to y with at most s nonzeros: keep the s
    largest-magnitude entries (ties broken by lowest index), normalize."""
    y = np.asarray(y, float).ravel()
    p = y.size
    s = int(s)
    if not 1 <= s <= p:
        raise DimensionError(f"sparsity {s} out of range for dimension {p}")
    if np.linalg.norm(y) < _TINY:
        v = np.zeros(p)
        v[0] = 1.0
        return Direction(v, degenerate=True)
    order = np.argsort(-np.abs(y), kind="stable")
    keep = order[:s]
    v = np.zeros(p)
    v[keep] = y[keep]
    nrm = np.linalg.norm(v)
    if nrm < _TINY:
        v = np.zeros(p)
        v[0] = 1.0
        return Direction(v, degenerate=True)
    return Direction(v / nrm)


def project_stiefel(Y, space=None, shape=None, r=None):
    """Polar factor of the space-projected matrix: the closest
    column-orthonormal frame with columns in the (linear) space.

    Y is pm x r; each column is mapped through the space projector, and
    the polar factor is computed via SVD for numerical stability.
    """
    Y = np.asarray(Y, float)
    if Y.ndim != 2:
        raise DimensionError("Stiefel projection expects a pm x r matrix")
    r = Y.shape[1] if r is None else r
    G = Y
    if space is not None and space.kind != "full":
        if shape is None:
            raise DimensionError("shape (p, m) required for non-full spaces")
        G = np.column_stack([
            space_map(Y[:, j], space, shape).ravel() for j in range(Y.shape[1])
        ])
    U, sv, Vt = np.linalg.svd(G, full_matrices=False)
    if sv[0] <= 0 or sv[-1] < 1e-12 * sv[0]:
        raise DegeneracyError(
            f"rank-deficient Stiefel projection: singular values {sv}"
        )
    O = U @ Vt
    return Direction(O, r=r)


def project_direction(Y, space, shape):
    """Projection onto the full feasible set {V in G, ||V||_F = 1} of an
    influence space, dispatching on the space kind."""
    Y = np.asarray(Y, float)
    if space.kind == "sparse":
        out = project_sparse(Y.ravel(), space.s)
        return Direction(out.V.reshape(shape), degenerate=out.degenerate)
    if space.kind == "linear_constraint" and space.a is not None and np.any(space.a != 0):
        out = project_linear_constraint(Y.ravel(), space.A, space.a, space.omega)
        return Direction(out.V.reshape(shape), degenerate=out.degenerate)
    return project_subspace_sphere(Y.reshape(shape), space, shape)


def space_membership(V, space, shape, tol=1e-10):
    """Distance-based membership test of a direction in its space."""
    V = np.asarray(V, float).reshape(shape)
    if space.kind == "sparse":
        return int(np.sum(np.abs(V) > tol)) <= space.s
    if space.kind == "linear_constraint":
        A = np.atleast_2d(space.A)
        omega = list(_constraint_support(space, V.size))
        return np.linalg.norm(A @ V.ravel()[omega] - space.a) <= tol * max(
            1.0, np.linalg.norm(space.a)
        )
    P = space_map(V, space, shape)
    return float(np.max(np.abs(P - V))) <= tol
