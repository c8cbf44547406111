"""Independent exact depth computations at desk scale, used to verify
the optimization-based solvers: sign enumeration in 1D, an angular sweep
in 2D, candidate-normal enumeration in 3D, exact simplicial depth, and
1D depth curves over a grid."""

from __future__ import annotations

import itertools

import numpy as np

from .model import (
    DimensionError,
    InfluenceSet,
    RIGHT_CLOSED,
    ValidationError,
    classify_signs,
)


def _explicit(influences, dim):
    if isinstance(influences, InfluenceSet):
        T = influences.explicit_matrix()
    else:
        T = np.asarray(influences, float)
        if T.ndim == 1:
            T = T.reshape(-1, 1)
    if T.shape[1] != dim:
        raise DimensionError(f"expected dimension {dim}, got {T.shape[1]}")
    return T


def _count(T, v, convention):
    return float(np.sum(classify_signs(T @ v, convention)))


def exact_depth_1d(influences, convention=RIGHT_CLOSED):
    """Exact 0-1 depth for scalar influences: minimum over v = +/-1."""
    T = _explicit(influences, 1)
    return min(_count(T, np.array([1.0]), convention),
               _count(T, np.array([-1.0]), convention))


def exact_depth_2d(influences, convention=RIGHT_CLOSED):
    """Exact 0-1 depth for planar influences via an angular sweep.

    The count as a function of the direction angle is piecewise constant
    with breakpoints perpendicular to the influences; evaluating at every
    breakpoint and at every arc midpoint is exact for both conventions.
    """
    T = _explicit(influences, 2)
    nonzero = T[np.linalg.norm(T, axis=1) > 0]
    if nonzero.shape[0] == 0:
        return _count(T, np.array([1.0, 0.0]), convention)
    ang = np.arctan2(nonzero[:, 1], nonzero[:, 0])
    crit = np.unique(np.mod(np.concatenate([ang + np.pi / 2, ang - np.pi / 2]),
                            2 * np.pi))
    mids = np.mod((crit + np.roll(crit, -1)) / 2.0, 2 * np.pi)
    # wraparound arc midpoint
    mids[-1] = np.mod((crit[-1] + crit[0] + 2 * np.pi) / 2.0, 2 * np.pi)
    thetas = np.concatenate([crit, mids])
    dirs = np.column_stack([np.cos(thetas), np.sin(thetas)])
    counts = np.sum(classify_signs(T @ dirs.T, convention), axis=0)
    return float(np.min(counts))


def _vertex_perturbations(v0, t_i, t_j, T):
    """Open-cell sample points adjacent to the arrangement vertex v0
    (orthogonal to t_i and t_j): four dual-basis perturbations whose
    magnitude keeps all other strict signs unchanged."""
    gram = np.array([[t_i @ t_i, t_i @ t_j], [t_j @ t_i, t_j @ t_j]])
    try:
        coef = np.linalg.solve(gram, np.eye(2))
    except np.linalg.LinAlgError:
        return []
    d_i = coef[0, 0] * t_i + coef[1, 0] * t_j
    d_j = coef[0, 1] * t_i + coef[1, 1] * t_j
    prods = T @ v0
    nz = np.abs(prods)[np.abs(prods) > 1e-12]
    delta = np.min(nz) if nz.size else 1.0
    tnorm = np.max(np.linalg.norm(T, axis=1)) or 1.0
    eps = delta / (2.0 * (np.linalg.norm(d_i) + np.linalg.norm(d_j) + 1e-300) * tnorm)
    eps = min(eps, 1e-3)
    out = []
    for s1 in (-1.0, 1.0):
        for s2 in (-1.0, 1.0):
            out.append(v0 + eps * (s1 * d_i + s2 * d_j))
    return out


def exact_depth_3d(influences, convention=RIGHT_CLOSED, max_n=200):
    """Exact 0-1 depth for 3D influences by enumerating candidate
    normals: the optimum is attained inside an open cell of the
    great-circle arrangement, and each open cell is reached by
    perturbing a pairwise cross product (or +/- an influence when fewer
    than two independent circles exist)."""
    T = _explicit(influences, 3)
    n = T.shape[0]
    if n > max_n:
        raise ValidationError(f"3D oracle limited to n <= {max_n} (O(n^2) candidates)")
    norms = np.linalg.norm(T, axis=1)
    nz_idx = np.where(norms > 0)[0]
    cands = [np.array([1.0, 0.0, 0.0])]
    for i in nz_idx:
        u = T[i] / norms[i]
        cands.extend([u, -u])
    for a, b in itertools.combinations(nz_idx, 2):
        c = np.cross(T[a], T[b])
        cn = np.linalg.norm(c)
        if cn <= 1e-12 * norms[a] * norms[b]:
            continue
        for v0 in (c / cn, -c / cn):
            cands.append(v0)
            cands.extend(_vertex_perturbations(v0, T[a], T[b], T))
    best = np.inf
    C = np.array(cands)
    for lo in range(0, C.shape[0], 8192):
        block = C[lo:lo + 8192]
        counts = np.sum(classify_signs(T @ block.T, convention), axis=0)
        best = min(best, float(np.min(counts)))
    return best


class DegenerateConfigurationError(ValidationError):
    def __init__(self, triples):
        self.triples = triples
        super().__init__(f"degenerate configuration at triples {triples[:10]}"
                         + ("..." if len(triples) > 10 else ""))


def simplicial_depth_2d(Z, mu, tol=1e-9):
    """Count of triangles over point triples that contain mu, by the
    sign of the barycentric coordinates.  Raises when a triple is
    (nearly) collinear or mu sits on a triangle edge."""
    Z = np.asarray(Z, float)
    if Z.ndim != 2 or Z.shape[1] != 2:
        raise DimensionError("simplicial oracle expects n x 2 data")
    mu = np.asarray(mu, float).ravel()
    q = np.append(mu, 1.0)
    count = 0
    bad = []
    scale = max(1.0, float(np.max(np.abs(Z))))
    for i, j, k in itertools.combinations(range(Z.shape[0]), 3):
        M = np.column_stack([np.append(Z[i], 1.0), np.append(Z[j], 1.0),
                             np.append(Z[k], 1.0)])
        det = np.linalg.det(M)
        if abs(det) <= tol * scale**2:
            bad.append((i, j, k))
            continue
        xi = np.linalg.solve(M, q)
        if np.min(np.abs(xi)) <= tol and np.min(xi) >= -tol:
            bad.append((i, j, k))
            continue
        if np.all(xi > 0):
            count += 1
    if bad:
        raise DegenerateConfigurationError(bad)
    return count


def grid_depth_curve(Z, phi, grid, form="one_sided"):
    """1D depth curve: for each grid value mu, the exact minimum over
    v in {+1, -1} of the phi-objective on influences mu - z_i, scaled by
    1/n.  The contrast form reports 1/2 + min/(2n) instead."""
    Z = np.asarray(Z, float).ravel()
    n = Z.size
    out = []
    for mu in np.asarray(grid, float).ravel():
        t = mu - Z
        vals = min(float(np.sum(phi.value(t))), float(np.sum(phi.value(-t))))
        if form == "contrast":
            out.append((float(mu), 0.5 + vals / (2.0 * n)))
        elif form == "one_sided":
            out.append((float(mu), vals / n))
        else:
            raise ValidationError(f"unknown curve form {form!r}")
    return out
