"""Core domain types shared by all depth computations.

All types here are immutable after construction and safe to share across
threads.  Matrices are vectorized with row-major (C-order) flattening
throughout the package; inner products are flattening-invariant so any
consistent choice works.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

ZERO_TOL = 1e-12  # absolute tolerance when classifying projection signs

RIGHT_CLOSED = "right_closed"
HALF_AT_ZERO = "half_at_zero"
CONVENTIONS = (RIGHT_CLOSED, HALF_AT_ZERO)


class DepthError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(DepthError):
    """Incompatible shapes between data, directions, or spaces."""


class ValidationError(DepthError):
    """Invalid input data or parameters."""


class DegeneracyError(DepthError):
    """A projection or decomposition degenerated (rank deficiency etc.)."""


class InfeasibleError(DepthError):
    """A constraint set is empty or a target is outside the feasible set."""


class SolverError(DepthError):
    """The optimization engine failed to make progress."""


def _as_2d(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 1- or 2-dimensional, got ndim={M.ndim}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} contains NaN or Inf entries")
    return M


@dataclass(frozen=True)
class Dataset:
    """Predictor/response matrices for one sample.

    Location problems use the convention of a single constant predictor
    column, so one code path serves location and regression.
    """

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "X", _as_2d(self.X, "X"))
        object.__setattr__(self, "Y", _as_2d(self.Y, "Y"))
        if self.X.shape[0] != self.Y.shape[0]:
            raise DimensionError(
                f"X has {self.X.shape[0]} rows but Y has {self.Y.shape[0]}"
            )
        if self.X.shape[0] < 1:
            raise ValidationError("need at least one observation")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def m(self):
        return self.Y.shape[1]


@dataclass(frozen=True)
class InfluenceSpace:
    """The linear (or sparse) set the influences and directions live in.

    kind is one of "full", "symmetric", "subspace", "linear_constraint",
    "sparse".  Symmetric applies to square m x m influence shapes;
    subspace stores A, B defining {A C B^T}; linear_constraint stores
    (A, a, omega) with the constraint A v_omega = a on the vectorized
    direction; sparse stores the support size s.
    """

    kind: str = "full"
    A: Optional[np.ndarray] = None
    B: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None
    omega: Optional[tuple] = None
    s: Optional[int] = None

    @staticmethod
    def full():
        return InfluenceSpace("full")

    @staticmethod
    def symmetric():
        return InfluenceSpace("symmetric")

    @staticmethod
    def subspace(A, B):
        return InfluenceSpace("subspace", A=np.asarray(A, float), B=np.asarray(B, float))

    @staticmethod
    def linear_constraint(A, a, omega=None):
        A = np.atleast_2d(np.asarray(A, float))
        a = np.atleast_1d(np.asarray(a, float))
        return InfluenceSpace(
            "linear_constraint", A=A, a=a, omega=None if omega is None else tuple(omega)
        )

    @staticmethod
    def sparse(s):
        s = int(s)
        if s < 1:
            raise ValidationError("sparsity level must be >= 1")
        return InfluenceSpace("sparse", s=s)

    def check_shape(self, shape):
        p, m = shape
        if self.kind == "symmetric" and p != m:
            raise DimensionError(
                f"symmetric influence space requires a square shape, got {shape}"
            )
        if self.kind == "sparse" and self.s > p * m:
            raise ValidationError(f"sparsity {self.s} exceeds dimension {p * m}")


@dataclass(frozen=True)
class InfluenceSet:
    """The influences T_i at a hypothesis point.

    Either factored (X, R) with T_i = x_i r_i^T, or explicit with rows
    t_i = vec(T_i) stacked into an n x (p*m) matrix.
    """

    shape: tuple
    space: InfluenceSpace = field(default_factory=InfluenceSpace.full)
    X: Optional[np.ndarray] = None
    R: Optional[np.ndarray] = None
    T: Optional[np.ndarray] = None

    def __post_init__(self):
        p, m = self.shape
        if self.T is not None:
            T = _as_2d(self.T, "T")
            if T.shape[1] != p * m:
                raise DimensionError(
                    f"explicit influences have {T.shape[1]} columns, expected {p * m}"
                )
            object.__setattr__(self, "T", T)
        else:
            if self.X is None or self.R is None:
                raise ValidationError("need either (X, R) or an explicit matrix T")
            X = _as_2d(self.X, "X")
            R = _as_2d(self.R, "R")
            if X.shape[0] != R.shape[0]:
                raise DimensionError("X and R must have the same number of rows")
            if X.shape[1] != p or R.shape[1] != m:
                raise DimensionError(
                    f"factored influences of shape {(X.shape[1], R.shape[1])} do not "
                    f"match declared shape {self.shape}"
                )
            object.__setattr__(self, "X", X)
            object.__setattr__(self, "R", R)
        self.space.check_shape(self.shape)

    @staticmethod
    def factored(X, R, space=None, shape=None):
        X = _as_2d(X, "X")
        R = _as_2d(R, "R")
        if shape is None:
            shape = (X.shape[1], R.shape[1])
        return InfluenceSet(shape=tuple(shape), space=space or InfluenceSpace.full(),
                            X=X, R=R)

    @staticmethod
    def explicit(T, shape=None, space=None):
        T = _as_2d(T, "T")
        if shape is None:
            shape = (1, T.shape[1])
        return InfluenceSet(shape=tuple(shape), space=space or InfluenceSpace.full(),
                            T=T)

    @property
    def is_factored(self):
        return self.T is None

    @property
    def n(self):
        return self.X.shape[0] if self.is_factored else self.T.shape[0]

    @property
    def dim(self):
        p, m = self.shape
        return p * m

    def explicit_matrix(self):
        """The n x (p*m) matrix of vectorized influences."""
        if not self.is_factored:
            return self.T
        # row i is vec(x_i r_i^T)
        return (self.X[:, :, None] * self.R[:, None, :]).reshape(self.n, -1)

    def projections(self, V):
        """Inner products <V, T_i> for a p x m direction matrix V."""
        V = np.asarray(V, float)
        p, m = self.shape
        if V.shape != (p, m):
            raise DimensionError(f"direction of shape {V.shape}, expected {(p, m)}")
        if self.is_factored:
            return np.sum((self.X @ V) * self.R, axis=1)
        return self.T @ V.ravel()


@dataclass(frozen=True)
class Direction:
    """A unit-Frobenius-norm direction (r = 1, p x m matrix) or a
    column-orthonormal pm x r frame (r > 1), constrained to an influence
    space."""

    V: np.ndarray
    r: int = 1
    degenerate: bool = False

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        object.__setattr__(self, "V", V)
        if self.r == 1:
            if abs(np.linalg.norm(V) - 1.0) > 1e-12:
                raise ValidationError("direction must have unit Frobenius norm")
        else:
            if V.ndim != 2 or V.shape[1] != self.r:
                raise DimensionError("r > 1 direction must be a pm x r matrix")
            gram = V.T @ V
            if np.max(np.abs(gram - np.eye(self.r))) > 1e-10:
                raise ValidationError("r > 1 direction must be column-orthonormal")

    def matrix(self, shape):
        """The direction as a p x m matrix (r = 1 only)."""
        return self.V.reshape(shape)


def classify_signs(proj, convention=RIGHT_CLOSED, tol=ZERO_TOL):
    """Per-observation 0-1 contributions of the projections.

    Exact zeros (|x| <= tol) contribute 1 under right_closed and 0.5
    under half_at_zero.
    """
    if convention not in CONVENTIONS:
        raise ValidationError(f"unknown sign convention {convention!r}")
    proj = np.asarray(proj, float)
    pos = proj > tol
    zero = np.abs(proj) <= tol
    if convention == RIGHT_CLOSED:
        return pos.astype(float) + zero.astype(float)
    return pos.astype(float) + 0.5 * zero.astype(float)


def evaluate_d01(influences, direction, convention=RIGHT_CLOSED):
    """The 0-1 depth objective at a fixed direction.

    For r = 1 this is the count of nonnegative projections; for r > 1
    the product indicator over the r projected coordinates is used.
    Returns a float (half contributions are possible under half_at_zero).
    """
    if isinstance(direction, Direction):
        r, V = direction.r, direction.V
    else:
        V = np.asarray(direction, float)
        r = 1 if (V.ndim == 1 or V.shape == influences.shape) else V.shape[1]
    p, m = influences.shape
    if r == 1:
        proj = influences.projections(np.reshape(V, (p, m)))
        return float(np.sum(classify_signs(proj, convention)))
    if V.shape != (p * m, r):
        raise DimensionError(f"direction of shape {V.shape}, expected {(p * m, r)}")
    P = influences.explicit_matrix() @ V  # n x r
    contrib = classify_signs(P, convention)
    return float(np.sum(np.prod(contrib, axis=1)))


@dataclass
class SolverConfig:
    """Step-size, relaxation, annealing, multistart, and termination
    parameters for the depth solvers."""

    phi: str = "tanh"
    c: float = 1.0
    zeta_start: float = 1.0
    zeta_max: float = 10.0
    zeta_factor: float = 1.25
    rho_min: float = 1.0
    beta: float = 2.0
    line_search_max: int = 3
    tol_obj: float = 1e-2
    tol_grad_maxnorm: float = 1.0
    max_iter: int = 5000
    n_starts: int = 10
    seed: Optional[int] = None
    sign_convention: str = RIGHT_CLOSED
    rho_policy: str = "reset"  # "reset" restarts at rho_min each iteration,
    # "monotone" resumes from the previous accepted rho
    keep_iterates: bool = False

    def __post_init__(self):
        if self.tol_obj <= 0 or self.tol_grad_maxnorm <= 0:
            raise ValidationError("tolerances must be positive")
        if self.beta <= 1:
            raise ValidationError("line-search growth factor beta must exceed 1")
        if self.line_search_max < 1:
            raise ValidationError("line-search budget M must be >= 1")
        if self.zeta_factor <= 1:
            raise ValidationError("annealing factor alpha must exceed 1")
        if self.rho_min <= 0:
            raise ValidationError("rho_min must be positive")
        if self.sign_convention not in CONVENTIONS:
            raise ValidationError(f"unknown sign convention {self.sign_convention!r}")
        if self.rho_policy not in ("reset", "monotone"):
            raise ValidationError("rho_policy must be 'reset' or 'monotone'")

    def zeta_schedule(self):
        zetas = []
        z = self.zeta_start
        while z <= self.zeta_max * (1 + 1e-12):
            zetas.append(z)
            z *= self.zeta_factor
        return zetas

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class DepthResult:
    """Final result of a depth computation."""

    d01_count: float
    d01_fraction: float
    smooth_objective: float
    direction: Direction
    iterations: int
    starts_used: int
    wall_time_s: float
    warnings: tuple = ()
