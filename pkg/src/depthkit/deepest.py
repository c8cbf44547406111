"""Composite depth over a constraint region and deepest-point search,
via an outer projected gradient ascent on the hypothesis parameter
wrapped around the inner direction minimization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .influence import (
    GAUSSIAN,
    GlmFamily,
    glm_influences,
    location_influences,
    regression_influences,
)
from .model import (
    DimensionError,
    SolverConfig,
    ValidationError,
    _as_2d,
    evaluate_d01,
)
from .oracle import exact_depth_1d, exact_depth_2d, exact_depth_3d
from .phi import make_phi
from .solver import accelerated_solve, init_directions, objective, sap


@dataclass(frozen=True)
class ConstraintRegion:
    """Feasible set for the hypothesis parameter: the whole space, a
    coordinate box, or an affine subspace {x : A x = b}."""

    kind: str = "unrestricted"
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None

    @staticmethod
    def unrestricted():
        return ConstraintRegion("unrestricted")

    @staticmethod
    def box(lower, upper):
        lower = np.asarray(lower, float).ravel()
        upper = np.asarray(upper, float).ravel()
        if lower.shape != upper.shape or np.any(lower > upper):
            raise ValidationError("box requires lower <= upper elementwise")
        return ConstraintRegion("box", lower=lower, upper=upper)

    @staticmethod
    def singleton(value):
        value = np.asarray(value, float).ravel()
        return ConstraintRegion.box(value, value)

    @staticmethod
    def affine(A, b):
        A = np.atleast_2d(np.asarray(A, float))
        b = np.atleast_1d(np.asarray(b, float))
        if np.linalg.matrix_rank(A) < A.shape[0]:
            raise ValidationError("affine constraint rows must be independent")
        return ConstraintRegion("affine", A=A, b=b)

    def project(self, B):
        x = np.asarray(B, float).ravel()
        if self.kind == "unrestricted":
            return x
        if self.kind == "box":
            return np.clip(x, self.lower, self.upper)
        A, b = self.A, self.b
        lam = np.linalg.solve(A @ A.T, A @ x - b)
        return x - A.T @ lam

    def contains(self, B, tol=1e-12):
        x = np.asarray(B, float).ravel()
        return np.linalg.norm(self.project(x) - x) <= tol * max(1.0, np.linalg.norm(x))


@dataclass(frozen=True)
class DepthProblem:
    """A parametric depth problem: data plus the map from a parameter to
    its influence set."""

    kind: str  # location | regression | glm
    X: Optional[np.ndarray] = None
    Y: np.ndarray = None
    family: GlmFamily = GAUSSIAN

    def __post_init__(self):
        if self.kind not in ("location", "regression", "glm"):
            raise ValidationError(f"unsupported problem kind {self.kind!r}")
        object.__setattr__(self, "Y", _as_2d(self.Y, "Y"))
        if self.kind != "location":
            object.__setattr__(self, "X", _as_2d(self.X, "X"))

    @property
    def param_shape(self):
        if self.kind == "location":
            return (1, self.Y.shape[1])
        if self.kind == "regression":
            return (self.X.shape[1], 1)
        return (self.X.shape[1], self.Y.shape[1])

    def influences(self, B):
        B = np.asarray(B, float).reshape(self.param_shape)
        if self.kind == "location":
            return location_influences(self.Y, B.ravel())
        if self.kind == "regression":
            return regression_influences(self.X, self.Y.ravel(), B.ravel())
        return glm_influences(self.X, self.Y, B, self.family)

    def initial_parameter(self):
        if self.kind == "location":
            return np.mean(self.Y, axis=0).reshape(self.param_shape)
        if self.kind == "regression":
            beta, *_ = np.linalg.lstsq(self.X, self.Y.ravel(), rcond=None)
            return beta.reshape(self.param_shape)
        return np.zeros(self.param_shape)

    def mean_deriv(self, B):
        """R'(Theta) elementwise at Theta = X B (ones for location and
        gaussian regression)."""
        B = np.asarray(B, float).reshape(self.param_shape)
        if self.kind == "location":
            return np.ones_like(self.Y)
        X = self.X
        theta = X @ B
        if self.kind == "regression":
            return np.ones_like(theta)
        return self.family.mean_deriv(theta)

    def design(self):
        if self.kind == "location":
            return np.ones((self.Y.shape[0], 1))
        return self.X


def danskin_grad(problem, B, V, phi):
    """Gradient of the smooth inner objective in the hypothesis
    parameter at a fixed direction, by the chain rule through the
    elementwise influence map:
    X^T { R'(Theta) o [diag(phi'(X V R^T)) X V] }."""
    B = np.asarray(B, float).reshape(problem.param_shape)
    p, m = problem.param_shape
    V = np.asarray(V, float).reshape(p, m)
    inf = problem.influences(B)
    X, R = inf.X, inf.R
    proj = np.sum((X @ V) * R, axis=1)
    inner = phi.grad(proj)[:, None] * (X @ V)  # diag(phi') X V, n x m
    return problem.design().T @ (problem.mean_deriv(B) * inner)


def _inner_solve(problem, B, cfg, warm_V=None):
    """Direction minimization at fixed B; multistart annealing when no
    warm start is available, otherwise a single accelerated run at the
    final annealing sharpness."""
    inf = problem.influences(B)
    phi_final = make_phi(cfg.phi, c=cfg.c, zeta=cfg.zeta_schedule()[-1])
    if warm_V is None:
        best = None
        for d0 in init_directions(inf, cfg.n_starts, cfg.seed):
            V = d0.V
            for zeta in cfg.zeta_schedule():
                phi_z = make_phi(cfg.phi, c=cfg.c, zeta=zeta)
                d, _ = accelerated_solve(inf, phi_z, V, cfg)
                V = d.V
            f = objective(inf, phi_final, V)
            if best is None or f < best[0]:
                best = (f, V)
        return best[1], best[0]
    d, _ = accelerated_solve(inf, phi_final, warm_V, cfg)
    V, f = d.V, objective(inf, phi_final, d.V)
    # the warm start alone can badly overestimate min_V f at trial points
    # far from the data; probe observation directions -t_i and re-solve
    # from the best probe when it undercuts the warm solution
    T = inf.explicit_matrix()
    step = max(1, T.shape[0] // 16)
    best_probe, best_f = None, f
    p, m = inf.shape
    for i in range(0, T.shape[0], step):
        nrm = np.linalg.norm(T[i])
        if nrm < 1e-300:
            continue
        cand = (-T[i] / nrm).reshape(p, m)
        fc = objective(inf, phi_final, cand)
        if fc < best_f:
            best_probe, best_f = cand, fc
    if best_probe is not None:
        d2, _ = accelerated_solve(inf, phi_final, best_probe, cfg)
        f2 = objective(inf, phi_final, d2.V)
        if f2 < f:
            V, f = d2.V, f2
    return V, f


def _report_depth(problem, B, cfg):
    inf = problem.influences(B)
    dim = inf.dim
    if dim == 1:
        return exact_depth_1d(inf, cfg.sign_convention)
    if dim == 2:
        return exact_depth_2d(inf, cfg.sign_convention)
    if dim == 3 and inf.n <= 200:
        return exact_depth_3d(inf, cfg.sign_convention)
    return sap(inf, cfg).d01_count


def composite_depth(problem, region=None, cfg=None, outer_max_iter=100,
                    armijo_c=1e-4, step_tol=1e-6, B0=None):
    """Maximize depth over the region by alternating inner direction
    solves with projected gradient ascent steps on the parameter
    (Armijo backtracking on the smooth objective).  Returns the best
    parameter found and its depth; no global-optimality claim is made.
    """
    cfg = cfg or SolverConfig()
    region = region or ConstraintRegion.unrestricted()
    if B0 is None:
        B0 = problem.initial_parameter()
    B = region.project(np.asarray(B0, float).ravel()).reshape(problem.param_shape)
    phi_final = make_phi(cfg.phi, c=cfg.c, zeta=cfg.zeta_schedule()[-1])
    V, f_cur = _inner_solve(problem, B, cfg)
    trace = [float(f_cur)]
    singleton = region.kind == "box" and np.array_equal(region.lower, region.upper)
    for _ in range(0 if singleton else outer_max_iter):
        g = danskin_grad(problem, B, V, phi_final)
        gnorm2 = float(np.sum(g * g))
        if gnorm2 == 0.0:
            break
        alpha = 1.0
        accepted = None
        for _ in range(50):
            B_trial = region.project((B + alpha * g).ravel()).reshape(
                problem.param_shape)
            V_trial, f_trial = _inner_solve(problem, B_trial, cfg, warm_V=V)
            if f_trial >= f_cur + armijo_c * alpha * gnorm2:
                accepted = (B_trial, V_trial, f_trial)
                break
            alpha *= 0.5
        if accepted is None:
            break
        step_norm = float(np.linalg.norm(accepted[0] - B))
        B, V, f_cur = accepted
        trace.append(float(f_cur))
        if step_norm < step_tol:
            break
    count = _report_depth(problem, B, cfg)
    inf = problem.influences(B)
    result = {
        "parameter": B,
        "d01_count": count,
        "d01_fraction": count / inf.n,
        "smooth_objective": f_cur,
        "direction": V,
        "outer_objective_trace": trace,
    }
    return B, result
