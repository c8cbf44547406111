"""Optimization engine for depth computation: trace-form objective and
gradient, descent-guaranteed MM steps, accelerated projection with a
momentum line search, successive annealing (SAP), the product-form
subspace solve, and multistart initialization."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .influence import triangle_objective_detailed
from .model import (
    DepthResult,
    DimensionError,
    Direction,
    InfluenceSet,
    SolverConfig,
    SolverError,
    ValidationError,
    evaluate_d01,
)
from .phi import SIGMOID_FAMILIES, make_phi
from .projections import project_direction, project_sphere, project_stiefel, space_map

MAX_BACKTRACK = 60


def _projections(inf, V):
    """<V, T_i> for all i; rank-one factored sides collapse to a single
    matrix-vector product."""
    if inf.is_factored:
        p, m = inf.shape
        if p == 1:
            return inf.R @ V.ravel()
        if m == 1:
            return (inf.X @ V.ravel()) * inf.R.ravel()
        return ((inf.X @ V) * inf.R).sum(axis=1)
    return inf.T @ V.ravel()


def objective_and_grad(inf, phi, V):
    """Value and Euclidean gradient of f(V) = sum_i phi(<V, T_i>).

    Factored influences use the diagonal-only identity: the diagonal of
    X V R^T equals the row sums of (X V) o R, so the n x n product is
    never formed.
    """
    p, m = inf.shape
    V = np.asarray(V, float).reshape(p, m)
    proj = _projections(inf, V)
    val, der = phi.value_and_grad(proj)
    if inf.is_factored:
        if p == 1:
            grad = (der @ inf.R).reshape(1, m)
        elif m == 1:
            grad = (inf.X.T @ (der * inf.R.ravel())).reshape(p, 1)
        else:
            grad = inf.X.T @ (der[:, None] * inf.R)
    else:
        grad = (inf.T.T @ der).reshape(p, m)
    return float(val.sum()), grad


def objective(inf, phi, V):
    p, m = inf.shape
    proj = _projections(inf, np.asarray(V, float).reshape(p, m))
    return float(phi.value(proj).sum())


def gradient_lipschitz_bound(inf, phi, finer=False):
    """rho floor L ||X||_2^2 ||R||_2^2 guaranteeing descent, or None when
    phi' is not Lipschitz.  The finer variant uses the per-row bound
    L ||X||_2 ||R||_2 (sum ||x_i||^2 ||r_i||^2)^{1/2}."""
    L = phi.lipschitz()
    if L is None:
        return None
    if inf.is_factored:
        sx = np.linalg.norm(inf.X, 2)
        sr = np.linalg.norm(inf.R, 2)
        if finer:
            rows = np.sqrt(np.sum(
                np.sum(inf.X**2, axis=1) * np.sum(inf.R**2, axis=1)))
            return L * sx * sr * rows
        return L * sx**2 * sr**2
    return L * np.linalg.norm(inf.T, 2) ** 2


def surrogate(inf, phi, V, V_prev, rho):
    """Quadratic majorizer g_rho(V, V_prev) of the trace objective."""
    f_prev, g_prev = objective_and_grad(inf, phi, V_prev)
    D = np.asarray(V, float).reshape(g_prev.shape) - np.asarray(V_prev, float).reshape(
        g_prev.shape)
    return f_prev + float(np.sum(g_prev * D)) + 0.5 * rho * float(np.sum(D * D))


def bregman(inf, phi, B, G):
    """Generalized Bregman value f(B) - f(G) - <grad f(G), B - G>."""
    p, m = inf.shape
    B = np.asarray(B, float).reshape(p, m)
    G = np.asarray(G, float).reshape(p, m)
    fG, gG = objective_and_grad(inf, phi, G)
    return objective(inf, phi, B) - fG - float(np.sum(gG * (B - G)))


def mm_step(inf, phi, V, rho=None):
    """One majorization-minimization step: gradient step, projection back
    to the feasible set, with backtracking when no Lipschitz constant is
    available.  Returns (direction, rho_used, f_new)."""
    p, m = inf.shape
    V = np.asarray(V, float).reshape(p, m)
    f_cur, G = objective_and_grad(inf, phi, V)
    if np.max(np.abs(G)) == 0.0:
        return Direction(V.copy()), rho or 1.0, f_cur
    auto = rho is None
    if auto:
        rho = gradient_lipschitz_bound(inf, phi)
    if rho is not None and not auto:
        cand = project_direction(V - G / rho, inf.space, (p, m))
        return cand, rho, objective(inf, phi, cand.V)
    if rho is not None:
        # descent guaranteed at the Lipschitz floor
        rho = max(rho, 1e-12)
        cand = project_direction(V - G / rho, inf.space, (p, m))
        return cand, rho, objective(inf, phi, cand.V)
    # backtracking: shrink 1/rho until the surrogate majorizes at the step
    rho = 1.0
    for _ in range(MAX_BACKTRACK):
        cand = project_direction(V - G / rho, inf.space, (p, m))
        f_new = objective(inf, phi, cand.V)
        g_val = f_cur + float(np.sum(G * (cand.V - V))) + 0.5 * rho * float(
            np.sum((cand.V - V) ** 2))
        if f_new <= g_val + 1e-12 * (1.0 + abs(f_cur)):
            return cand, rho, f_new
        rho *= 2.0
    raise SolverError("MM backtracking stalled after 60 halvings of the step size")


def mm_solve(inf, phi, V0, cfg):
    """Plain MM descent loop (Theorem-1 prototype)."""
    p, m = inf.shape
    V = np.asarray(V0, float).reshape(p, m)
    f_prev = objective(inf, phi, V)
    history = [f_prev]
    rho_floor = gradient_lipschitz_bound(inf, phi)
    for _ in range(cfg.max_iter):
        cand, _, f_new = mm_step(inf, phi, V, rho=rho_floor)
        V = cand.V
        history.append(f_new)
        _, G = objective_and_grad(inf, phi, V)
        if abs(f_prev - f_new) < cfg.tol_obj or np.max(np.abs(G)) < cfg.tol_grad_maxnorm:
            break
        f_prev = f_new
    return Direction(V), history


@dataclass
class SolverTrace:
    """Per-iteration record of the accelerated projection run."""

    t: list = field(default_factory=list)
    f: list = field(default_factory=list)
    rho: list = field(default_factory=list)
    theta: list = field(default_factory=list)
    R: list = field(default_factory=list)
    search_ok: list = field(default_factory=list)
    iterates: list = field(default_factory=list)  # optional detailed state

    def append(self, t, f, rho, theta, R, search_ok, state=None):
        self.t.append(t)
        self.f.append(f)
        self.rho.append(rho)
        self.theta.append(theta)
        self.R.append(R)
        self.search_ok.append(search_ok)
        if state is not None:
            self.iterates.append(state)

    def __len__(self):
        return len(self.t)

    def records(self):
        return [
            {"t": t, "f": f, "rho": rho, "theta": th, "R": R}
            for t, f, rho, th, R in zip(self.t, self.f, self.rho, self.theta, self.R)
        ]

    def save(self, path):
        import json

        with open(path, "w") as fh:
            for rec in self.records():
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _theta_update(theta_prev, rho_prev, rho):
    """Closed-form solution of theta^2/(1-theta) = rho_prev theta_prev^2 / rho."""
    a = rho_prev * theta_prev**2
    return (theta_prev * math.sqrt(rho_prev**2 * theta_prev**2 + 4.0 * rho * rho_prev)
            - a) / (2.0 * rho)


def _feasible_step(W, G, scale, space, shape):
    """The projected momentum step: Xi = G(W - G/scale) for linear
    spaces (then normalized), or the direct feasible-set projection for
    sparse / affine-constrained spaces."""
    Y = W - G / scale
    if space.kind == "sparse" or (
        space.kind == "linear_constraint" and space.a is not None and np.any(space.a != 0)
    ):
        d = project_direction(Y, space, shape)
        return d.V, 1.0, d.degenerate
    if space.kind == "full":
        Xi = Y
    else:
        Xi = space_map(Y, space, shape)
    nrm = float(np.sqrt(np.dot(Xi.ravel(), Xi.ravel())))
    if nrm <= 1e-300:
        E = np.zeros(shape)
        E.flat[0] = 1.0
        return E, nrm, True
    return Xi / nrm, nrm, False


def _linear_maps(inf):
    """Forward projection v -> <V, T_i> and its adjoint on flat vectors."""
    p, m = inf.shape
    if inf.is_factored:
        if p == 1:
            R = inf.R
            return (lambda v: R @ v), (lambda d: d @ R)
        if m == 1:
            X, r = inf.X, inf.R.ravel()
            return (lambda v: (X @ v) * r), (lambda d: X.T @ (d * r))
        X, R = inf.X, inf.R
        return (lambda v: ((X @ v.reshape(p, m)) * R).sum(axis=1),
                lambda d: (X.T @ (d[:, None] * R)).ravel())
    T = inf.T
    return (lambda v: T @ v), (lambda d: T.T @ d)


def _accelerated_full_space(inf, phi, V0, cfg, trace):
    """Specialized accelerated loop for the unconstrained sphere.

    Identical updates to the generic path, but works on flat vectors,
    exploits linearity of the projections (proj of a convex combination
    is the combination of projs), and uses V - U = theta (V - W),
    V_next - U = theta (W_next - W) to avoid forming U and V_next
    inside the line search.
    """
    p, m = inf.shape
    fwd, bwd = _linear_maps(inf)
    V = np.asarray(V0, float).reshape(-1).copy()
    W = V.copy()
    proj_V = fwd(V)
    proj_W = proj_V.copy()
    f_V = float(phi.value(proj_V).sum())
    theta_prev = 1.0
    rho_prev = None
    for t in range(cfg.max_iter):
        if cfg.rho_policy == "monotone" and rho_prev is not None:
            rho = max(cfg.rho_min, rho_prev) / cfg.beta
        else:
            rho = cfg.rho_min / cfg.beta
        s = 0
        trials = []
        while True:
            s += 1
            rho *= cfg.beta
            if t == 0:
                theta = 1.0
            else:
                theta = _theta_update(theta_prev, rho_prev, rho)
            proj_U = (1.0 - theta) * proj_V + theta * proj_W
            val_U, der_U = phi.value_and_grad(proj_U)
            f_U = float(val_U.sum())
            G = bwd(der_U)
            Y = W - G / (theta * rho)
            nrm = math.sqrt(float(np.dot(Y, Y)))
            if nrm <= 1e-300:
                W_next = np.zeros_like(Y)
                W_next[0] = 1.0
            else:
                W_next = Y / nrm
            proj_Wn = fwd(W_next)
            proj_Vn = (1.0 - theta) * proj_V + theta * proj_Wn
            f_Vn = float(phi.value(proj_Vn).sum())
            dW = W_next - W
            d_Vn = f_Vn - f_U - theta * float(np.dot(G, dW))
            d_V = f_V - f_U - theta * float(np.dot(G, V - W))
            R_t = (theta**2 * rho * 0.5 * float(np.dot(dW, dW))
                   - d_Vn + (1.0 - theta) * d_V)
            trials.append((R_t / (theta**2 * rho), R_t, rho, theta, W_next,
                           proj_Wn, proj_Vn, f_Vn, G))
            if R_t >= 0 or s > cfg.line_search_max:
                break
        search_ok = trials[-1][1] >= 0
        if search_ok:
            chosen = trials[-1]
        else:
            chosen = max(trials, key=lambda rec: rec[0])
        _, R_t, rho, theta, W_next, proj_Wn, proj_Vn, f_Vn, G = chosen
        trace.append(t, f_Vn, rho, theta, R_t, search_ok, None)
        obj_change = abs(f_V - f_Vn)
        V = (1.0 - theta) * V + theta * W_next
        W = W_next
        proj_V, proj_W = proj_Vn, proj_Wn
        f_V = f_Vn
        theta_prev, rho_prev = theta, rho
        if obj_change < cfg.tol_obj or abs(G).max() < cfg.tol_grad_maxnorm:
            break
    return project_direction(V, inf.space, (p, m)), trace


def accelerated_solve(inf, phi, V0, cfg, trace=None):
    """Nesterov-style accelerated projection for a smooth phi.

    Runs the three-sequence momentum update with the nonconvex line
    search criterion; the inverse step size is doubled until the
    criterion holds or the search budget M is exhausted, in which case
    the trial with the largest R_t/(theta_t^2 rho_t) is taken.
    """
    if not phi.smooth:
        raise ValidationError(
            f"accelerated projection needs a smooth phi, got {phi.family!r}; "
            "use SAP for 0-1 depth"
        )
    if inf.space.kind == "full" and not cfg.keep_iterates:
        return _accelerated_full_space(inf, phi, V0, cfg,
                                       trace if trace is not None else SolverTrace())
    p, m = inf.shape
    V = np.asarray(V0, float).reshape(p, m).copy()
    W = V.copy()
    if trace is None:
        trace = SolverTrace()
    theta_prev = 1.0
    rho_prev = None
    f_V = objective(inf, phi, V)
    for t in range(cfg.max_iter):
        if cfg.rho_policy == "monotone" and rho_prev is not None:
            rho = max(cfg.rho_min, rho_prev) / cfg.beta
        else:
            rho = cfg.rho_min / cfg.beta
        s = 0
        trials = []
        while True:
            s += 1
            rho *= cfg.beta
            if t == 0:
                theta = 1.0
            else:
                theta = _theta_update(theta_prev, rho_prev, rho)
            U = (1.0 - theta) * V + theta * W
            f_U, G_U = objective_and_grad(inf, phi, U)
            W_next, xi_norm, degen = _feasible_step(W, G_U, theta * rho, inf.space,
                                                    (p, m))
            V_next = (1.0 - theta) * V + theta * W_next
            f_Vn = objective(inf, phi, V_next)
            g_flat = G_U.ravel()
            d_Vn = f_Vn - f_U - float(np.dot(g_flat, (V_next - U).ravel()))
            d_V = f_V - f_U - float(np.dot(g_flat, (V - U).ravel()))
            dW = (W_next - W).ravel()
            R_t = (theta**2 * rho * 0.5 * float(np.dot(dW, dW))
                   - d_Vn + (1.0 - theta) * d_V)
            trials.append((R_t / (theta**2 * rho), R_t, rho, theta, U, W_next, V_next,
                           f_Vn, xi_norm, f_U, G_U))
            if R_t >= 0 or s > cfg.line_search_max:
                break
        search_ok = trials[-1][1] >= 0
        if search_ok:
            chosen = trials[-1]
        else:
            # exhausted: take the trial with the largest R_t/(theta^2 rho)
            chosen = max(trials, key=lambda rec: rec[0])
        _, R_t, rho, theta, U, W_next, V_next, f_Vn, xi_norm, f_U, G_U = chosen
        state = None
        if cfg.keep_iterates:
            state = {
                "V": V.copy(), "W": W.copy(), "U": U, "W_next": W_next,
                "V_next": V_next, "xi_norm": xi_norm, "f_U": f_U, "G_U": G_U,
            }
        trace.append(t, f_Vn, rho, theta, R_t, search_ok, state)
        obj_change = abs(f_V - f_Vn)
        V, W = V_next, W_next
        f_V = f_Vn
        theta_prev, rho_prev = theta, rho
        # the stopping test reuses the gradient at the accepted momentum
        # point instead of spending an extra evaluation at V
        if obj_change < cfg.tol_obj or abs(G_U).max() < cfg.tol_grad_maxnorm:
            break
    return project_direction(V, inf.space, (p, m)), trace


def init_directions(inf, n0, seed=None):
    """Multistart initialization: n0 randomly sampled observation
    directions -x_i r_i^T (projected and normalized), plus the direction
    from spherical PCA of the vectorized influences."""
    if n0 < 1:
        raise ValidationError("need at least one start")
    rng = np.random.default_rng(seed)
    p, m = inf.shape
    T = inf.explicit_matrix()
    n = T.shape[0]
    dirs = []
    attempts = 0
    warned = False
    while len(dirs) < n0 and attempts < 10 * n0:
        attempts += 1
        i = int(rng.integers(n))
        cand = -T[i].reshape(p, m)
        d = project_direction(cand, inf.space, (p, m))
        if not d.degenerate:
            dirs.append(d)
    while len(dirs) < n0:
        warned = True
        d = project_direction(rng.standard_normal((p, m)), inf.space, (p, m))
        if not d.degenerate:
            dirs.append(d)
    # spherical PCA direction: smallest eigenvector of the covariance of
    # sphere-projected, coordinate-wise-median-centered influences
    centered = T - np.median(T, axis=0)
    norms = np.linalg.norm(centered, axis=1)
    mask = norms > 1e-300
    spca = None
    if np.any(mask):
        proj = centered[mask] / norms[mask, None]
        C = np.cov(proj.T) if proj.shape[0] > 1 else np.outer(proj[0], proj[0])
        C = np.atleast_2d(C)
        w, Q = np.linalg.eigh(C)
        d = project_direction(Q[:, 0].reshape(p, m), inf.space, (p, m))
        if not d.degenerate:
            spca = d
    if spca is None:
        spca = project_direction(rng.standard_normal((p, m)), inf.space, (p, m))
    dirs.append(spca)
    if warned:
        import warnings

        warnings.warn("degenerate start candidates; filled in random directions")
    return dirs


def _polish_d01(inf, V, convention, rounds=3, k=12, eps=1e-7):
    """Local 0-1 refinement around a smooth solution.

    The exact minimizer of the count lies on a cone boundary where some
    influence projects to zero, so candidate directions are built by
    rotating V onto the zero set of each of the k influences nearest the
    current hyperplane, tilted eps to either side.  Only directly
    evaluated counts are ever returned, so the result stays an upper
    bound on the exact depth.
    """
    T = inf.explicit_matrix()
    nrm = np.linalg.norm(T, axis=1)
    That = T[nrm > 0] / nrm[nrm > 0, None]
    if That.shape[0] == 0:
        return evaluate_d01(inf, V, convention), V
    p, m = inf.shape
    v = np.asarray(V, float).ravel().copy()
    best_c = evaluate_d01(inf, v.reshape(p, m), convention)
    for _ in range(rounds):
        improved = False
        proj = That @ v
        for i in np.argsort(np.abs(proj))[:k]:
            t = That[i]
            w0 = v - (t @ v) * t
            for s in (-1.0, 1.0):
                w = w0 + s * eps * t
                nw = np.linalg.norm(w)
                if nw < 1e-12:
                    continue
                d = project_direction((w / nw).reshape(p, m), inf.space, (p, m))
                c = evaluate_d01(inf, d.V.reshape(p, m), convention)
                if c < best_c:
                    best_c, v, improved = c, d.V.ravel().copy(), True
        if not improved:
            break
    return best_c, v.reshape(p, m)


def _anneal_start(inf, cfg, V, traces=None):
    """Run the annealing schedule from one start; returns the final
    direction and total iteration count."""
    iters = 0
    for zeta in cfg.zeta_schedule():
        phi_z = make_phi(cfg.phi, c=cfg.c, zeta=zeta)
        d, tr = accelerated_solve(inf, phi_z, V, cfg)
        V = d.V
        iters += len(tr)
        if traces is not None:
            traces.append(tr)
    return V, iters


def sap(inf, cfg=None, collect_traces=None):
    """Successive accelerated projection for the 0-1 depth.

    Anneals a sigmoid approximation of the step indicator over a
    geometric sharpness schedule, warm-starting the accelerated solver,
    for each of the multistart directions; the final 0-1 count is
    evaluated at both signs of the solution and the smaller kept.
    """
    cfg = cfg or SolverConfig()
    if cfg.phi not in SIGMOID_FAMILIES:
        raise ValidationError(
            f"SAP anneals a sigmoid family, got {cfg.phi!r}"
        )
    t_start = time.perf_counter()
    starts = init_directions(inf, cfg.n_starts, cfg.seed)
    phi_final = make_phi(cfg.phi, c=cfg.c, zeta=cfg.zeta_schedule()[-1])
    best = None
    failures = []
    for idx, d0 in enumerate(starts):
        try:
            V, iters = _anneal_start(inf, cfg, d0.V, traces=collect_traces)
        except SolverError as exc:  # pragma: no cover - defensive
            failures.append((idx, exc))
            continue
        c_plus = evaluate_d01(inf, V, cfg.sign_convention)
        c_minus = evaluate_d01(inf, -V, cfg.sign_convention)
        if c_minus < c_plus:
            V = -V
            count = c_minus
        else:
            count = c_plus
        smooth = objective(inf, phi_final, V)
        key = (count, smooth, idx)
        if best is None or key < best[0]:
            best = (key, V, iters)
    if best is None:
        raise SolverError(f"all {len(starts)} SAP starts failed: {failures}")
    (count, smooth, _), V, iters = best
    c_pol, V_pol = _polish_d01(inf, V, cfg.sign_convention)
    if c_pol < count:
        count, V = c_pol, V_pol
        smooth = objective(inf, phi_final, V)
    wall = time.perf_counter() - t_start
    direction = project_direction(V, inf.space, inf.shape)
    return DepthResult(
        d01_count=count,
        d01_fraction=count / inf.n,
        smooth_objective=smooth,
        direction=direction,
        iterations=iters,
        starts_used=len(starts),
        wall_time_s=wall,
    )


# -- product-form subspace depth (r > 1) --------------------------------


def _product_objective_grad(T, phi, V):
    """Objective sum_i prod_s phi(v_s^T t_i) and its pm x r gradient."""
    proj = T @ V  # n x r
    Phi = phi.value(proj)
    Phi = np.atleast_2d(Phi)
    f = float(np.sum(np.prod(Phi, axis=1)))
    r = V.shape[1]
    G = np.empty_like(V)
    for s in range(r):
        others = np.prod(np.delete(Phi, s, axis=1), axis=1) if r > 1 else np.ones(
            T.shape[0])
        G[:, s] = T.T @ (others * phi.grad(proj[:, s]))
    return f, G


def _orthonormal_completion(first, r, rng, space, shape):
    pm = first.size
    cols = [first.ravel()]
    for _ in range(r - 1):
        cols.append(rng.standard_normal(pm))
    Y = np.column_stack(cols)
    return project_stiefel(Y, space if space.kind != "full" else None, shape, r=r).V


def subspace_solve(inf, r, cfg=None):
    """Minimize the product-form depth objective over column-orthonormal
    pm x r frames, annealing like SAP, with Stiefel projections for
    feasibility."""
    cfg = cfg or SolverConfig()
    if cfg.phi not in SIGMOID_FAMILIES:
        raise ValidationError(f"subspace annealing needs a sigmoid family, got "
                              f"{cfg.phi!r}")
    t_start = time.perf_counter()
    T = inf.explicit_matrix()
    pm = T.shape[1]
    rank = np.linalg.matrix_rank(T)
    if r > rank:
        raise ValidationError(f"r={r} exceeds the influence rank {rank}")
    rng = np.random.default_rng(cfg.seed)
    starts = init_directions(inf, cfg.n_starts, cfg.seed)
    space = inf.space
    best = None
    total_iters = 0
    phi_final = make_phi(cfg.phi, c=cfg.c, zeta=cfg.zeta_schedule()[-1])
    for idx, d0 in enumerate(starts):
        try:
            V = _orthonormal_completion(d0.V, r, rng, space, inf.shape)
        except Exception:
            continue
        iters = 0
        for zeta in cfg.zeta_schedule():
            phi_z = make_phi(cfg.phi, c=cfg.c, zeta=zeta)
            V, it = _stiefel_descent(T, phi_z, V, cfg, space, inf.shape)
            iters += it
        total_iters += iters
        count, V_signed = _best_sign_pattern(inf, V, cfg.sign_convention)
        smooth, _ = _product_objective_grad(T, phi_final, V_signed)
        key = (count, smooth, idx)
        if best is None or key < best[0]:
            best = (key, V_signed, iters)
    if best is None:
        raise SolverError("all subspace starts failed")
    (count, smooth, _), V, iters = best
    return DepthResult(
        d01_count=count,
        d01_fraction=count / inf.n,
        smooth_objective=smooth,
        direction=Direction(V, r=r),
        iterations=iters,
        starts_used=len(starts),
        wall_time_s=time.perf_counter() - t_start,
    )


def _stiefel_descent(T, phi, V, cfg, space, shape):
    f_prev, _ = _product_objective_grad(T, phi, V)
    iters = 0
    for _ in range(cfg.max_iter):
        f_cur, G = _product_objective_grad(T, phi, V)
        if np.max(np.abs(G)) < cfg.tol_grad_maxnorm:
            break
        rho = cfg.rho_min
        accepted = None
        for _ in range(MAX_BACKTRACK):
            try:
                cand = project_stiefel(V - G / rho,
                                       space if space.kind != "full" else None,
                                       shape, r=V.shape[1]).V
            except Exception:
                rho *= 2.0
                continue
            f_new, _ = _product_objective_grad(T, phi, cand)
            g_val = f_cur + float(np.sum(G * (cand - V))) + 0.5 * rho * float(
                np.sum((cand - V) ** 2))
            if f_new <= g_val + 1e-12 * (1.0 + abs(f_cur)):
                accepted = (cand, f_new)
                break
            rho *= 2.0
        if accepted is None:
            break
        V, f_new = accepted
        iters += 1
        if abs(f_prev - f_new) < cfg.tol_obj:
            break
        f_prev = f_new
    return V, iters


def _best_sign_pattern(inf, V, convention):
    """Evaluate the product-indicator count over all column sign flips
    and keep the smallest (the smooth stages only pin the subspace, not
    the orientation of each column)."""
    r = V.shape[1]
    best = None
    for bits in range(2**r):
        signs = np.array([1.0 if (bits >> j) & 1 == 0 else -1.0 for j in range(r)])
        Vs = V * signs
        count = evaluate_d01(inf, Direction(Vs, r=r), convention)
        if best is None or count < best[0]:
            best = (count, Vs)
    return best


# -- projected triangle depth ------------------------------------------


def _triangle_grad_fd(Z, mu, phi, V, step=1e-6):
    """Central finite-difference gradient of the triangle objective in V."""
    G = np.zeros_like(V)
    for idx in np.ndindex(V.shape):
        Vp = V.copy()
        Vp[idx] += step
        fp, _ = triangle_objective_detailed(Z, mu, phi, _reorth(Vp))
        Vm = V.copy()
        Vm[idx] -= step
        fm, _ = triangle_objective_detailed(Z, mu, phi, _reorth(Vm))
        G[idx] = (fp - fm) / (2.0 * step)
    return G


def _reorth(V):
    U, _, Wt = np.linalg.svd(V, full_matrices=False)
    return U @ Wt


def triangle_solve(Z, mu, cfg=None):
    """Minimize the projected triangle depth over m x 2 orthonormal
    projections, using finite-difference gradients in the same annealed
    descent loop."""
    cfg = cfg or SolverConfig()
    Z = np.asarray(Z, float)
    mu = np.asarray(mu, float).ravel()
    m = Z.shape[1]
    if m < 2:
        raise DimensionError("triangle depth needs data dimension >= 2")
    t_start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    indicator = make_phi("indicator_01")
    best = None
    total_iters = 0
    for idx in range(cfg.n_starts + 1):
        V = _reorth(rng.standard_normal((m, 2)))
        iters = 0
        for zeta in cfg.zeta_schedule():
            phi_z = make_phi(cfg.phi, c=cfg.c, zeta=zeta)
            f_prev, _ = triangle_objective_detailed(Z, mu, phi_z, V)
            for _ in range(50):
                G = _triangle_grad_fd(Z, mu, phi_z, V)
                if np.max(np.abs(G)) < cfg.tol_grad_maxnorm:
                    break
                rho = cfg.rho_min
                moved = False
                for _ in range(MAX_BACKTRACK):
                    cand = _reorth(V - G / rho)
                    f_new, _ = triangle_objective_detailed(Z, mu, phi_z, cand)
                    if f_new <= f_prev + 1e-12 * (1 + abs(f_prev)):
                        V = cand
                        moved = True
                        break
                    rho *= 2.0
                iters += 1
                if not moved or abs(f_prev - f_new) < cfg.tol_obj:
                    f_prev = f_new if moved else f_prev
                    break
                f_prev = f_new
        total_iters += iters
        count, excluded = triangle_objective_detailed(Z, mu, indicator, V)
        key = (count, idx)
        if best is None or key < best[0]:
            best = (key, V, excluded)
    (count, _), V, excluded = best
    n_triples = Z.shape[0] * (Z.shape[0] - 1) * (Z.shape[0] - 2) // 6
    warnings = (f"{excluded} degenerate triples excluded",) if excluded else ()
    return DepthResult(
        d01_count=count,
        d01_fraction=count / max(1, n_triples),
        smooth_objective=count,
        direction=Direction(V, r=2),
        iterations=total_iters,
        starts_used=cfg.n_starts + 1,
        wall_time_s=time.perf_counter() - t_start,
        warnings=warnings,
    )
