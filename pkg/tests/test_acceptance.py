"""End-to-end acceptance gate.

Each test covers one release criterion and prints a single pass/fail
line (bypassing capture) so the full run reads as a checklist.
"""

import itertools
import json
import subprocess
import sys

import numpy as np
import pytest

from depthkit import (
    DepthProblem,
    SolverConfig,
    covariance_influences,
    danskin_grad,
    exact_depth_1d,
    exact_depth_2d,
    glm_influences,
    grid_depth_curve,
    init_directions,
    location_influences,
    make_phi,
    meta_influences,
    mm_step,
    gradient_lipschitz_bound,
    project_sparse,
    project_stiefel,
    regression_influences,
    sap,
    simplicial_depth_2d,
    triangle_objective,
    accelerated_solve,
)
from depthkit.cli import bench_setting
from depthkit.model import InfluenceSet
from depthkit.oracle import DegenerateConfigurationError
from depthkit.phi import SMOOTH_FAMILIES
from depthkit.solver import SolverTrace, objective, objective_and_grad


def _crit(capfd, num, name, ok, detail):
    with capfd.disabled():
        status = "PASS" if ok else "FAIL"
        print(f"[criterion {num:02d}] {name}: {status} ({detail})", flush=True)
    assert ok, f"criterion {num}: {detail}"


# -- random instances over every influence constructor -------------------


def _random_influences(rng, which):
    n = int(rng.integers(10, 30))
    if which == "location":
        m = int(rng.integers(2, 5))
        return location_influences(rng.standard_normal((n, m)),
                                   rng.standard_normal(m) * 0.3)
    if which == "regression":
        p = int(rng.integers(2, 5))
        X = rng.standard_normal((n, p))
        return regression_influences(X, rng.standard_normal(n),
                                     rng.standard_normal(p) * 0.3)
    if which.startswith("glm"):
        from depthkit import GlmFamily
        fam = GlmFamily(which.split("-")[1])
        p = int(rng.integers(2, 4))
        q = int(rng.integers(1, 3))
        X = rng.standard_normal((n, p))
        B = rng.standard_normal((p, q)) * 0.3
        theta = X @ B
        if fam.name == "logistic":
            Y = (rng.random((n, q)) < fam.mean(theta)).astype(float)
        elif fam.name == "poisson":
            Y = rng.poisson(fam.mean(np.clip(theta, -3, 3))).astype(float)
        else:
            Y = theta + rng.standard_normal((n, q))
        return glm_influences(X, Y, rng.standard_normal((p, q)) * 0.3, fam)
    if which == "covariance":
        m = int(rng.integers(2, 4))
        Y = rng.standard_normal((n, m))
        A = rng.standard_normal((m, m))
        return covariance_influences(Y, A @ A.T + np.eye(m))
    # meta-regression blocks
    m = 2
    blocks = []
    for _ in range(int(rng.integers(5, 12))):
        Xi = rng.standard_normal((m, 3))
        yi = rng.standard_normal(m)
        A = rng.standard_normal((m, m)) * 0.3
        blocks.append((yi, Xi, A @ A.T + 0.5 * np.eye(m)))
    return meta_influences(blocks, rng.standard_normal(3),
                           np.eye(m))


CONSTRUCTORS = ("location", "regression", "glm-gaussian", "glm-logistic",
                "glm-poisson", "covariance", "meta")


# -- 1-3: benchmark table reproductions ----------------------------------


def test_criterion_01_location_small_sample(capfd):
    cfg = SolverConfig()
    t10, d10 = bench_setting("t1", 10, 50, 0, cfg)
    t40, d40 = bench_setting("t1", 40, 50, 0, cfg)
    ok = (abs(d10 - 0.22) <= 0.04 and abs(d40 - 0.06) <= 0.03
          and t10 < 1.0 and t40 < 1.0)
    _crit(capfd, 1, "location depth, n=100 table",
          ok, f"mean depth {d10:.3f}@m=10 (target 0.22±0.04), "
              f"{d40:.3f}@m=40 (0.06±0.03); mean time {t10:.2f}s/{t40:.2f}s < 1s")


def test_criterion_02_location_large_sample(capfd):
    _, d40 = bench_setting("t2", 40, 50, 0, SolverConfig())
    ok = abs(d40 - 0.20) <= 0.04
    _crit(capfd, 2, "location depth, n=1000 spot check",
          ok, f"mean depth {d40:.3f}@m=40 (target 0.20±0.04)")


def test_criterion_03_regression_gaussian(capfd):
    cfg = SolverConfig()
    _, d10 = bench_setting("t4-gauss", 10, 50, 0, cfg)
    _, d40 = bench_setting("t4-gauss", 40, 50, 0, cfg)
    ok = abs(d10 - 0.09) <= 0.03 and abs(d40 - 0.03) <= 0.03
    _crit(capfd, 3, "regression depth at beta=0",
          ok, f"mean depth {d10:.3f}@p=10 (target 0.09±0.03), "
              f"{d40:.3f}@p=40 (0.03±0.03)")


# -- 4: solver quality against the exact 2D oracle -----------------------


def test_criterion_04_oracle_dominance(capfd):
    rng = np.random.default_rng(42)
    dominated = exact_hits = 0
    excess = []
    n_inst = 200
    for k in range(n_inst):
        n = int(rng.integers(10, 61))
        Z = rng.standard_normal((n, 2))
        inf = location_influences(Z, rng.standard_normal(2) * 0.4)
        res = sap(inf, SolverConfig(seed=k))
        exact = exact_depth_2d(inf)
        if res.d01_count >= exact:
            dominated += 1
        if res.d01_count == exact:
            exact_hits += 1
        excess.append(res.d01_count - exact)
    mean_excess = float(np.mean(excess))
    ok = (dominated == n_inst and exact_hits >= 0.9 * n_inst
          and mean_excess <= 1.0)
    _crit(capfd, 4, "2D oracle dominance and near-exactness",
          ok, f"dominance {dominated}/{n_inst}, exact {exact_hits}/{n_inst} "
              f"(need >=180), mean excess {mean_excess:.3f} (need <=1)")


# -- 5: descent of every MM iteration ------------------------------------


def test_criterion_05_mm_descent(capfd):
    rng = np.random.default_rng(7)
    worst = -np.inf
    checked = 0
    for k in range(100):
        which = CONSTRUCTORS[k % len(CONSTRUCTORS)]
        inf = _random_influences(rng, which)
        phi = make_phi(SMOOTH_FAMILIES[k % len(SMOOTH_FAMILIES)], zeta=2.0)
        rho = gradient_lipschitz_bound(inf, phi)
        V = init_directions(inf, 1, seed=k)[0].V
        f = objective(inf, phi, V)
        for _ in range(15):
            cand, _, f_new = mm_step(inf, phi, V, rho=rho)
            worst = max(worst, (f_new - f) / (1 + abs(f)))
            checked += 1
            V, f = cand.V, f_new
    ok = worst <= 1e-12
    _crit(capfd, 5, "MM descent across all influence constructors",
          ok, f"{checked} iterations over 100 instances, worst relative "
              f"increase {worst:.2e} (need <=1e-12)")


# -- 6: acceleration schedule --------------------------------------------


def _recompute_R(inf, phi, st, rho, theta):
    f_U = st["f_U"]
    G = st["G_U"].ravel()
    U = st["U"]
    d_Vn = (objective(inf, phi, st["V_next"]) - f_U
            - float(G @ (st["V_next"] - U).ravel()))
    d_V = (objective(inf, phi, st["V"]) - f_U
           - float(G @ (st["V"] - U).ravel()))
    dW = (st["W_next"] - st["W"]).ravel()
    return theta**2 * rho * 0.5 * float(dW @ dW) - d_Vn + (1 - theta) * d_V


def test_criterion_06_acceleration_schedule(capfd):
    rng = np.random.default_rng(11)
    theta_viol = 0
    min_R = np.inf
    accepted = 0
    for k in range(25):
        inf = _random_influences(rng, CONSTRUCTORS[k % len(CONSTRUCTORS)])
        phi = make_phi("tanh", zeta=3.0)
        L = gradient_lipschitz_bound(inf, phi)
        cfg = SolverConfig(rho_policy="monotone", rho_min=L, tol_obj=1e-6,
                           max_iter=300, keep_iterates=True)
        V0 = init_directions(inf, 1, seed=k)[0].V
        trace = SolverTrace()
        accelerated_solve(inf, phi, V0, cfg, trace=trace)
        for t, rho, theta, ok_step, st in zip(
                trace.t, trace.rho, trace.theta, trace.search_ok,
                trace.iterates):
            if t >= 1 and theta > 3.0 / (t + 2) + 1e-12:
                theta_viol += 1
            if ok_step:
                accepted += 1
                min_R = min(min_R, _recompute_R(inf, phi, st, rho, theta))
    ok = theta_viol == 0 and min_R >= -1e-10
    _crit(capfd, 6, "momentum schedule and line-search certificate",
          ok, f"theta_t <= 3/(t+2) violations {theta_viol}; recomputed R_t "
              f"over {accepted} accepted steps has min {min_R:.2e} "
              f"(need >=-1e-10)")


# -- 7: gradient correctness ---------------------------------------------


def _max_rel_grad_err(inf, phi, rng, n_points=20):
    p, m = inf.shape
    worst = 0.0
    for _ in range(n_points):
        V = rng.standard_normal((p, m))
        V /= np.linalg.norm(V)
        _, G = objective_and_grad(inf, phi, V)
        h = 1e-6
        for i in range(p):
            for j in range(m):
                Vp, Vm = V.copy(), V.copy()
                Vp[i, j] += h
                Vm[i, j] -= h
                fd = (objective(inf, phi, Vp) - objective(inf, phi, Vm)) / (2 * h)
                worst = max(worst, abs(G[i, j] - fd) / max(1.0, abs(fd)))
    return worst


def test_criterion_07_gradient_correctness(capfd):
    rng = np.random.default_rng(13)
    worst = 0.0
    pairs = 0
    for fam in SMOOTH_FAMILIES:
        phi = make_phi(fam, zeta=2.0) if fam != "bisquare" else make_phi(fam)
        for which in CONSTRUCTORS:
            inf = _random_influences(rng, which)
            worst = max(worst, _max_rel_grad_err(inf, phi, rng))
            pairs += 1
    # hypothesis-parameter gradient via the envelope rule
    phi = make_phi("tanh", zeta=2.0)
    X = rng.standard_normal((15, 3))
    y = rng.standard_normal(15)
    prob = DepthProblem("regression", X=X, Y=y[:, None])
    for _ in range(20):
        B = rng.standard_normal(3)
        V = rng.standard_normal(3)
        V /= np.linalg.norm(V)
        G = danskin_grad(prob, B, V, phi).ravel()
        h = 1e-6
        for j in range(3):
            Bp, Bm = B.copy(), B.copy()
            Bp[j] += h
            Bm[j] -= h
            fd = (objective(prob.influences(Bp), phi, V)
                  - objective(prob.influences(Bm), phi, V)) / (2 * h)
            worst = max(worst, abs(G[j] - fd) / max(1.0, abs(fd)))
    ok = worst <= 1e-5
    _crit(capfd, 7, "analytic gradients vs central differences",
          ok, f"{pairs} phi-by-constructor pairs x 20 points plus the "
              f"parameter gradient; max relative error {worst:.2e} "
              f"(need <=1e-5)")


# -- 8: projection optimality --------------------------------------------


def test_criterion_08_projection_optimality(capfd):
    rng = np.random.default_rng(17)
    worst_gap = 0.0
    for _ in range(200):
        p = int(rng.integers(2, 13))
        s = int(rng.integers(1, p + 1))
        y = rng.standard_normal(p)
        v = project_sparse(y, s).V.ravel()
        best = np.inf
        for S in itertools.combinations(range(p), s):
            w = np.zeros(p)
            w[list(S)] = y[list(S)]
            nw = np.linalg.norm(w)
            if nw > 0:
                best = min(best, np.linalg.norm(y - w / nw))
        worst_gap = max(worst_gap, np.linalg.norm(y - v) - best)
    stiefel_beaten = 0
    for _ in range(20):
        Y = rng.standard_normal((6, 2))
        V = project_stiefel(Y, None, (1, 6), r=2).V
        dV = np.linalg.norm(Y - V)
        for _ in range(1000):
            Q, _ = np.linalg.qr(rng.standard_normal((6, 2)))
            if np.linalg.norm(Y - Q) < dV - 1e-10:
                stiefel_beaten += 1
    ok = worst_gap <= 1e-10 and stiefel_beaten == 0
    _crit(capfd, 8, "sparse and orthonormal-frame projections",
          ok, f"sparse vs enumeration gap {worst_gap:.2e} over 200 instances "
              f"(need <=1e-10); polar factor beaten by {stiefel_beaten} of "
              f"20x1000 random frames (need 0)")


# -- 9: invariance --------------------------------------------------------


def test_criterion_09_invariance(capfd):
    from depthkit import normalize_influences
    rng = np.random.default_rng(19)
    worst_orth = 0.0
    worst_gram = 0.0
    for _ in range(20):
        n, m = 30, 3
        Z = rng.standard_normal((n, m))
        mu = rng.standard_normal(m) * 0.3
        phi = make_phi("tanh", zeta=2.0)
        V = rng.standard_normal(m)
        V /= np.linalg.norm(V)
        # orthogonal map: rotate data, point, and direction together
        Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
        f0 = objective(location_influences(Z, mu), phi, V.reshape(1, m))
        f1 = objective(location_influences(Z @ Q.T, Q @ mu), phi,
                       (Q @ V).reshape(1, m))
        worst_orth = max(worst_orth, abs(f0 - f1))
        # general affine map: the normalized Gram matrix is unchanged
        M = rng.standard_normal((m, m)) + 2 * np.eye(m)
        b = rng.standard_normal(m)
        U0 = normalize_influences(location_influences(Z, mu)).explicit_matrix()
        U1 = normalize_influences(
            location_influences(Z @ M.T + b, M @ mu + b)).explicit_matrix()
        worst_gram = max(worst_gram,
                         float(np.max(np.abs(U0 @ U0.T - U1 @ U1.T))))
    ok = worst_orth <= 1e-10 and worst_gram <= 1e-8
    _crit(capfd, 9, "orthogonal and affine invariance",
          ok, f"orthogonal objective gap {worst_orth:.2e} (need <=1e-10); "
              f"normalized Gram gap {worst_gram:.2e} (need <=1e-8)")


# -- 10: 1D depth curves on a bimodal sample ------------------------------


def _plateau_maxima(grid, vals, tol=1e-12):
    """Locations of plateau-aware strict local maxima."""
    runs = []
    start = 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or abs(vals[i] - vals[start]) > tol:
            runs.append((start, i - 1, vals[start]))
            start = i
    out = []
    for k, (a, b, v) in enumerate(runs):
        left = runs[k - 1][2] if k > 0 else -np.inf
        right = runs[k + 1][2] if k + 1 < len(runs) else -np.inf
        if v > left and v > right:
            out.append(0.5 * (grid[a] + grid[b]))
    return out


def test_criterion_10_bimodal_curves(capfd):
    rng = np.random.default_rng(23)
    Z = np.concatenate([
        -3.0 + 0.25 * rng.standard_normal(5),
        3.0 + 0.5 * rng.standard_normal(5),
    ])
    grid = np.arange(-6.0, 6.0 + 1e-9, 0.01)
    # redescending one-sided curve: local maxima at each cluster
    phi_rts = make_phi("rectified_truncated_sign", c=1.0)
    pts = grid_depth_curve(Z, phi_rts, grid, form="one_sided")
    vals = np.array([v for _, v in pts])
    maxima = _plateau_maxima(grid, vals)
    near_neg = any(abs(mu + 3.0) < 1.2 for mu in maxima)
    near_pos = any(abs(mu - 3.0) < 1.2 for mu in maxima)
    # plain sign contrast curve must reproduce exact Tukey counts
    phi_sign = make_phi("sign")
    contrast = grid_depth_curve(Z, phi_sign, grid, form="contrast")
    mismatches = 0
    for mu, v in contrast:
        T = (mu - Z)[:, None]
        exact = exact_depth_1d(InfluenceSet.explicit(T, shape=(1, 1)))
        if abs(Z.size * v - exact) > 1e-9:
            mismatches += 1
    ok = len(maxima) >= 2 and near_neg and near_pos and mismatches == 0
    _crit(capfd, 10, "bimodal depth curve shapes",
          ok, f"{len(maxima)} local maxima (need >=2, near both -3 and +3: "
              f"{near_neg}/{near_pos}); sign-curve vs exact Tukey mismatches "
              f"{mismatches}/{grid.size}")


# -- 11: simplicial consistency -------------------------------------------


def test_criterion_11_simplicial_consistency(capfd):
    rng = np.random.default_rng(29)
    phi = make_phi("indicator_01")
    worst = 0.0
    done = 0
    while done < 100:
        n = int(rng.integers(5, 21))
        Z = rng.standard_normal((n, 2))
        mu = rng.standard_normal(2) * 0.5
        try:
            exact = simplicial_depth_2d(Z, mu)
        except DegenerateConfigurationError:
            continue
        val = triangle_objective(Z, mu, phi, np.eye(2))
        worst = max(worst, abs(val - exact))
        done += 1
    ok = worst <= 1e-9
    _crit(capfd, 11, "projected triangle objective vs simplicial depth",
          ok, f"100 instances, max deviation {worst:.2e} (need exact)")


# -- 12: CLI determinism --------------------------------------------------


def test_criterion_12_cli_determinism(capfd, tmp_path):
    data = tmp_path / "data.csv"
    rng = np.random.default_rng(31)
    np.savetxt(data, rng.standard_normal((40, 3)), delimiter=",")
    outs = []
    for i, extra in enumerate(([], [], ["--threads", "8"])):
        out = tmp_path / f"run{i}.json"
        cmd = [sys.executable, "-m", "depthkit.cli", "depth", "location",
               "--point", "0,0,0", "--data", str(data), "--no-header",
               "--all-y", "--seed", "5", "--no-timing", "--out", str(out)]
        proc = subprocess.run(cmd + extra, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1] == outs[2]
    payload = json.loads(outs[0])
    ok = ok and payload["wall_time_s"] is None
    _crit(capfd, 12, "seeded CLI runs are byte-identical",
          ok, "3 runs (one with --threads 8) compared byte-for-byte; "
              "timing suppressed via --no-timing")
