"""Command-line interface: CSV ingestion, depth computation at a
hypothesis point, exact oracle checks, depth curves, deepest-point
search, and benchmark presets.

Exit codes: 0 success, 2 usage error, 3 data validation error, 4 solver
failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import time

import numpy as np

from .deepest import ConstraintRegion, DepthProblem, composite_depth
from .influence import (
    GAUSSIAN,
    LOGISTIC,
    POISSON,
    covariance_influences,
    glm_influences,
    location_influences,
    normalize_influences,
    regression_influences,
)
from .model import (
    Dataset,
    DegeneracyError,
    DepthError,
    DimensionError,
    HALF_AT_ZERO,
    InfeasibleError,
    RIGHT_CLOSED,
    SolverConfig,
    SolverError,
    ValidationError,
)
from .oracle import (
    exact_depth_1d,
    exact_depth_2d,
    exact_depth_3d,
    grid_depth_curve,
)
from .phi import SIGMOID_FAMILIES, make_phi
from .solver import sap, subspace_solve, triangle_solve

FAMILIES = {"gaussian": GAUSSIAN, "logistic": LOGISTIC, "poisson": POISSON}
CONVENTIONS = {"right-closed": RIGHT_CLOSED, "half-at-zero": HALF_AT_ZERO}


# -- data loading --------------------------------------------------------


def load_csv(path, intercept=False, no_header=False, all_y=False):
    """Read a CSV file into a Dataset.

    Columns whose header starts with `y` (case-insensitive) become
    responses, the rest predictors; `all_y` forces every column to be a
    response.  A synthetic ones column serves as the design when no
    predictor columns exist; `intercept` prepends one otherwise.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    with fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValidationError(f"{path}: empty file")
    if no_header:
        header = [f"c{j + 1}" for j in range(len(rows[0]))]
        body = rows
    else:
        header = [h.strip() for h in rows[0]]
        body = rows[1:]
        if not body:
            raise ValidationError(f"{path}: no data rows")
    data = np.empty((len(body), len(header)))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise ValidationError(
                f"{path}: row {i + 1} has {len(row)} cells, expected {len(header)}"
            )
        for j, cell in enumerate(row):
            try:
                val = float(cell.strip())
            except ValueError:
                raise ValidationError(
                    f"{path}: non-numeric value {cell!r} at row {i + 1}, "
                    f"column {header[j]!r}"
                ) from None
            if not np.isfinite(val):
                raise ValidationError(
                    f"{path}: non-finite value at row {i + 1}, column {header[j]!r}"
                )
            data[i, j] = val
    if all_y:
        y_idx = list(range(len(header)))
    elif no_header:
        y_idx = []
    else:
        y_idx = [j for j, h in enumerate(header) if h.lower().startswith("y")]
    x_idx = [j for j in range(len(header)) if j not in y_idx]
    Y = data[:, y_idx] if y_idx else data
    if x_idx:
        X = data[:, x_idx]
        if intercept:
            X = np.hstack([np.ones((X.shape[0], 1)), X])
    else:
        X = np.ones((data.shape[0], 1))
    return Dataset(X, Y)


def parse_point(spec, size=None):
    """A hypothesis point from an inline comma list or a file; a single
    scalar broadcasts to the requested size."""
    if spec is None:
        raise ValidationError("--point is required for this command")
    if os.path.exists(spec):
        vals = np.loadtxt(spec, delimiter=",", ndmin=1).ravel()
    else:
        try:
            vals = np.array([float(tok) for tok in spec.split(",") if tok.strip()])
        except ValueError:
            raise ValidationError(f"cannot parse point {spec!r}") from None
    if vals.size == 0:
        raise ValidationError("empty point")
    if size is not None and vals.size == 1 and size > 1:
        vals = np.full(size, vals[0])
    if size is not None and vals.size != size:
        raise DimensionError(f"point has {vals.size} entries, expected {size}")
    return vals


def _sample_matrix(ds):
    """The data matrix for sample-only (location-style) commands."""
    return ds.Y


# -- output --------------------------------------------------------------


def _config_echo(cfg):
    d = dataclasses.asdict(cfg)
    d.pop("keep_iterates", None)
    return d


def result_payload(result, cfg, timing=True, warnings=()):
    direction = np.asarray(result.direction.V, float).ravel(order="C")
    return {
        "depth_count": result.d01_count,
        "depth_fraction": result.d01_fraction,
        "direction": [float(v) for v in direction],
        "smooth_objective": result.smooth_objective,
        "iterations": result.iterations,
        "starts": result.starts_used,
        "wall_time_s": result.wall_time_s if timing else None,
        "config_echo": _config_echo(cfg),
        "warnings": list(result.warnings) + list(warnings),
    }


def _format_csv(payload):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key in sorted(payload):
        val = payload[key]
        writer.writerow([key, json.dumps(val, sort_keys=True)])
    return buf.getvalue()


def emit(payload, args):
    if getattr(args, "format", "json") == "csv":
        text = _format_csv(payload)
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _save_traces(traces, path):
    with open(path, "w", encoding="utf-8") as fh:
        for k, tr in enumerate(traces):
            for rec in tr.records():
                rec["trace"] = k
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


# -- configuration -------------------------------------------------------


def resolve_seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("DEPTHKIT_SEED")
    return int(env) if env else None


def build_config(args):
    phi = args.phi
    if phi not in SIGMOID_FAMILIES:
        # SAP anneals a sigmoid; non-sigmoid phi applies to curve/fixed
        # evaluation commands only, so fall back to the default there.
        phi = "tanh"
    return SolverConfig(
        phi=phi,
        c=args.c,
        zeta_max=args.zeta_max,
        zeta_factor=args.alpha,
        n_starts=args.starts,
        seed=resolve_seed(args),
        tol_obj=args.tol_obj,
        tol_grad_maxnorm=args.tol_grad,
        max_iter=args.max_iter,
        sign_convention=CONVENTIONS[args.convention],
    )


# -- subcommands ---------------------------------------------------------


def _build_influences(args, ds):
    variant = args.variant
    if variant == "location" or variant == "subspace" or variant == "triangle":
        Z = _sample_matrix(ds)
        mu = parse_point(args.point, Z.shape[1])
        if variant == "triangle":
            return None, (Z, mu)
        inf = location_influences(Z, mu)
    elif variant == "regression":
        if ds.Y.shape[1] != 1:
            raise ValidationError("regression needs exactly one response column")
        beta = parse_point(args.point, ds.X.shape[1])
        inf = regression_influences(ds.X, ds.Y.ravel(), beta)
    elif variant == "glm":
        p, m = ds.X.shape[1], ds.Y.shape[1]
        B = parse_point(args.point, p * m).reshape(p, m)
        inf = glm_influences(ds.X, ds.Y, B, FAMILIES[args.family])
    elif variant == "covariance":
        Z = _sample_matrix(ds)
        m = Z.shape[1]
        Sigma = parse_point(args.point, m * m).reshape(m, m)
        inf = covariance_influences(Z, Sigma)
    else:  # pragma: no cover
        raise ValidationError(f"unknown depth variant {variant!r}")
    if args.normalize:
        inf = normalize_influences(inf)
    return inf, None


def cmd_depth(args):
    ds = load_csv(args.data, args.intercept, args.no_header, args.all_y)
    cfg = build_config(args)
    inf, triangle = _build_influences(args, ds)
    traces = [] if args.trace else None
    if args.variant == "triangle":
        Z, mu = triangle
        result = triangle_solve(Z, mu, cfg)
    elif args.variant == "subspace":
        result = subspace_solve(inf, args.r, cfg)
    else:
        result = sap(inf, cfg, collect_traces=traces)
    if args.trace and traces:
        _save_traces(traces, args.trace)
    emit(result_payload(result, cfg, timing=not args.no_timing), args)
    return 0


def cmd_oracle(args):
    ds = load_csv(args.data, args.intercept, args.no_header, args.all_y)
    Z = _sample_matrix(ds)
    mu = parse_point(args.point, Z.shape[1])
    inf = location_influences(Z, mu)
    conv = CONVENTIONS[args.convention]
    if inf.dim == 1:
        count = exact_depth_1d(inf, conv)
    elif inf.dim == 2:
        count = exact_depth_2d(inf, conv)
    elif inf.dim == 3:
        count = exact_depth_3d(inf, conv)
    else:
        raise ValidationError("exact oracle supports dimensions 1-3 only")
    payload = {
        "depth_count": count,
        "depth_fraction": count / inf.n,
        "dimension": inf.dim,
        "convention": conv,
        "warnings": [],
    }
    emit(payload, args)
    return 0


def parse_grid(spec):
    try:
        lo, hi, step = (float(tok) for tok in spec.split(":"))
    except ValueError:
        raise ValidationError(
            f"grid must be lo:hi:step, got {spec!r}") from None
    if step <= 0 or hi < lo:
        raise ValidationError("grid requires lo <= hi and step > 0")
    n = int(np.floor((hi - lo) / step + 0.5)) + 1
    return lo + step * np.arange(n)


def cmd_curve(args):
    ds = load_csv(args.data, args.intercept, args.no_header, args.all_y)
    Z = _sample_matrix(ds)
    if Z.shape[1] != 1:
        raise ValidationError("depth curves are for one-dimensional samples")
    grid = parse_grid(args.grid)
    phi = make_phi(args.phi, c=args.c, zeta=args.zeta)
    curve = grid_depth_curve(Z.ravel(), phi, grid, form=args.form)
    if args.format == "json":
        payload = {
            "grid": [mu for mu, _ in curve],
            "depth_fraction": [v for _, v in curve],
            "phi": args.phi,
            "form": args.form,
        }
        emit(payload, args)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["mu", "depth_fraction"])
        for mu, v in curve:
            writer.writerow([repr(mu), repr(v)])
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
    return 0


def cmd_deepest(args):
    ds = load_csv(args.data, args.intercept, args.no_header, args.all_y)
    cfg = build_config(args)
    if args.kind == "location":
        problem = DepthProblem(kind="location", Y=_sample_matrix(ds))
    elif args.kind == "regression":
        if ds.Y.shape[1] != 1:
            raise ValidationError("regression needs exactly one response column")
        problem = DepthProblem(kind="regression", X=ds.X, Y=ds.Y)
    else:
        problem = DepthProblem(kind="glm", X=ds.X, Y=ds.Y,
                               family=FAMILIES[args.family])
    region = ConstraintRegion.unrestricted()
    t0 = time.perf_counter()
    B, res = composite_depth(problem, region=region, cfg=cfg)
    wall = time.perf_counter() - t0
    payload = {
        "parameter": [float(v) for v in np.asarray(B).ravel(order="C")],
        "depth_count": float(res["d01_count"]),
        "depth_fraction": float(res["d01_fraction"]),
        "smooth_objective": float(res["smooth_objective"]),
        "direction": [float(v) for v in np.asarray(res["direction"]).ravel(order="C")],
        "outer_iterations": len(res["outer_objective_trace"]),
        "wall_time_s": None if args.no_timing else wall,
        "config_echo": _config_echo(cfg),
        "warnings": [],
    }
    emit(payload, args)
    return 0


# -- benchmark presets ---------------------------------------------------


def _bench_instance(setting, dim, rng):
    """One synthetic dataset + hypothesis point for a preset row."""
    if setting.startswith("t1") or setting.startswith("t2"):
        n = 100 if setting.startswith("t1") else 1000
        Z = rng.standard_normal((n, dim))
        return location_influences(Z, np.full(dim, 0.1))
    if setting.startswith("t3"):
        n, m = 500, 50
        Z = rng.uniform(-3.0, 3.0, size=(n, m))
        if setting == "t3-zero":
            mu = np.zeros(m)
        elif setting == "t3-gauss-mu":
            mu = 0.1 * rng.standard_normal(m)
        else:
            mu = rng.uniform(-0.5, 0.5, size=m)
        return location_influences(Z, mu)
    # regression presets: p predictors plus an intercept column
    n = 1000
    X = np.hstack([np.ones((n, 1)), rng.standard_normal((n, dim))])
    beta_true = np.ones(dim + 1)
    noise = rng.standard_normal(n)
    if setting == "t4-cauchy":
        noise = rng.standard_cauchy(n)
    y = X @ beta_true + noise
    return regression_influences(X, y, np.zeros(dim + 1))


def bench_setting(setting, dim, runs, seed, cfg=None):
    """Run one preset row; returns (mean_time_s, mean_depth_fraction)."""
    cfg = cfg or SolverConfig()
    seeds = np.random.SeedSequence(seed).spawn(runs)
    times, depths = [], []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        inf = _bench_instance(setting, dim, rng)
        run_cfg = cfg.with_(seed=int(ss.generate_state(1)[0]))
        t0 = time.perf_counter()
        result = sap(inf, run_cfg)
        times.append(time.perf_counter() - t0)
        depths.append(result.d01_fraction)
    return float(np.mean(times)), float(np.mean(depths))


PRESETS = {
    "t1": [("t1", m) for m in (10, 20, 30, 40)],
    "t2": [("t2", m) for m in (10, 20, 30, 40)],
    "t3": [("t3-zero", 50), ("t3-gauss-mu", 50), ("t3-unif-mu", 50)],
    "t4-gauss": [("t4-gauss", p) for p in (10, 20, 30, 40)],
    "t4-cauchy": [("t4-cauchy", p) for p in (10, 20, 30, 40)],
}


def cmd_bench(args):
    cfg = build_config(args)
    rows = []
    seed = resolve_seed(args)
    seed = 0 if seed is None else seed
    for setting, dim in PRESETS[args.preset]:
        mean_t, mean_d = bench_setting(setting, dim, args.runs, seed, cfg)
        rows.append({
            "setting": setting,
            "dim": dim,
            "mean_time_s": None if args.no_timing else mean_t,
            "mean_depth": mean_d,
        })
    if args.format == "json":
        emit({"preset": args.preset, "runs": args.runs, "rows": rows}, args)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["setting", "dim", "mean_time_s", "mean_depth"])
        for row in rows:
            writer.writerow([row["setting"], row["dim"],
                             json.dumps(row["mean_time_s"]),
                             repr(row["mean_depth"])])
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
    return 0


# -- argument parsing ----------------------------------------------------


def _common_flags(p):
    p.add_argument("--data", required=True, help="input CSV file")
    p.add_argument("--phi", default="tanh", help="phi family name")
    p.add_argument("--zeta", type=float, default=1.0,
                   help="sharpness for fixed-phi evaluation")
    p.add_argument("--zeta-max", type=float, default=10.0)
    p.add_argument("--alpha", type=float, default=1.25,
                   help="annealing sharpness growth factor")
    p.add_argument("--starts", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--c", type=float, default=1.0, help="phi clipping parameter")
    p.add_argument("--tol-obj", type=float, default=1e-2)
    p.add_argument("--tol-grad", type=float, default=1.0)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--normalize", action="store_true",
                   help="affine-invariant normalization of the influences")
    p.add_argument("--convention", choices=sorted(CONVENTIONS),
                   default="right-closed")
    p.add_argument("--family", choices=sorted(FAMILIES), default="gaussian")
    p.add_argument("--out", default=None, help="write output to a file")
    p.add_argument("--trace", default=None, help="write solver trace (JSONL)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--intercept", action="store_true",
                   help="prepend a ones column to the predictors")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--all-y", action="store_true",
                   help="treat every CSV column as a response")
    p.add_argument("--no-timing", action="store_true",
                   help="report wall_time_s as null for reproducible output")
    p.add_argument("--threads", type=int, default=1,
                   help="multistart worker count (starts run sequentially)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="depthkit",
        description="Generalized Tukey-type depth computation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_depth = sub.add_parser("depth", help="depth at a hypothesis point")
    p_depth.add_argument("variant", choices=(
        "location", "regression", "glm", "covariance", "subspace", "triangle"))
    p_depth.add_argument("--point", required=True,
                         help="hypothesis point, inline comma list or file")
    p_depth.add_argument("--r", type=int, default=2,
                         help="subspace dimension (subspace variant)")
    _common_flags(p_depth)
    p_depth.set_defaults(func=cmd_depth)

    p_deepest = sub.add_parser("deepest", help="deepest-point search")
    p_deepest.add_argument("--kind", choices=("location", "regression", "glm"),
                           default="location")
    _common_flags(p_deepest)
    p_deepest.set_defaults(func=cmd_deepest)

    p_oracle = sub.add_parser("oracle", help="exact low-dimensional depth")
    p_oracle.add_argument("--point", required=True)
    _common_flags(p_oracle)
    p_oracle.set_defaults(func=cmd_oracle)

    p_curve = sub.add_parser("curve", help="1D depth curve over a mu grid")
    p_curve.add_argument("--grid", required=True, help="lo:hi:step")
    p_curve.add_argument("--form", choices=("one_sided", "contrast"),
                         default="one_sided")
    _common_flags(p_curve)
    p_curve.set_defaults(format="csv")
    p_curve.set_defaults(func=cmd_curve)

    p_bench = sub.add_parser("bench", help="benchmark presets")
    p_bench.add_argument("--preset", choices=sorted(PRESETS), required=True)
    p_bench.add_argument("--runs", type=int, default=50)
    _common_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)
    # bench/curve/deepest have no --data requirement differences; bench
    # synthesizes its own data
    for action in p_bench._actions:
        if action.dest == "data":
            action.required = False
    return parser


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    argv = list(argv)
    # join "--grid -6:6:0.01" so a leading minus is not read as an option
    for i, tok in enumerate(argv[:-1]):
        if tok == "--grid" and argv[i + 1].startswith("-"):
            argv[i:i + 2] = [f"--grid={argv[i + 1]}"]
            break
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ValidationError, DimensionError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SolverError, DegeneracyError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 4
    except DepthError as exc:  # pragma: no cover - catch-all
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
