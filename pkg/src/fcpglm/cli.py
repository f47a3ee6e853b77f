"""Command-line interface: fit, select, check, simulate, plotdata.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 scale refusal.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .diagnostics import ScaleRefusalError, check_global, check_local_max
from .families import FamilySpec
from .penalties import PenaltySpec
from .solver import Dataset, SolverConfig, SolverNumericalError, default_grid, ica_path, lambda_max_proxy
from .simulate import SimConfig, run_experiment
from .tuning import CV, kfold_cv, select_lambda

EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_SCALE = 4


class InputError(ValueError):
    pass


def _manifest(command: str, digest_parts, seed) -> dict:
    h = hashlib.sha256()
    for part in digest_parts:
        h.update(part if isinstance(part, bytes) else str(part).encode())
        h.update(b"\0")
    return {
        "command": command,
        "config_digest": h.hexdigest(),
        "seed": seed,
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(),
    }


def _read_csv(path: str):
    """CSV with header row; response column named 'y', numeric predictors elsewhere."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty file")
    header = rows[0]
    if "y" not in header:
        raise InputError(f"{path}: header must contain a response column named 'y'")
    y_col = header.index("y")
    x_names = [h for i, h in enumerate(header) if i != y_col]
    X, y = [], []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
        vals = []
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"{path}: non-numeric value {cell!r} at row {r}, column {header[c]!r}") from None
            vals.append(v)
        y.append(vals[y_col])
        vals.pop(y_col)
        X.append(vals)
    if not X or not X[0]:
        raise InputError(f"{path}: no predictor data")
    return np.asarray(X, dtype=float), np.asarray(y, dtype=float), x_names


def _family_from_args(args) -> FamilySpec:
    return FamilySpec(args.family, dispersion=getattr(args, "dispersion", 1.0))


def _penalty_from_args(args) -> PenaltySpec:
    if args.penalty == "l1":
        return PenaltySpec("l1")
    if args.a is not None:
        return PenaltySpec(args.penalty, a=args.a)
    return PenaltySpec("scad") if args.penalty == "scad" else PenaltySpec("mcp", a=3.0)


def _sparse_coefs(beta: np.ndarray) -> dict:
    return {str(j): float(beta[j]) for j in np.flatnonzero(beta)}


def cmd_fit(args) -> int:
    X, y, names = _read_csv(args.data)
    fam = _family_from_args(args)
    pen = _penalty_from_args(args)
    data = Dataset.from_arrays(X, y, standardize=not args.no_standardize)
    lmax = lambda_max_proxy(data, fam)
    if lmax <= 0:
        raise InputError("lambda_max is zero: response equals the null-model mean exactly")
    grid = default_grid(lmax, args.nlambda, args.lambda_min_ratio)
    cfg = SolverConfig(lambda_grid=grid, max_sweeps=args.max_sweeps, tol=args.tol,
                       sparsity_cap=args.sparsity_cap)
    path = ica_path(data, fam, pen, cfg)
    if data.n < data.p:
        print(f"warning: p={data.p} exceeds n={data.n}; information criteria overfit in "
              "this regime, prefer --criterion cv when selecting", file=sys.stderr)
    orig = path.original_coefficients()
    doc = {
        "manifest": _manifest(" ".join(sys.argv), [open(args.data, "rb").read()], args.seed),
        "family": {"kind": fam.kind, "dispersion": fam.dispersion},
        "penalty": {"kind": pen.kind, "a": pen.a},
        "n": data.n,
        "p": data.p,
        "column_names": names,
        "column_scales": data.column_scales.tolist(),
        "standardized_input": not args.no_standardize,
        "lambdas": path.lambdas.tolist(),
        "ascent_violations": int(path.ascent_violations),
        "fits": [
            {
                "lambda": float(path.lambdas[k]),
                "coefficients": _sparse_coefs(orig[k]),
                "loglik": float(path.loglik[k]),
                "deviance": float(path.deviance[k]),
                "support_size": int(path.support_size[k]),
                "sweeps_used": int(path.sweeps_used[k]),
                "converged": bool(path.converged[k]),
            }
            for k in range(len(path))
        ],
    }
    _write_json(args.out, doc)
    return 0


def _load_path_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot parse {path}: {exc}") from exc
    for key in ("family", "penalty", "lambdas", "fits", "column_scales"):
        if key not in doc:
            raise InputError(f"{path}: missing key {key!r} in path JSON")
    return doc


def _dense_coefs(doc: dict) -> np.ndarray:
    p = doc["p"]
    out = np.zeros((len(doc["fits"]), p))
    for k, fit in enumerate(doc["fits"]):
        for j, v in fit["coefficients"].items():
            out[k, int(j)] = v
    return out


def _restandardize(doc: dict, X: np.ndarray, y: np.ndarray):
    scales = np.asarray(doc["column_scales"], dtype=float)
    if X.shape[1] != scales.size:
        raise InputError("data CSV column count does not match the path JSON")
    data = Dataset(np.asfortranarray(X / scales), y, scales, True)
    coefs_std = _dense_coefs(doc) * scales  # original -> standardized scale
    return data, coefs_std


def cmd_select(args) -> int:
    doc = _load_path_json(args.path)
    X, y, _ = _read_csv(args.data)
    fam = FamilySpec(**doc["family"])
    data, coefs_std = _restandardize(doc, X, y)
    lambdas = np.asarray(doc["lambdas"], dtype=float)
    if args.criterion == CV:
        pen = PenaltySpec(**doc["penalty"])
        cfg = SolverConfig(lambda_grid=lambdas, max_sweeps=args.max_sweeps, tol=args.tol)
        sel = kfold_cv(data, fam, pen, cfg, args.folds, seed=args.seed)
    else:
        if data.p > data.n:
            print("warning: p > n, information criteria overfit; consider --criterion cv",
                  file=sys.stderr)
        from .solver import PathResult

        path = PathResult(
            lambdas=lambdas, coefficients=coefs_std, column_scales=data.column_scales,
            loglik=np.zeros(lambdas.size), penalized_objective=np.zeros(lambdas.size),
            deviance=np.zeros(lambdas.size), support_size=np.zeros(lambdas.size, int),
            sweeps_used=np.zeros(lambdas.size, int), converged=np.ones(lambdas.size, bool),
            ascent_violations=0, standardized_input=True,
        )
        sel = select_lambda(path, args.criterion, data, fam, args.sic_factor)
    chosen = doc["fits"][sel.chosen_index]
    out = {
        "manifest": _manifest(" ".join(sys.argv), [open(args.path, "rb").read(), open(args.data, "rb").read()], args.seed),
        "criterion": sel.criterion,
        "sic_factor": sel.sic_factor,
        "chosen_index": sel.chosen_index,
        "chosen_lambda": sel.chosen_lambda,
        "scores": np.asarray(sel.scores, dtype=float).tolist(),
        "chosen_fit": chosen,
    }
    _write_json(args.out, out)
    return 0


def cmd_check(args) -> int:
    doc = _load_path_json(args.path)
    X, y, _ = _read_csv(args.data)
    fam = FamilySpec(**doc["family"])
    pen = PenaltySpec(**doc["penalty"])
    data, coefs_std = _restandardize(doc, X, y)
    reports = []
    for k, lam in enumerate(doc["lambdas"]):
        local = check_local_max(data, fam, pen, float(lam), coefs_std[k], stationarity_tol=args.stationarity_tol)
        glob = check_global(data, fam, pen, float(lam), coefs_std[k])
        reports.append({
            "lambda": float(lam),
            "stationarity_residual": local.stationarity_residual,
            "z_inf": local.z_inf,
            "z_bound": local.z_bound,
            "eigen_margin": local.eigen_margin,
            "curvature_margin": local.curvature_margin,
            "passes_strict": local.passes_strict,
            "passes_nonstrict": local.passes_nonstrict,
            "pointwise_convexity_margin": glob.pointwise_convexity_margin,
            "scad_robustness_threshold": glob.scad_robustness_threshold,
            "min_abs_coef": glob.min_abs_coef,
            "robustness_passes": glob.robustness_passes,
            "rank_deficient": glob.rank_deficient,
        })
    out = {
        "manifest": _manifest(" ".join(sys.argv), [open(args.path, "rb").read(), open(args.data, "rb").read()], None),
        "all_pass_nonstrict": all(r["passes_nonstrict"] for r in reports),
        "reports": reports,
    }
    _write_json(args.out, out)
    return 0


def _parse_sim_config(path: str) -> SimConfig:
    """Plain key=value lines with '#' comments."""
    kv = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for ln, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise InputError(f"{path}: line {ln} is not key=value")
                k, v = line.split("=", 1)
                kv[k.strip()] = v.strip()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc

    try:
        n = int(kv.get("n", 200))
        p = int(kv.get("p", 25))
        fam = FamilySpec(kv.get("family", "logistic"), dispersion=float(kv.get("dispersion", 1.0)))
        nz = [float(v) for v in kv.get("beta_nonzero", "").split(",") if v.strip()]
        beta = np.zeros(p)
        beta[: len(nz)] = nz
        methods = []
        for name in kv.get("methods", "l1,scad,mcp").split(","):
            name = name.strip()
            if name in ("l1", "lasso"):
                methods.append(PenaltySpec("l1"))
            elif name == "scad":
                methods.append(PenaltySpec("scad", a=float(kv.get("scad_a", 3.7))))
            elif name == "mcp":
                methods.append(PenaltySpec("mcp", a=float(kv.get("mcp_a", 3.0))))
            elif name:
                raise InputError(f"unknown method {name!r}")
        return SimConfig(
            n=n, p=p, family=fam, beta_true=beta,
            ar_rho=float(kv.get("rho", 0.5)),
            replicates=int(kv.get("replicates", 100)),
            seed=int(kv.get("seed", 0)),
            methods=methods,
            selection=kv.get("selection", "bic"),
            test_size=int(kv.get("test_size", 10000)),
            folds=int(kv.get("folds", 5)),
            nlambda=int(kv.get("nlambda", 100)),
            lambda_min_ratio=float(kv.get("lambda_min_ratio", 0.01)),
            tol=float(kv.get("tol", 1e-8)),
            max_sweeps=int(kv.get("max_sweeps", 100)),
            sic_factor=float(kv["sic_factor"]) if "sic_factor" in kv else None,
            include_oracle=kv.get("include_oracle", "true").lower() in ("1", "true", "yes"),
            collect_checks=kv.get("collect_checks", "false").lower() in ("1", "true", "yes"),
        )
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def cmd_simulate(args) -> int:
    config = _parse_sim_config(args.config)
    result = run_experiment(config)
    manifest = _manifest(" ".join(sys.argv), [open(args.config, "rb").read()], config.seed)
    rows = list(result.table_rows())
    with open(args.out_csv, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "metric", "median", "robust_sd"])
        for row in rows:
            w.writerow(row)
    doc = {
        "manifest": manifest,
        "summary": {m: {k: list(v) for k, v in stats.items()} for m, stats in result.summary().items()},
        "replicates_completed": int(config.replicates - len(result.failures)),
        "failures": result.failures,
        "ascent_violations": result.checks.ascent_violations,
    }
    _write_json(args.out_json, doc)
    return 0


def cmd_plotdata(args) -> int:
    doc = _load_path_json(args.path)
    coefs = _dense_coefs(doc)
    active = np.flatnonzero(np.any(coefs != 0, axis=0))
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "coefficient_index", "value"])
        for k, lam in enumerate(doc["lambdas"]):
            for j in active:
                w.writerow([lam, int(j), coefs[k, j]])
    return 0


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fcpglm", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common_fit(sp):
        sp.add_argument("--family", choices=["gaussian", "logistic", "poisson"], required=True)
        sp.add_argument("--dispersion", type=float, default=1.0)
        sp.add_argument("--penalty", choices=["l1", "scad", "mcp"], default="scad")
        sp.add_argument("--a", type=float, default=None, help="penalty shape parameter")
        sp.add_argument("--nlambda", type=int, default=100)
        sp.add_argument("--lambda-min-ratio", type=float, default=0.01)
        sp.add_argument("--tol", type=float, default=1e-8)
        sp.add_argument("--max-sweeps", type=int, default=100)
        sp.add_argument("--sparsity-cap", type=int, default=None)
        sp.add_argument("--no-standardize", action="store_true")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("fit", help="fit a regularization path on CSV data")
    sp.add_argument("data", help="CSV file with a 'y' response column")
    sp.add_argument("--out", required=True, help="output path JSON")
    add_common_fit(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("select", help="select lambda along a fitted path")
    sp.add_argument("path", help="path JSON from 'fit'")
    sp.add_argument("data", help="CSV file used for the fit")
    sp.add_argument("--out", required=True)
    sp.add_argument("--criterion", choices=["bic", "sic", "cv"], default="bic")
    sp.add_argument("--sic-factor", type=float, default=None)
    sp.add_argument("--folds", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--max-sweeps", type=int, default=100)
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("check", help="verify optimality conditions on a fitted path")
    sp.add_argument("path")
    sp.add_argument("data")
    sp.add_argument("--out", required=True)
    sp.add_argument("--stationarity-tol", type=float, default=1e-6)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("simulate", help="run a replicate study from a config file")
    sp.add_argument("config", help="key=value configuration file")
    sp.add_argument("--out-csv", required=True)
    sp.add_argument("--out-json", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("plotdata", help="emit coefficient trajectories as CSV")
    sp.add_argument("path")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_plotdata)

    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ScaleRefusalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCALE
    except (SolverNumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
