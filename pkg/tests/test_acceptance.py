"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The two 100-replicate studies (logistic and Poisson benchmarks) are shared
module-scope fixtures because several criteria read off the same runs.  The
optional high-dimensional profile is enabled with FCPGLM_RUN_SLOW=1 and
takes roughly half an hour.
"""

import math
import os
import time

import numpy as np
import pytest

from fcpglm import (
    BoundedResponses,
    Dataset,
    FamilySpec,
    PenaltySpec,
    ProxProblem,
    SimConfig,
    SolverConfig,
    default_grid,
    deviation_bound,
    ica_path,
    lambda_max_proxy,
    log_likelihood,
    mean,
    penalty_value,
    prox_univariate,
    run_experiment,
    sample_response,
    variance_fn,
)

GAUSS = FamilySpec("gaussian")
LOGIT = FamilySpec("logistic")
POIS = FamilySpec("poisson")

RUNTIME_BUDGET = 600.0  # seconds per table replication


_CAPSYS = None


@pytest.fixture(autouse=True)
def _live_report(capsys):
    # let the ACCEPTANCE lines through pytest's output capture
    global _CAPSYS
    _CAPSYS = capsys
    yield
    _CAPSYS = None


def _report(num: int, ok: bool, detail: str) -> None:
    line = f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}"
    if _CAPSYS is not None:
        with _CAPSYS.disabled():
            print(line)
    else:
        print(line)


def _medians(result, method: str):
    return {k: float(np.median(v)) for k, v in result.metrics[method].items()}


def _table_config(family, beta_nonzero, seed):
    beta = np.zeros(25)
    beta[:5] = beta_nonzero
    return SimConfig(n=200, p=25, family=family, beta_true=beta, replicates=100,
                     seed=seed, collect_checks=True)


@pytest.fixture(scope="module")
def logistic_run():
    cfg = _table_config(LOGIT, [2.5, -1.9, 2.8, -2.2, 3.0], seed=7)
    t0 = time.time()
    res = run_experiment(cfg)
    return res, time.time() - t0


@pytest.fixture(scope="module")
def poisson_run():
    cfg = _table_config(POIS, [1.25, -0.95, 0.9, -1.1, 0.6], seed=11)
    t0 = time.time()
    res = run_experiment(cfg)
    return res, time.time() - t0


def test_criterion_1_logistic_benchmark(logistic_run):
    res, elapsed = logistic_run
    scad, lasso = _medians(res, "scad"), _medians(res, "lasso")
    checks = {
        "scad #S in [5,6]": 5 <= scad["n_selected"] <= 6,
        "scad FN = 0": scad["false_negatives"] == 0,
        "lasso #S in [7,12]": 7 <= lasso["n_selected"] <= 12,
        "lasso FN = 0": lasso["false_negatives"] == 0,
        "scad L2 <= 0.6 * lasso L2": scad["l2_loss"] <= 0.6 * lasso["l2_loss"],
        "runtime <= 10 min": elapsed <= RUNTIME_BUDGET,
        "no replicate failures": not res.failures,
    }
    ok = all(checks.values())
    _report(1, ok, f"logistic n=200 p=25 x100 reps: scad #S={scad['n_selected']:.0f} "
                   f"L2={scad['l2_loss']:.3f}, lasso #S={lasso['n_selected']:.0f} "
                   f"L2={lasso['l2_loss']:.3f}, {elapsed:.0f}s"
                   + ("" if ok else f"; failed: {[k for k, v in checks.items() if not v]}"))
    assert ok, checks


def test_criterion_2_poisson_benchmark(poisson_run):
    res, elapsed = poisson_run
    scad, lasso = _medians(res, "scad"), _medians(res, "lasso")
    checks = {
        "scad #S in [5,6]": 5 <= scad["n_selected"] <= 6,
        "scad FN = 0": scad["false_negatives"] == 0,
        "scad L2 < lasso L2": scad["l2_loss"] < lasso["l2_loss"],
        "runtime <= 10 min": elapsed <= RUNTIME_BUDGET,
        "no replicate failures": not res.failures,
    }
    ok = all(checks.values())
    _report(2, ok, f"poisson n=200 p=25 x100 reps: scad #S={scad['n_selected']:.0f} "
                   f"L2={scad['l2_loss']:.3f}, lasso L2={lasso['l2_loss']:.3f}, {elapsed:.0f}s"
                   + ("" if ok else f"; failed: {[k for k, v in checks.items() if not v]}"))
    assert ok, checks


def test_criterion_3_oracle_prediction_error(logistic_run):
    res, _ = logistic_run
    pe = _medians(res, "oracle")["pe"]
    ok = 0.085 <= pe <= 0.105
    _report(3, ok, f"logistic oracle PE median = {pe:.4f}, required in [0.085, 0.105]")
    assert ok


@pytest.mark.skipif(not os.environ.get("FCPGLM_RUN_SLOW"),
                    reason="high-dimensional profile; set FCPGLM_RUN_SLOW=1 to enable")
def test_criterion_4_high_dimensional_profile():
    beta = np.zeros(500)
    beta[:5] = [2.5, -1.9, 2.8, -2.2, 3.0]
    cfg = SimConfig(n=200, p=500, family=LOGIT, beta_true=beta, replicates=20,
                    seed=13, selection="cv", folds=5, collect_checks=True)
    t0 = time.time()
    res = run_experiment(cfg)
    elapsed = time.time() - t0
    scad = _medians(res, "scad")
    ok = 5 <= scad["n_selected"] <= 15 and scad["false_negatives"] == 0
    _report(4, ok, f"logistic p=500 CV x20 reps: scad #S={scad['n_selected']:.0f} "
                   f"FN={scad['false_negatives']:.0f}, {elapsed:.0f}s")
    assert ok
    assert res.checks.ascent_violations == 0


def test_criterion_5_prox_oracle_equivalence():
    rng = np.random.default_rng(17)
    worst = 0.0
    for spec in (PenaltySpec("l1"), PenaltySpec("scad"), PenaltySpec("mcp", a=3.0)):
        for _ in range(10_000):
            z = float(rng.uniform(-5.0, 5.0))
            lam = float(rng.uniform(0.05, 2.0))
            cl = float(rng.uniform(0.2, 10.0))
            got = prox_univariate(spec, ProxProblem(z, lam, cl))
            obj_got = 0.5 * (z - got) ** 2 + cl * penalty_value(spec, abs(got), lam)
            az = abs(z)
            grid = np.sign(z) * np.arange(0.0, az + 1e-4, 1e-4) if z != 0 else np.zeros(1)
            obj_grid = 0.5 * (z - grid) ** 2 + cl * penalty_value(spec, np.abs(grid), lam)
            gap = obj_got - float(obj_grid.min())
            worst = max(worst, gap)
    ok = worst <= 1e-9
    _report(5, ok, f"3x10^4 scalar prox problems vs 1e-4 grid: worst objective gap {worst:.3e} <= 1e-9")
    assert ok


def test_criterion_6_ascent_property(logistic_run, poisson_run):
    v1 = logistic_run[0].checks.ascent_violations
    v2 = poisson_run[0].checks.ascent_violations
    fits = logistic_run[0].checks.fits + poisson_run[0].checks.fits
    ok = v1 == 0 and v2 == 0 and fits > 0
    _report(6, ok, f"{fits} path fits audited, ascent violations: logistic={v1}, poisson={v2}")
    assert ok


def test_criterion_7_local_max_and_kkt(logistic_run, poisson_run):
    c1, c2 = logistic_run[0].checks, poisson_run[0].checks
    lm = c1.local_max_failures + c2.local_max_failures
    kkt = c1.l1_kkt_failures + c2.l1_kkt_failures
    conv = c1.converged + c2.converged
    ok = lm == 0 and kkt == 0 and conv > 0
    _report(7, ok, f"{conv} converged fits: local-maximizer failures={lm}, global L1 KKT failures={kkt}")
    assert ok


def test_criterion_7_gaussian_l1_global_grid():
    # p=2 Gaussian lasso: exhaustive grid over [-3,3]^2 at 1e-3 spacing must
    # not beat the solver's penalized objective by more than 1e-6
    rng = np.random.default_rng(23)
    X = rng.normal(size=(30, 2))
    beta0 = np.array([1.2, -0.8])
    y = X @ beta0 + rng.normal(scale=0.5, size=30)
    d = Dataset.from_arrays(X, y)
    n = d.n
    A = d.X.T @ d.X / n
    g = d.X.T @ d.y / n
    c0 = -0.5 * float(d.y @ d.y) / n  # constant offset of l_n, affine-reduced form adds it back
    axis = np.arange(-3.0, 3.0 + 1e-3, 1e-3)
    worst = -np.inf
    for lam in (0.4, 0.1, 0.02):
        path = ica_path(d, GAUSS, PenaltySpec("l1"), SolverConfig(np.array([lam])))
        b = path.coefficients[0]
        q_hat = log_likelihood(GAUSS, d.y, d.X, b) - lam * float(np.abs(b).sum())
        best = -np.inf
        for b1 in axis:  # row-chunked exhaustive scan
            q_row = (g[0] * b1 + g[1] * axis
                     - 0.5 * (A[0, 0] * b1 * b1 + 2.0 * A[0, 1] * b1 * axis + A[1, 1] * axis * axis)
                     - lam * (abs(b1) + np.abs(axis)))
            best = max(best, float(q_row.max()))
        worst = max(worst, best - q_hat)
    ok = worst <= 1e-6
    _report(7, ok, f"p=2 gaussian L1 grid search: best grid Q - solver Q = {worst:.3e} <= 1e-6")
    assert ok


def test_criterion_8_gradient_hessian_finite_differences():
    rng = np.random.default_rng(29)
    eps = 1e-5
    worst_g, worst_h = 0.0, 0.0
    for fam in (GAUSS, LOGIT, POIS):
        for _ in range(100):
            n, p = 25, 4
            X = rng.normal(size=(n, p)) / 2
            beta_gen = rng.normal(scale=0.4, size=p)
            y = sample_response(fam, X @ beta_gen, rng)
            beta = rng.normal(scale=0.3, size=p)
            theta = X @ beta
            grad = X.T @ (y - mean(fam, theta)) / n
            hess = -(X.T * variance_fn(fam, theta)) @ X / n
            for j in range(p):
                e = np.zeros(p)
                e[j] = eps
                fd_g = (log_likelihood(fam, y, X, beta + e) - log_likelihood(fam, y, X, beta - e)) / (2 * eps)
                worst_g = max(worst_g, abs(fd_g - grad[j]) / max(1.0, abs(grad[j])))
                mu_p = np.atleast_1d(mean(fam, X @ (beta + e)))
                mu_m = np.atleast_1d(mean(fam, X @ (beta - e)))
                fd_h = (X.T @ (y - mu_p) - X.T @ (y - mu_m)) / (2 * eps * n)
                worst_h = max(worst_h, float(np.max(np.abs(fd_h - hess[:, j])) / max(1.0, np.max(np.abs(hess)))))
    ok = worst_g <= 1e-6 and worst_h <= 1e-5
    _report(8, ok, f"100 instances/family: worst relative gradient error {worst_g:.2e} <= 1e-6, "
                   f"worst Hessian error {worst_h:.2e} <= 1e-5")
    assert ok


def test_criterion_9_hoeffding_bound_monte_carlo():
    rng = np.random.default_rng(31)
    n, draws = 50, 100_000
    a = rng.normal(size=n)
    probs = rng.uniform(0.1, 0.9, size=n)
    Y = rng.random((draws, n)) < probs
    stats = (Y - probs) @ a
    a2 = float(np.linalg.norm(a))
    ainf = float(np.max(np.abs(a)))
    kind = BoundedResponses(0.0, 1.0)
    details, ok = [], True
    for scale in (0.5, 1.0, 1.5):
        eps = scale * a2
        emp = float(np.mean(np.abs(stats) > eps))
        bound = deviation_bound(kind, a2, ainf, eps)
        se = math.sqrt(max(emp * (1 - emp), 1.0 / draws) / draws)
        passes = emp <= bound + 3 * se
        ok = ok and passes
        details.append(f"eps={scale}*||a||2: emp={emp:.4f} bound={bound:.4f}")
    _report(9, ok, "bernoulli tail bound, 1e5 draws: " + "; ".join(details))
    assert ok


def test_criterion_10_out_of_scope_note():
    # large-sample theory and the external real-data tables are not
    # reproducible at this scale; criteria 5-9 stand in for them
    _report(10, True, "asymptotic statements and real-data tables excluded by design; "
                      "covered via the property suites of criteria 5-9")
