"""Simulation studies: correlated designs, replicate harness, and the
median/robust-SD summary tables for the logistic and Poisson benchmarks."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .diagnostics import check_kkt_l1, check_local_max
from .families import FamilySpec, LOGISTIC, deviance as family_deviance, mean, sample_response
from .penalties import PenaltySpec
from .solver import Dataset, SolverConfig, default_grid, ica_path, lambda_max_proxy, restricted_newton_mle
from .tuning import CV, SelectionResult, kfold_cv, select_lambda

ORACLE = "oracle"


@dataclass
class SimConfig:
    n: int
    p: int
    family: FamilySpec
    beta_true: np.ndarray
    ar_rho: float = 0.5
    replicates: int = 100
    seed: int = 0
    methods: List[PenaltySpec] = field(default_factory=lambda: [PenaltySpec("l1"), PenaltySpec("scad"), PenaltySpec("mcp", a=3.0)])
    selection: str = "bic"
    test_size: int = 10000
    folds: int = 5
    nlambda: int = 100
    lambda_min_ratio: float = 0.01
    tol: float = 1e-8
    max_sweeps: int = 100
    sic_factor: Optional[float] = None
    include_oracle: bool = True
    collect_checks: bool = False

    def __post_init__(self) -> None:
        self.beta_true = np.asarray(self.beta_true, dtype=float)
        if self.beta_true.shape != (self.p,):
            raise ValueError("beta_true must have length p")
        if not -1 < self.ar_rho < 1:
            raise ValueError("ar_rho must lie in (-1, 1)")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")


@dataclass
class SimMetrics:
    pe: float
    l2_loss: float
    l1_loss: float
    deviance: float
    n_selected: int
    false_negatives: int
    half_min_signal: float


METRIC_NAMES = ("pe", "l2_loss", "l1_loss", "deviance", "n_selected", "false_negatives")


def _ar1_rows(n: int, p: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    # exact AR(1) recursion: unit marginals, corr(x_i, x_j) = rho^|i-j|
    eps = rng.standard_normal((n, p))
    X = np.empty((n, p))
    X[:, 0] = eps[:, 0]
    scale = np.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        X[:, j] = rho * X[:, j - 1] + scale * eps[:, j]
    return X


def gen_design(n: int, p: int, ar_rho: float, rng: np.random.Generator) -> Dataset:
    """Rows i.i.d. N(0, Sigma) with Sigma_ij = ar_rho^|i-j|, then column-standardized."""
    if not -1 < ar_rho < 1:
        raise ValueError("ar_rho must lie in (-1, 1)")
    return Dataset.from_arrays(_ar1_rows(n, p, ar_rho, rng), np.zeros(n), standardize=True)


def half_min_signal(beta_true: np.ndarray) -> float:
    nz = np.abs(beta_true[beta_true != 0])
    return float(nz.min()) / 2.0 if nz.size else 0.0


def prediction_error(
    fam: FamilySpec,
    beta_hat: np.ndarray,
    beta_true: np.ndarray,
    ar_rho: float,
    test_size: int,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo estimate of E[Y - b'(x^T beta_hat)]^2 on a fresh sample."""
    if test_size < 1:
        raise ValueError("test_size must be at least 1")
    X = _ar1_rows(test_size, beta_true.shape[0], ar_rho, rng)
    y = sample_response(fam, X @ beta_true, rng)
    with np.errstate(over="ignore"):
        pred = np.atleast_1d(mean(fam, X @ beta_hat))
    err = y - pred
    return float(err @ err) / test_size


def evaluate_fit(
    beta_hat: np.ndarray,
    beta_true: np.ndarray,
    data: Dataset,
    fam: FamilySpec,
    pe: float = float("nan"),
) -> SimMetrics:
    """Selection and estimation metrics for one fit.

    ``beta_hat`` is on the original column scale.  ``pe`` is the
    independently computed prediction error (see :func:`prediction_error`);
    it needs fresh test draws, so it is passed in rather than derived here.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta_true = np.asarray(beta_true, dtype=float)
    if beta_hat.shape != beta_true.shape:
        raise ValueError("beta_hat and beta_true lengths differ")
    diff = beta_hat - beta_true
    true_supp = beta_true != 0
    dev = family_deviance(fam, data.y, data.original_x(), beta_hat)
    return SimMetrics(
        pe=pe,
        l2_loss=float(np.linalg.norm(diff)),
        l1_loss=float(np.abs(diff).sum()),
        deviance=dev,
        n_selected=int(np.count_nonzero(beta_hat)),
        false_negatives=int(np.count_nonzero(true_supp & (beta_hat == 0))),
        half_min_signal=half_min_signal(beta_true),
    )


def robust_sd(values) -> float:
    """Normal-consistent robust spread: IQR / 1.349."""
    values = np.asarray(values, dtype=float)
    q75, q25 = np.percentile(values, [75, 25])
    return float(q75 - q25) / 1.349


@dataclass
class CheckCounters:
    fits: int = 0
    converged: int = 0
    ascent_violations: int = 0
    local_max_failures: int = 0
    l1_kkt_failures: int = 0


@dataclass
class ExperimentResult:
    config: SimConfig
    metrics: dict  # method label -> {metric name: np.ndarray over replicates}
    failures: List[str]
    checks: CheckCounters

    def summary(self) -> dict:
        out = {}
        for method, cols in self.metrics.items():
            out[method] = {m: (float(np.median(v)), robust_sd(v)) for m, v in cols.items()}
        return out

    def table_rows(self):
        for method, stats in self.summary().items():
            for metric, (med, rsd) in stats.items():
                yield method, metric, med, rsd


def _method_label(pen: PenaltySpec) -> str:
    return {"l1": "lasso", "scad": "scad", "mcp": "mcp"}[pen.kind]


def _run_checks(path, data, fam, pen, cfg, counters: CheckCounters) -> None:
    counters.ascent_violations += path.ascent_violations
    for k, lam in enumerate(path.lambdas):
        counters.fits += 1
        if not path.converged[k]:
            continue
        counters.converged += 1
        b = path.coefficients[k]
        report = check_local_max(data, fam, pen, float(lam), b, stationarity_tol=10.0 * cfg.tol)
        if not report.passes_nonstrict:
            counters.local_max_failures += 1
        if pen.kind == "l1":
            ok, _, _ = check_kkt_l1(data, fam, float(lam), b)
            if not ok:
                counters.l1_kkt_failures += 1


def run_experiment(config: SimConfig) -> ExperimentResult:
    """Run the replicate study and collect per-method metric samples.

    Fully reproducible: per-replicate generators are spawned from the master
    seed, so results do not depend on execution order.
    """
    fam = config.family
    labels = [_method_label(p) for p in config.methods]
    if config.include_oracle:
        labels.append(ORACLE)
    store = {lab: {m: [] for m in METRIC_NAMES} for lab in labels}
    failures: List[str] = []
    counters = CheckCounters()
    true_supp = np.flatnonzero(config.beta_true)

    seeds = np.random.SeedSequence(config.seed).spawn(config.replicates)
    for r in range(config.replicates):
        rng = np.random.default_rng(seeds[r])
        try:
            rep = _run_replicate(config, fam, rng, true_supp, counters)
        except Exception as exc:  # noqa: BLE001 - recorded, never silent
            failures.append(f"replicate {r}: {exc}")
            warnings.warn(f"replicate {r} failed: {exc}", stacklevel=2)
            continue
        for lab, metrics in rep.items():
            for m in METRIC_NAMES:
                store[lab][m].append(getattr(metrics, m))

    metrics = {lab: {m: np.asarray(v) for m, v in cols.items()} for lab, cols in store.items()}
    return ExperimentResult(config, metrics, failures, counters)


def _run_replicate(config: SimConfig, fam: FamilySpec, rng, true_supp, counters) -> dict:
    X_raw = _ar1_rows(config.n, config.p, config.ar_rho, rng)
    y = sample_response(fam, X_raw @ config.beta_true, rng)
    if fam.kind == LOGISTIC and (y.sum() == 0 or y.sum() == config.n):
        raise RuntimeError("degenerate replicate: single-class response")
    data = Dataset.from_arrays(X_raw, y, standardize=True)

    lmax = lambda_max_proxy(data, fam)
    grid = default_grid(lmax, config.nlambda, config.lambda_min_ratio)
    cfg = SolverConfig(lambda_grid=grid, max_sweeps=config.max_sweeps, tol=config.tol)

    # one shared test sample per replicate keeps method comparisons paired
    test_rng = np.random.default_rng(rng.integers(2**63))
    X_test = _ar1_rows(config.test_size, config.p, config.ar_rho, test_rng)
    y_test = sample_response(fam, X_test @ config.beta_true, test_rng)

    def pe_of(beta_orig):
        with np.errstate(over="ignore"):
            pred = np.atleast_1d(mean(fam, X_test @ beta_orig))
        err = y_test - pred
        return float(err @ err) / config.test_size

    out = {}
    for pen in config.methods:
        path = ica_path(data, fam, pen, cfg)
        if config.selection == CV:
            sel = kfold_cv(data, fam, pen, cfg, config.folds, seed=int(rng.integers(2**31)))
        else:
            sel = select_lambda(path, config.selection, data, fam, config.sic_factor)
        beta_orig = path.original_coefficients()[sel.chosen_index]
        out[_method_label(pen)] = evaluate_fit(beta_orig, config.beta_true, data, fam, pe=pe_of(beta_orig))
        if config.collect_checks:
            _run_checks(path, data, fam, pen, cfg, counters)

    if config.include_oracle:
        beta_std, ok = restricted_newton_mle(data.X, y, fam, true_supp)
        if not ok:
            raise RuntimeError("oracle Newton fit did not converge")
        beta_orig = beta_std / data.column_scales
        out[ORACLE] = evaluate_fit(beta_orig, config.beta_true, data, fam, pe=pe_of(beta_orig))
    return out
