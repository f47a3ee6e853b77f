"""Regularization-parameter selection: BIC, SIC, and K-fold cross-validation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .families import FamilySpec, LOGISTIC, log_likelihood, mean
from .penalties import PenaltySpec
from .solver import Dataset, PathResult, SolverConfig, ica_path

BIC = "bic"
SIC = "sic"
CV = "cv"


@dataclass
class SelectionResult:
    chosen_index: int
    chosen_lambda: float
    scores: np.ndarray
    criterion: str
    sic_factor: Optional[float] = None


def _coefs_for(path: PathResult, data: Dataset) -> np.ndarray:
    # match the coefficient scale to the caller's data scale
    return path.coefficients if data.standardized else path.original_coefficients()


def bic_score(data: Dataset, fam: FamilySpec, beta_hat: np.ndarray) -> float:
    """-2*n*l_n(beta) + log(n)*||beta||_0; lower is better."""
    n = data.n
    ll = log_likelihood(fam, data.y, data.X, beta_hat)
    return -2.0 * n * ll + math.log(n) * int(np.count_nonzero(beta_hat))


def sic_score(data: Dataset, fam: FamilySpec, beta_hat: np.ndarray, factor: Optional[float] = None) -> float:
    """BIC-family criterion with a configurable model-size penalty factor.

    The default factor is log(n), which makes SIC coincide with BIC; callers
    wanting a different semi-Bayesian penalty pass it explicitly.
    """
    n = data.n
    if factor is None:
        factor = math.log(n)
    ll = log_likelihood(fam, data.y, data.X, beta_hat)
    return -2.0 * n * ll + factor * int(np.count_nonzero(beta_hat))


def select_lambda(
    path: PathResult,
    criterion: str,
    data: Dataset,
    fam: FamilySpec,
    sic_factor: Optional[float] = None,
) -> SelectionResult:
    """Score each path point with BIC or SIC and return the argmin.

    Exact score ties resolve to the largest lambda (the sparsest model).
    Cross-validation needs refits and lives in :func:`kfold_cv`.
    """
    if len(path) == 0:
        raise ValueError("empty path")
    if criterion == CV:
        raise ValueError("use kfold_cv for cross-validation selection")
    if criterion not in (BIC, SIC):
        raise ValueError(f"unknown criterion {criterion!r}")
    coefs = _coefs_for(path, data)
    if criterion == BIC:
        scores = np.array([bic_score(data, fam, b) for b in coefs])
        factor = None
    else:
        scores = np.array([sic_score(data, fam, b, sic_factor) for b in coefs])
        factor = sic_factor if sic_factor is not None else math.log(data.n)
    idx = int(np.argmin(scores))  # first minimum = largest lambda among ties
    return SelectionResult(idx, float(path.lambdas[idx]), scores, criterion, factor)


def _fold_assignments(y: np.ndarray, K: int, seed: int, stratify: bool) -> np.ndarray:
    n = y.shape[0]
    rng = np.random.default_rng(seed)
    folds = np.empty(n, dtype=int)
    if stratify:
        # deal each class round-robin so every fold keeps the class balance
        for cls in np.unique(y):
            idx = np.flatnonzero(y == cls)
            rng.shuffle(idx)
            folds[idx] = np.arange(idx.size) % K
    else:
        idx = rng.permutation(n)
        folds[idx] = np.arange(n) % K
    return folds


def kfold_cv(
    data: Dataset,
    fam: FamilySpec,
    penalty: PenaltySpec,
    config: SolverConfig,
    K: int,
    seed: int,
) -> SelectionResult:
    """K-fold cross-validation on squared prediction error over the lambda grid.

    Folds come from a seeded shuffle (stratified by class for the logistic
    family); each fold's path is fit on the complement with the same grid,
    and the held-out error sum((y - b'(x beta))^2) is averaged over folds.
    """
    n = data.n
    if K < 2 or n < K:
        raise ValueError("need 2 <= K <= n folds")
    X_raw = data.original_x()
    y = data.y
    folds = _fold_assignments(y, K, seed, stratify=fam.kind == LOGISTIC)

    scores = np.zeros(config.lambda_grid.size)
    for f in range(K):
        test = folds == f
        train = ~test
        dtrain = Dataset.from_arrays(X_raw[train], y[train], standardize=True)
        path = ica_path(dtrain, fam, penalty, config)
        coefs = path.original_coefficients()
        Xte, yte = X_raw[test], y[test]
        for k, b in enumerate(coefs):
            with np.errstate(over="ignore"):
                pred = np.atleast_1d(mean(fam, Xte @ b))
            err = yte - pred
            scores[k] += float(err @ err)
    scores /= K
    idx = int(np.argmin(scores))
    return SelectionResult(idx, float(config.lambda_grid[idx]), scores, CV)
