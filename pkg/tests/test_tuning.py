"""Information criteria and cross-validation for lambda selection."""

import math

import numpy as np
import pytest

from fcpglm import (
    Dataset,
    FamilySpec,
    PenaltySpec,
    SolverConfig,
    bic_score,
    default_grid,
    ica_path,
    kfold_cv,
    lambda_max_proxy,
    log_likelihood,
    select_lambda,
    sic_score,
)
from fcpglm.tuning import _fold_assignments

GAUSS = FamilySpec("gaussian")
LOGIT = FamilySpec("logistic")


def fitted_path(seed=0, fam=GAUSS, n=100, p=8):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    beta0 = np.zeros(p)
    beta0[:3] = [1.5, -1.0, 0.8]
    theta = X @ beta0
    if fam.kind == "logistic":
        y = (rng.random(n) < 1 / (1 + np.exp(-theta))).astype(float)
    else:
        y = theta + rng.normal(size=n)
    d = Dataset.from_arrays(X, y)
    grid = default_grid(lambda_max_proxy(d, fam), K=30)
    return d, ica_path(d, fam, PenaltySpec("scad"), SolverConfig(grid))


def test_bic_formula():
    d, path = fitted_path()
    b = path.coefficients[10]
    expect = -2 * d.n * log_likelihood(GAUSS, d.y, d.X, b) + math.log(d.n) * np.count_nonzero(b)
    assert bic_score(d, GAUSS, b) == pytest.approx(expect)


def test_sic_default_factor_matches_bic():
    d, path = fitted_path(seed=1)
    for b in path.coefficients[::7]:
        assert sic_score(d, GAUSS, b) == pytest.approx(bic_score(d, GAUSS, b))
    assert sic_score(d, GAUSS, path.coefficients[5], factor=2.0) != pytest.approx(
        bic_score(d, GAUSS, path.coefficients[5])
    )


def test_select_lambda_bic_and_sic_agree_by_default():
    d, path = fitted_path(seed=2)
    sel_bic = select_lambda(path, "bic", d, GAUSS)
    sel_sic = select_lambda(path, "sic", d, GAUSS)
    assert sel_bic.chosen_index == sel_sic.chosen_index
    assert sel_sic.sic_factor == pytest.approx(math.log(d.n))
    assert sel_bic.chosen_lambda == pytest.approx(float(path.lambdas[sel_bic.chosen_index]))
    assert sel_bic.scores.shape == (len(path),)


def test_select_lambda_tie_takes_largest_lambda():
    d, path = fitted_path(seed=3)
    # duplicate coefficient rows force exact score ties; the earlier index
    # (larger lambda) must win
    path.coefficients[:] = path.coefficients[12]
    sel = select_lambda(path, "bic", d, GAUSS)
    assert sel.chosen_index == 0


def test_select_lambda_errors():
    d, path = fitted_path(seed=4)
    with pytest.raises(ValueError):
        select_lambda(path, "cv", d, GAUSS)
    with pytest.raises(ValueError):
        select_lambda(path, "aicc", d, GAUSS)


def test_fold_assignments_stratified():
    y = np.array([0.0] * 30 + [1.0] * 12)
    folds = _fold_assignments(y, K=5, seed=0, stratify=True)
    for f in range(5):
        ones = int(np.sum(y[folds == f]))
        assert ones in (2, 3)  # 12 ones dealt round-robin over 5 folds


def test_kfold_cv_selects_reasonable_lambda():
    d, _ = fitted_path(seed=5)
    grid = default_grid(lambda_max_proxy(d, GAUSS), K=20)
    cfg = SolverConfig(grid)
    sel = kfold_cv(d, GAUSS, PenaltySpec("scad"), cfg, K=5, seed=11)
    assert 0 <= sel.chosen_index < 20
    assert sel.criterion == "cv"
    assert sel.scores.shape == (20,)
    # CV error at the chosen index beats the null-model end of the path
    assert sel.scores[sel.chosen_index] <= sel.scores[0]


def test_kfold_cv_validation():
    d, _ = fitted_path(seed=6)
    cfg = SolverConfig(default_grid(0.5, K=5))
    with pytest.raises(ValueError):
        kfold_cv(d, GAUSS, PenaltySpec("l1"), cfg, K=1, seed=0)
    with pytest.raises(ValueError):
        kfold_cv(d, GAUSS, PenaltySpec("l1"), cfg, K=d.n + 1, seed=0)
