"""Simulation harness: designs, metrics, and replicate reproducibility."""

import numpy as np
import pytest

from fcpglm import (
    Dataset,
    FamilySpec,
    PenaltySpec,
    SimConfig,
    evaluate_fit,
    gen_design,
    prediction_error,
    robust_sd,
    run_experiment,
)
from fcpglm.simulate import _ar1_rows, half_min_signal

GAUSS = FamilySpec("gaussian")
LOGIT = FamilySpec("logistic")


def test_ar1_design_correlation():
    rng = np.random.default_rng(0)
    X = _ar1_rows(40000, 6, 0.5, rng)
    C = np.corrcoef(X, rowvar=False)
    for i in range(6):
        for j in range(6):
            assert C[i, j] == pytest.approx(0.5 ** abs(i - j), abs=0.03)
    assert np.std(X, axis=0) == pytest.approx(np.ones(6), abs=0.03)


def test_gen_design_standardized():
    d = gen_design(50, 4, 0.5, np.random.default_rng(1))
    assert isinstance(d, Dataset)
    assert np.allclose(np.linalg.norm(d.X, axis=0), np.sqrt(50), atol=1e-8)
    with pytest.raises(ValueError):
        gen_design(50, 4, 1.0, np.random.default_rng(1))


def test_half_min_signal():
    assert half_min_signal(np.array([2.0, -0.5, 0.0])) == pytest.approx(0.25)
    assert half_min_signal(np.zeros(3)) == 0.0


def test_robust_sd():
    vals = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    assert robust_sd(vals) == pytest.approx(2.0 / 1.349)
    rng = np.random.default_rng(2)
    sample = rng.normal(size=200000)
    assert robust_sd(sample) == pytest.approx(1.0, abs=0.02)


def test_evaluate_fit_metrics():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 4))
    beta_true = np.array([1.0, -1.0, 0.0, 0.0])
    y = X @ beta_true + rng.normal(size=30)
    d = Dataset.from_arrays(X, y)
    beta_hat = np.array([0.9, 0.0, 0.2, 0.0])
    m = evaluate_fit(beta_hat, beta_true, d, GAUSS, pe=0.5)
    assert m.pe == 0.5
    assert m.n_selected == 2
    assert m.false_negatives == 1  # true coefficient 2 missed
    assert m.l2_loss == pytest.approx(np.linalg.norm(beta_hat - beta_true))
    assert m.l1_loss == pytest.approx(np.abs(beta_hat - beta_true).sum())
    assert m.half_min_signal == pytest.approx(0.5)
    with pytest.raises(ValueError):
        evaluate_fit(beta_hat[:3], beta_true, d, GAUSS)


def test_prediction_error_gaussian_reference():
    # with beta_hat = beta_true the prediction error is the noise variance
    beta = np.array([1.0, -0.5, 0.0])
    pe = prediction_error(GAUSS, beta, beta, 0.5, 40000, np.random.default_rng(4))
    assert pe == pytest.approx(1.0, abs=0.05)
    with pytest.raises(ValueError):
        prediction_error(GAUSS, beta, beta, 0.5, 0, np.random.default_rng(4))


def small_config(**kw):
    p = kw.pop("p", 8)
    beta = np.zeros(p)
    beta[:2] = [1.5, -1.0]
    base = dict(
        n=60,
        p=p,
        family=GAUSS,
        beta_true=beta,
        replicates=2,
        seed=5,
        test_size=400,
        nlambda=20,
        methods=[PenaltySpec("l1"), PenaltySpec("scad")],
    )
    base.update(kw)
    return SimConfig(**base)


def test_sim_config_validation():
    with pytest.raises(ValueError):
        small_config(beta_true=np.zeros(3))
    with pytest.raises(ValueError):
        small_config(ar_rho=1.5)
    with pytest.raises(ValueError):
        small_config(replicates=0)


def test_run_experiment_reproducible():
    r1 = run_experiment(small_config())
    r2 = run_experiment(small_config())
    assert set(r1.metrics) == {"lasso", "scad", "oracle"}
    for m in r1.metrics:
        for k in r1.metrics[m]:
            assert np.array_equal(r1.metrics[m][k], r2.metrics[m][k])
    assert not r1.failures
    assert r1.metrics["scad"]["pe"].shape == (2,)


def test_run_experiment_summary_and_checks():
    res = run_experiment(small_config(collect_checks=True, replicates=3))
    summary = res.summary()
    assert res.checks.fits > 0
    assert res.checks.converged > 0
    assert res.checks.ascent_violations == 0
    assert res.checks.local_max_failures == 0
    assert res.checks.l1_kkt_failures == 0
    rows = list(res.table_rows())
    assert ("oracle", "false_negatives") in {(m, k) for m, k, *_ in rows}
    for _, stats in summary.items():
        assert stats["false_negatives"][0] == 0.0


def test_run_experiment_cv_selection():
    res = run_experiment(small_config(selection="cv", folds=3, replicates=1, include_oracle=False))
    assert set(res.metrics) == {"lasso", "scad"}
    assert not res.failures
