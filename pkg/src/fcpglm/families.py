"""Canonical exponential-family GLM primitives.

Cumulant function b(theta), mean b'(theta), variance b''(theta),
(affine-reduced, n-averaged) log-likelihood, deviance, and response
sampling for the Gaussian, logistic, and Poisson families.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GAUSSIAN = "gaussian"
LOGISTIC = "logistic"
POISSON = "poisson"

_KINDS = (GAUSSIAN, LOGISTIC, POISSON)

# Sampling guard: Poisson rates above exp(30) are treated as a data error.
POISSON_THETA_MAX = 30.0


@dataclass(frozen=True)
class FamilySpec:
    """GLM family plus dispersion phi (sigma^2 for Gaussian; fixed at 1 otherwise)."""

    kind: str
    dispersion: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}; expected one of {_KINDS}")
        if not self.dispersion > 0:
            raise ValueError("dispersion must be positive")
        if self.kind in (LOGISTIC, POISSON) and self.dispersion != 1.0:
            raise ValueError(f"{self.kind} family requires dispersion = 1")


@dataclass(frozen=True)
class LinearPredictorState:
    """theta = X beta together with its mean and variance images."""

    theta: np.ndarray
    mu: np.ndarray
    sigma_diag: np.ndarray


def _as_theta(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    return theta


def cumulant(fam: FamilySpec, theta):
    """b(theta): 0.5*theta^2 (Gaussian), log(1+e^theta) (logistic), e^theta (Poisson)."""
    theta = _as_theta(theta)
    if fam.kind == GAUSSIAN:
        out = 0.5 * theta * theta
    elif fam.kind == LOGISTIC:
        # stable evaluation: max(theta, 0) + log1p(exp(-|theta|))
        out = np.maximum(theta, 0.0) + np.log1p(np.exp(-np.abs(theta)))
    else:
        out = np.exp(theta)
    return out if out.ndim else float(out)


def mean(fam: FamilySpec, theta):
    """b'(theta), the mean of the response at canonical parameter theta."""
    theta = _as_theta(theta)
    if fam.kind == GAUSSIAN:
        out = theta.copy() if theta.ndim else theta
    elif fam.kind == LOGISTIC:
        out = _sigmoid(theta)
    else:
        out = np.exp(theta)
    return out if np.ndim(out) else float(out)


def variance_fn(fam: FamilySpec, theta):
    """b''(theta); strictly positive for every family."""
    theta = _as_theta(theta)
    if fam.kind == GAUSSIAN:
        out = np.ones_like(theta)
    elif fam.kind == LOGISTIC:
        mu = _sigmoid(theta)
        out = mu * (1.0 - mu)
    else:
        out = np.exp(theta)
    return out if out.ndim else float(out)


def _sigmoid(theta: np.ndarray) -> np.ndarray:
    shape = np.shape(theta)
    theta = np.atleast_1d(theta)
    out = np.empty_like(theta)
    pos = theta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-theta[pos]))
    e = np.exp(theta[~pos])
    out[~pos] = e / (1.0 + e)
    return out.reshape(shape)


def _fused_state(fam: FamilySpec):
    """Return state(theta, mu_out, w_out) -> sum b(theta), filling mu and w in place.

    Internal fast path for the coordinate-ascent inner loop; assumes a
    finite 1-d theta and preallocated output buffers of matching length.
    Callers are expected to suppress overflow warnings; an overflowing
    cumulant sum comes back as inf and is rejected downstream.
    """
    if fam.kind == GAUSSIAN:
        def state(theta, mu, w):
            mu[:] = theta
            w.fill(1.0)
            return 0.5 * float(theta @ theta)
    elif fam.kind == LOGISTIC:
        def state(theta, mu, w):
            np.logaddexp(0.0, theta, out=w)  # w doubles as scratch here
            bsum = float(w.sum())
            np.multiply(0.5, theta, out=mu)
            np.tanh(mu, out=mu)
            mu += 1.0
            mu *= 0.5
            np.subtract(1.0, mu, out=w)
            w *= mu
            return bsum
    else:
        def state(theta, mu, w):
            np.exp(theta, out=mu)
            w[:] = mu
            return float(mu.sum())
    return state


def validate_response(fam: FamilySpec, y: np.ndarray) -> None:
    """Raise if y falls outside the family support."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("response contains non-finite values")
    if fam.kind == LOGISTIC:
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("logistic responses must be binary 0/1")
    elif fam.kind == POISSON:
        if np.any(y < 0) or np.any(y != np.round(y)):
            raise ValueError("Poisson responses must be nonnegative integers")


def predictor_state(fam: FamilySpec, X: np.ndarray, beta: np.ndarray) -> LinearPredictorState:
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if X.ndim != 2 or beta.shape != (X.shape[1],):
        raise ValueError(f"dimension mismatch: X is {X.shape}, beta is {beta.shape}")
    theta = X @ beta
    return LinearPredictorState(theta, np.atleast_1d(mean(fam, theta)), np.atleast_1d(variance_fn(fam, theta)))


def log_likelihood(fam: FamilySpec, y: np.ndarray, X: np.ndarray, beta: np.ndarray) -> float:
    """n-averaged, affine-reduced log-likelihood n^-1 [y^T X beta - 1^T b(X beta)]."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if y.shape[0] != X.shape[0]:
        raise ValueError("y and X row counts differ")
    validate_response(fam, y)
    theta = X @ np.asarray(beta, dtype=float)
    n = y.shape[0]
    return float(y @ theta - np.sum(cumulant(fam, theta))) / n


def deviance(fam: FamilySpec, y: np.ndarray, X: np.ndarray, beta: np.ndarray) -> float:
    """Standard GLM deviance 2*[saturated - fitted] unscaled log-likelihood.

    Gaussian: ||y - X beta||^2 / phi.  Logistic: binomial deviance (saturated
    term 0 for binary y).  Poisson: 2*sum{y log(y/mu) - (y - mu)} with
    0*log 0 := 0.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    validate_response(fam, y)
    theta = X @ np.asarray(beta, dtype=float)
    if fam.kind == GAUSSIAN:
        r = y - theta
        return float(r @ r) / fam.dispersion
    if fam.kind == LOGISTIC:
        # y*log(mu) + (1-y)*log(1-mu) == y*theta - b(theta) for binary y
        return float(2.0 * np.sum(cumulant(fam, theta) - y * theta))
    mu = np.exp(theta)
    ylogy = np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0)), 0.0)
    return float(2.0 * np.sum(ylogy - y * theta - y + mu))


def sample_response(fam: FamilySpec, theta, rng: np.random.Generator) -> np.ndarray:
    """Draw a response vector with canonical parameter theta; deterministic given rng state."""
    theta = np.atleast_1d(_as_theta(theta))
    if fam.kind == GAUSSIAN:
        return rng.normal(theta, np.sqrt(fam.dispersion))
    if fam.kind == LOGISTIC:
        return (rng.random(theta.shape) < _sigmoid(theta)).astype(float)
    if np.any(theta > POISSON_THETA_MAX):
        raise ValueError(f"Poisson rate overflow: theta exceeds {POISSON_THETA_MAX}")
    return rng.poisson(np.exp(theta)).astype(float)
