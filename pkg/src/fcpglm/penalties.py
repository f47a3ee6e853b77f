"""Folded-concave penalties (L1, SCAD, MCP).

Provides penalty values and derivatives, the local/maximum concavity
functionals used by the optimality checks, and the closed-form solution of
the scalar penalized least-squares problem

    min_b  0.5 * (z - b)^2 + capital_lambda * p_lam(|b|),

which is the building block of the coordinate-ascent solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

L1 = "l1"
SCAD = "scad"
MCP = "mcp"

_KINDS = (L1, SCAD, MCP)

# Right derivative of the normalized penalty rho(t) = p_lam(t)/lam at zero.
# Equal to 1 for all three penalties.
RHO_PRIME_ZERO = 1.0


@dataclass(frozen=True)
class PenaltySpec:
    """Which penalty to use plus its shape parameter ``a``.

    ``a`` is ignored for the L1 penalty.  SCAD requires ``a > 2`` and MCP
    requires ``a >= 1``; the conventional SCAD default is ``a = 3.7``.
    """

    kind: str
    a: float = 3.7

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == SCAD and not self.a > 2:
            raise ValueError("SCAD requires a > 2")
        if self.kind == MCP and not self.a >= 1:
            raise ValueError("MCP requires a >= 1")


@dataclass(frozen=True)
class ProxProblem:
    """Scalar problem 0.5*(z - b)^2 + capital_lambda * p_lam(|b|)."""

    z: float
    lam: float
    capital_lambda: float

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.capital_lambda > 0:
            raise ValueError("capital_lambda must be positive")


def _check_t_lam(t: np.ndarray, lam: float) -> None:
    if not lam > 0:
        raise ValueError("lam must be positive")
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")


def penalty_value(spec: PenaltySpec, t, lam: float):
    """Penalty value p_lam(t) for scalar or array t >= 0.

    Obtained by integrating the penalty derivative from 0; constant for
    t >= a*lam in the SCAD and MCP cases, with plateau (a+1)*lam^2/2 for
    SCAD and a*lam^2/2 for MCP.
    """
    t = np.asarray(t, dtype=float)
    _check_t_lam(t, lam)
    if spec.kind == L1:
        out = lam * t
    elif spec.kind == SCAD:
        a = spec.a
        mid = (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0))
        out = np.where(t <= lam, lam * t, np.where(t <= a * lam, mid, (a + 1.0) * lam * lam / 2.0))
    else:
        a = spec.a
        out = np.where(t <= a * lam, lam * t - t * t / (2.0 * a), a * lam * lam / 2.0)
    return out if out.ndim else float(out)


def penalty_deriv(spec: PenaltySpec, t, lam: float):
    """Penalty derivative p_lam'(t), with the value at 0 taken as the right derivative."""
    t = np.asarray(t, dtype=float)
    _check_t_lam(t, lam)
    if spec.kind == L1:
        out = np.full_like(t, lam)
    elif spec.kind == SCAD:
        a = spec.a
        out = lam * np.where(t <= lam, 1.0, np.maximum(a * lam - t, 0.0) / ((a - 1.0) * lam))
    else:
        out = np.maximum(spec.a * lam - t, 0.0) / spec.a
    return out if out.ndim else float(out)


def local_concavity_per_coord(spec: PenaltySpec, v, lam: float) -> np.ndarray:
    """Per-coordinate local concavity of the normalized penalty at each v_j.

    Requires every component of v to be nonzero.  Entry j is the maximal
    negative secant slope of rho' in a shrinking neighborhood of |v_j|:
    0 for L1; for SCAD, 1/((a-1)*lam) iff |v_j| lies in [lam, a*lam];
    for MCP, 1/(a*lam) iff |v_j| lies in (0, a*lam].  Endpoint membership
    uses closed intervals (the lim-sup in the definition attains the
    larger value at kinks).
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if np.any(v == 0):
        raise ValueError("local concavity requires all components of v to be nonzero")
    av = np.abs(v)
    out = np.zeros_like(av)
    if spec.kind == SCAD:
        a = spec.a
        out[(av >= lam) & (av <= a * lam)] = 1.0 / ((a - 1.0) * lam)
    elif spec.kind == MCP:
        out[av <= spec.a * lam] = 1.0 / (spec.a * lam)
    return out


def local_concavity(spec: PenaltySpec, v, lam: float) -> float:
    """Local concavity kappa(rho; v): the maximum of the per-coordinate values."""
    return float(np.max(local_concavity_per_coord(spec, v, lam)))


def max_concavity(spec: PenaltySpec, lam: float) -> float:
    """Maximum concavity kappa(p_lam): 0 for L1, 1/(a-1) for SCAD, 1/a for MCP."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    if spec.kind == L1:
        return 0.0
    if spec.kind == SCAD:
        return 1.0 / (spec.a - 1.0)
    return 1.0 / spec.a


def _value_scalar(kind: str, a: float, t: float, lam: float) -> float:
    # scalar fast path for t >= 0, validation done by the caller
    if kind == L1:
        return lam * t
    if kind == SCAD:
        if t <= lam:
            return lam * t
        if t <= a * lam:
            return (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0))
        return (a + 1.0) * lam * lam / 2.0
    if t <= a * lam:
        return lam * t - t * t / (2.0 * a)
    return a * lam * lam / 2.0


def _objective_abs(kind: str, a: float, az: float, lam: float, cl: float, b: float) -> float:
    # objective restricted to sgn(beta) = sgn(z), in terms of |beta| = b
    return 0.5 * (az - b) ** 2 + cl * _value_scalar(kind, a, b, lam)


def _pick_candidate(kind: str, a: float, az: float, lam: float, cl: float, cands) -> float:
    # smallest |beta| wins ties; iterate in increasing magnitude and require
    # a strict improvement to switch
    cands.sort()
    best_b, best_r = None, np.inf
    for b in cands:
        if b < 0.0 or b > az:
            continue
        r = _objective_abs(kind, a, az, lam, cl, b)
        if r < best_r:
            best_b, best_r = b, r
    return best_b


def _prox_scad_abs(a: float, az: float, lam: float, cl: float) -> float:
    z0 = max(az - cl * lam, 0.0)
    if az <= lam:
        return z0
    if cl < a - 1.0:
        # scalar objective convex on each piece: the three cases apply directly
        if az <= a * lam:
            if az <= (cl + 1.0) * lam:
                return z0
            return (az - cl * lam * a / (a - 1.0)) / (1.0 - cl / (a - 1.0))
        if az > (cl + 1.0) * lam:
            return az
        # a*lam < az <= (cl+1)*lam: compare the two local minimizers
        if _objective_abs(SCAD, a, az, lam, cl, z0) <= _objective_abs(SCAD, a, az, lam, cl, az):
            return z0
        return az
    # cl >= a-1: middle piece is non-convex; enumerate stationary points and
    # segment breakpoints, compare objective values
    cands = [0.0, z0, lam, a * lam, az]
    denom = 1.0 - cl / (a - 1.0)
    if denom > 0:
        interior = (az - cl * lam * a / (a - 1.0)) / denom
        if lam < interior <= a * lam:
            cands.append(interior)
    return _pick_candidate(SCAD, a, az, lam, cl, cands)


def _prox_mcp_abs(a: float, az: float, lam: float, cl: float) -> float:
    if cl < a:
        if az <= cl * lam:
            return 0.0
        if az <= a * lam:
            return (az - cl * lam) / (1.0 - cl / a)
        return az
    # cl >= a: non-convex scalar objective; compare candidate stationary points
    return _pick_candidate(MCP, a, az, lam, cl, [0.0, min(a * lam, az), az])


def _prox_scalar(kind: str, a: float, z: float, lam: float, cl: float) -> float:
    if z == 0.0:
        return 0.0
    s = 1.0 if z > 0 else -1.0
    az = abs(z)
    if kind == L1:
        return s * max(az - cl * lam, 0.0)
    if kind == SCAD:
        return s * _prox_scad_abs(a, az, lam, cl)
    return s * _prox_mcp_abs(a, az, lam, cl)


def prox_univariate(spec: PenaltySpec, prob: ProxProblem) -> float:
    """Global minimizer of 0.5*(z - b)^2 + capital_lambda * p_lam(|b|).

    The minimizer shares the sign of z and satisfies |b| <= |z|.  Ties
    between two global minimizers are broken toward the smaller magnitude.
    """
    return _prox_scalar(spec.kind, spec.a, float(prob.z), prob.lam, prob.capital_lambda)
