"""Directional skewness: population formulas and the empirical estimator.

The squared skewness of a projection d'X of an SMSN vector reduces to
``h(t) = (2/pi) t (a t - 3 b omega_d)**2`` with ``t = (d'gamma)**2`` and
``omega_d = d' Omega d``; when the mixing law satisfies the moment condition
``(4/pi) E(S)^2 >= E(S^2)`` the maximizer is proportional to the shape vector
``eta = omega^-1 alpha``.  The empirical estimator standardizes the data,
initializes from the dominant left singular vector of the third-moment matrix
and refines by power-style ascent on the unit sphere.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import mixing as mx
from .errors import (
    DegenerateSampleError,
    DimensionMismatchError,
    InvalidParameterError,
    NoUniqueDirectionError,
    NotSPDError,
    RankDeficientError,
)
from .model import SmsnParams, derive
from .numerics import RngStream, inv_sqrt_spd

__all__ = [
    "MaxSkewResult",
    "ThirdMomentMatrix",
    "MomentConditionWarning",
    "gamma1_univariate",
    "h_objective",
    "analytic_max_direction",
    "analytic_max_skewness",
    "gamma1_population",
    "gamma1_population_many",
    "third_moment_matrix",
    "estimate_max_direction",
    "unit_sphere_grid",
]


class MomentConditionWarning(UserWarning):
    """The mixing law fails the moment inequality gating the analytic solution."""


@dataclass(frozen=True)
class MaxSkewResult:
    """A unit direction together with the attained squared skewness."""

    direction: np.ndarray
    gamma1: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class ThirdMomentMatrix:
    """p x p^2 flattening of the empirical third moment of standardized data."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def tensor(self) -> np.ndarray:
        p = self.dim
        return self.matrix.reshape(p, p, p)


def gamma1_univariate(y: np.ndarray) -> float:
    """Squared sample skewness (m3 / m2^1.5)^2 with biased central moments."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size < 3:
        raise DegenerateSampleError(f"need at least 3 observations, got {y.size}")
    yc = y - y.mean()
    m2 = float(np.mean(yc * yc))
    if m2 <= 0.0:
        raise DegenerateSampleError("sample variance is zero")
    m3 = float(np.mean(yc * yc * yc))
    return (m3 / m2 ** 1.5) ** 2


def h_objective(t: float, omega_d: float, coef: mx.SkewCoefficients) -> float:
    """Projection skewness objective (2/pi) t (a t - 3 b omega_d)^2."""
    if omega_d <= 0.0:
        raise InvalidParameterError(f"need omega_d > 0, got {omega_d}")
    if t < 0.0 or t > omega_d * (1.0 + 1e-12):
        raise InvalidParameterError(f"need 0 <= t <= omega_d, got t={t}, omega_d={omega_d}")
    return (2.0 / math.pi) * t * (coef.a * t - 3.0 * coef.b * omega_d) ** 2


def _warn_if_condition_fails(params: SmsnParams) -> bool:
    holds, lhs, rhs = mx.check_moment_condition(params.mixing)
    if not holds:
        warnings.warn(
            f"mixing law fails (4/pi) E(S)^2 >= E(S^2) ({lhs:g} < {rhs:g}); the "
            "returned direction is not guaranteed to be the maximizer",
            MomentConditionWarning,
        )
    return holds


def analytic_max_direction(params: SmsnParams) -> np.ndarray:
    """Unit vector along eta = omega^-1 alpha, oriented towards positive skewness."""
    if not np.any(params.alpha):
        raise NoUniqueDirectionError(
            "alpha = 0: every direction attains zero skewness"
        )
    _warn_if_condition_fails(params)
    d = derive(params)
    direction = d.eta / np.linalg.norm(d.eta)
    if float(direction @ d.gamma_vec) < 0.0:
        direction = -direction
    return direction


def analytic_max_skewness(params: SmsnParams) -> float:
    """Maximal squared skewness over all projections, from the closed form.

    Evaluates h at d* = Sigma^-1 gamma / sqrt(gamma' Sigma^-1 gamma), for which
    t* = gamma' Sigma^-1 gamma and d*' Sigma d* = 1.
    """
    if not np.any(params.alpha):
        return 0.0
    _warn_if_condition_fails(params)
    d = derive(params)
    coef = mx.coefficients(params.mixing)
    # q = gamma' Omega^-1 gamma; both t* and omega_d* are rational in q
    q = float(d.gamma_vec @ np.linalg.solve(params.Omega, d.gamma_vec))
    denom = d.c2 - (2.0 / math.pi) * d.c1 * d.c1 * q
    t_star = q / denom
    omega_star = 1.0 / denom
    return h_objective(t_star, omega_star, coef)


def gamma1_population_many(params: SmsnParams, D: np.ndarray) -> np.ndarray:
    """Population squared skewness of d'X for each row d of D (vectorized).

    gamma1 is scale invariant, so each direction is normalized internally to
    d' Sigma d = 1 before evaluating the objective.
    """
    D = np.atleast_2d(np.asarray(D, dtype=float))
    if D.shape[1] != params.dim:
        raise DimensionMismatchError(
            f"directions have dimension {D.shape[1]}, expected {params.dim}"
        )
    d = derive(params)
    coef = mx.coefficients(params.mixing)
    dSd = np.einsum("ij,jk,ik->i", D, d.Sigma, D)
    if np.any(dSd <= 0.0):
        raise InvalidParameterError("directions must be non-zero")
    dg = (D @ d.gamma_vec) ** 2 / dSd
    om = np.einsum("ij,jk,ik->i", D, params.Omega, D) / dSd
    return (2.0 / math.pi) * dg * (coef.a * dg - 3.0 * coef.b * om) ** 2


def gamma1_population(params: SmsnParams, dvec: np.ndarray) -> float:
    """Population squared skewness of the projection along ``dvec``."""
    return float(gamma1_population_many(params, np.asarray(dvec))[0])


def third_moment_matrix(U: np.ndarray) -> ThirdMomentMatrix:
    """Empirical third-moment matrix of standardized data, flattened to p x p^2.

    Column block j holds the p x p slice (1/n) sum_i u_i u_i' u_ij.
    """
    U = np.asarray(U, dtype=float)
    if U.ndim != 2:
        raise DimensionMismatchError("U must be a 2-d data matrix")
    n, p = U.shape
    if n < p + 1:
        raise DimensionMismatchError(f"need n >= p + 1, got n={n}, p={p}")
    B = (U[:, :, None] * U[:, None, :]).reshape(n, p * p)
    return ThirdMomentMatrix(matrix=(U.T @ B) / n)


def unit_sphere_grid(p: int, n: int, rng: RngStream | None = None) -> np.ndarray:
    """Quasi-uniform unit directions: dense lattices for p <= 3, random beyond."""
    if p < 1 or n < 1:
        raise InvalidParameterError("need p >= 1 and n >= 1")
    if p == 1:
        return np.array([[1.0], [-1.0]])
    if p == 2:
        theta = 2.0 * math.pi * np.arange(n) / n
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if p == 3:
        # Fibonacci lattice
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        phi = math.pi * (1.0 + math.sqrt(5.0)) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    gen = (rng or RngStream(0)).generator()
    D = gen.standard_normal((n, p))
    return D / np.linalg.norm(D, axis=1, keepdims=True)


def _ascend(T: np.ndarray, c0: np.ndarray, max_iter: int, tol: float):
    """Maximize ((c' T(c,c))^2 on the unit sphere from c0.

    Power-style fixed-point steps with a projected-gradient Armijo fallback;
    the objective never decreases across accepted iterations.
    """

    def tcc(c):
        return np.einsum("ijk,j,k->i", T, c, c)

    c = c0 / np.linalg.norm(c0)
    v = tcc(c)
    s = float(c @ v)
    f = s * s
    for it in range(1, max_iter + 1):
        accepted = False
        nv = np.linalg.norm(v)
        if nv > 0.0:
            c_fp = v / nv if s >= 0.0 else -v / nv
            v_fp = tcc(c_fp)
            s_fp = float(c_fp @ v_fp)
            if s_fp * s_fp >= f:
                c_new, v_new, f_new = c_fp, v_fp, s_fp * s_fp
                accepted = True
        if not accepted:
            grad = 6.0 * s * v
            g = grad - float(grad @ c) * c
            gnorm2 = float(g @ g)
            if gnorm2 <= 1e-30:
                return c, f, it, True
            step = 1.0 / max(1.0, math.sqrt(gnorm2))
            for _ in range(40):
                c_try = c + step * g
                c_try /= np.linalg.norm(c_try)
                v_try = tcc(c_try)
                s_try = float(c_try @ v_try)
                if s_try * s_try >= f + 1e-4 * step * gnorm2:
                    c_new, v_new, f_new = c_try, v_try, s_try * s_try
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                return c, f, it, True
        delta = f_new - f
        c, v, f = c_new, v_new, f_new
        s = float(c @ v)
        if delta <= tol * max(1.0, f):
            return c, f, it, True
    return c, f, max_iter, False


def estimate_max_direction(
    X: np.ndarray,
    restarts: int = 8,
    max_iter: int = 500,
    tol: float = 1e-10,
    rng: RngStream | None = None,
    refine: bool = True,
) -> MaxSkewResult:
    """Empirical maximal-skewness direction of a data matrix.

    Standardizes with the sample mean and the symmetric inverse square root of
    the (biased) sample covariance, maximizes the squared third sample moment
    of unit projections, and maps the winner back to the original coordinates.
    With ``refine=False`` the dominant singular vector of the third-moment
    matrix is returned without sphere ascent.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatchError("X must be a 2-d data matrix")
    n, p = X.shape
    if n < p + 2:
        raise DimensionMismatchError(f"need n >= p + 2, got n={n}, p={p}")
    Xc = X - X.mean(axis=0)
    cov = (Xc.T @ Xc) / n
    try:
        W = inv_sqrt_spd(cov)
    except NotSPDError as exc:
        raise RankDeficientError("sample covariance is singular") from exc
    U = Xc @ W

    if p == 1:
        g1 = gamma1_univariate(X[:, 0])
        m3 = float(np.mean(U ** 3))
        sign = 1.0 if m3 >= 0.0 else -1.0
        return MaxSkewResult(
            direction=np.array([sign]), gamma1=g1, iterations=0, converged=True
        )

    M3 = third_moment_matrix(U)
    T = M3.tensor
    svd_init, _, _ = np.linalg.svd(M3.matrix, full_matrices=False)
    c0 = svd_init[:, 0]

    if not refine:
        s0 = float(np.einsum("ijk,i,j,k->", T, c0, c0, c0))
        if s0 < 0.0:
            c0, s0 = -c0, -s0
        d = W @ c0
        d /= np.linalg.norm(d)
        return MaxSkewResult(direction=d, gamma1=s0 * s0, iterations=0, converged=True)

    gen = (rng or RngStream(0)).generator()
    starts = [c0]
    for _ in range(restarts):
        v = gen.standard_normal(p)
        starts.append(v / np.linalg.norm(v))

    best = None
    for c_start in starts:
        c, f, its, conv = _ascend(T, c_start, max_iter, tol)
        if best is None or f > best[1]:
            best = (c, f, its, conv)
    c, f, its, conv = best
    if float(np.einsum("ijk,i,j,k->", T, c, c, c)) < 0.0:
        c = -c
    d = W @ c
    d /= np.linalg.norm(d)
    return MaxSkewResult(direction=d, gamma1=f, iterations=its, converged=conv)
