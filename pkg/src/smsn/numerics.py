"""Dense linear algebra, special functions, quadrature and seeded RNG streams.

Matrices are plain ``numpy.ndarray`` objects; every routine here is a pure
function, so they can be called concurrently.  :class:`RngStream` instances are
single-owner: share the stream description freely, but give each worker its own
``generator()``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.special

from .errors import InvalidParameterError, NotSPDError, QuadratureError

__all__ = [
    "toeplitz_corr",
    "cholesky",
    "spd_solve",
    "inv_sqrt_spd",
    "log_gamma",
    "t_cdf",
    "quadrature",
    "RngStream",
]

_SYM_TOL = 1e-10


def _check_symmetric(A: np.ndarray, name: str = "matrix") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSPDError(f"{name} must be square, got shape {A.shape}")
    scale = max(1.0, np.abs(A).max())
    if np.abs(A - A.T).max() > _SYM_TOL * scale:
        raise NotSPDError(f"{name} is not symmetric")
    return A


def toeplitz_corr(rho: float, p: int) -> np.ndarray:
    """Correlation matrix with entries ``rho**|i - j|``.

    Positive definite for every ``|rho| < 1``; the ``rho = 0`` case is the
    identity.
    """
    if not np.isfinite(rho) or abs(rho) >= 1.0:
        raise InvalidParameterError(f"need |rho| < 1, got {rho}")
    if p < 1:
        raise InvalidParameterError(f"need p >= 1, got {p}")
    col = rho ** np.arange(p, dtype=float)
    return scipy.linalg.toeplitz(col)


def cholesky(A: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor of a symmetric positive definite matrix."""
    A = _check_symmetric(A)
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotSPDError("matrix is not positive definite") from exc


def spd_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive definite ``A``."""
    A = _check_symmetric(A)
    b = np.asarray(b, dtype=float)
    try:
        c, low = scipy.linalg.cho_factor(A, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotSPDError("matrix is not positive definite") from exc
    return scipy.linalg.cho_solve((c, low), b)


def inv_sqrt_spd(A: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root ``B`` with ``B A B = I``.

    Computed through the eigendecomposition of ``A``; intended for the modest
    dimensions this package works with.
    """
    A = _check_symmetric(A)
    w, V = np.linalg.eigh(A)
    if w[0] <= 0.0:
        raise NotSPDError(f"matrix is not positive definite (min eigenvalue {w[0]:g})")
    B = (V / np.sqrt(w)) @ V.T
    return 0.5 * (B + B.T)


def log_gamma(x):
    """Natural log of the gamma function for positive arguments."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise InvalidParameterError("log_gamma requires x > 0")
    out = scipy.special.gammaln(x)
    return float(out) if out.ndim == 0 else out


def t_cdf(x, dof: float):
    """CDF of the Student t distribution via the regularized incomplete beta."""
    if dof <= 0.0:
        raise InvalidParameterError(f"need dof > 0, got {dof}")
    x = np.asarray(x, dtype=float)
    tail = 0.5 * scipy.special.betainc(0.5 * dof, 0.5, dof / (dof + x * x))
    out = np.where(x <= 0.0, tail, 1.0 - tail)
    return float(out) if out.ndim == 0 else out


def quadrature(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    points=None,
) -> float:
    """Adaptive quadrature of ``f`` over ``(a, b)`` to absolute tolerance ``tol``."""
    if tol <= 0.0:
        raise InvalidParameterError("tol must be positive")
    val, err = scipy.integrate.quad(
        f, a, b, epsabs=tol, epsrel=tol, limit=200, points=points
    )
    if err > 10.0 * max(tol, tol * abs(val)):
        raise QuadratureError(
            f"quadrature did not reach tol={tol:g} (error estimate {err:g})",
            achieved_error=err,
        )
    return val


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by ``(seed, stream path)``.

    Two streams with the same key produce bit-identical draws in any run and
    under any thread schedule.  ``substream`` derives statistically independent
    children, which is how simulation replications get their own randomness.
    """

    seed: int
    key: tuple = field(default=())

    def substream(self, *path: int) -> "RngStream":
        return RngStream(self.seed, self.key + tuple(int(i) for i in path))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))
