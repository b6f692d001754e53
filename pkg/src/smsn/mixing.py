"""Mixing distributions for scale mixtures of skew-normal vectors.

The mixing variable ``S`` is a non-negative scalar, independent of the
skew-normal part, that injects kurtosis into the model.  Four laws are
supported:

* :class:`Degenerate` -- ``S = 1``, recovering the plain skew-normal.
* :class:`InvSqrtChiSq` -- ``S = V**-0.5`` with ``V ~ chi2_nu / nu``
  (skew-t generator); the k-th moment exists iff ``nu > k``.
* :class:`SqrtGamma` -- ``S = sqrt(W)`` with ``W ~ Gamma((p+1)/2, scale=8)``
  (skew double exponential generator); all moments exist.
* :class:`InvPowUniform` -- ``S = U**(-1/q)`` with ``U ~ Uniform(0,1)``
  (skew-slash generator); the m-th moment exists iff ``q > m``.

All moments with gamma-function ratios are evaluated in log space so that
large parameters (``nu``, ``p`` in the hundreds) do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.stats

from .errors import InvalidParameterError, MomentUndefinedError
from .numerics import RngStream, log_gamma

__all__ = [
    "MixingDistribution",
    "Degenerate",
    "InvSqrtChiSq",
    "SqrtGamma",
    "InvPowUniform",
    "SkewCoefficients",
    "moment",
    "coefficients",
    "check_moment_condition",
    "sample_mixing",
]

# slack absorbing float noise at the nu=4 equality boundary of the
# moment condition
_CONDITION_TOL = 1e-12


@dataclass(frozen=True)
class MixingDistribution:
    """Base class; use one of the concrete subclasses."""

    def moment(self, k: int) -> float:
        raise NotImplementedError

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def quantile_transform(self, u: np.ndarray) -> np.ndarray:
        """Map ``u in (0,1)`` to values of S so that an integral of
        ``g(quantile_transform(u))`` over (0,1) equals ``E[g(S)]``."""
        raise NotImplementedError


@dataclass(frozen=True)
class Degenerate(MixingDistribution):
    """Point mass at S = 1."""

    def moment(self, k: int) -> float:
        _check_order(k)
        return 1.0

    def sample(self, n, rng):
        return np.ones(n)

    def quantile_transform(self, u):
        return np.ones_like(u)


@dataclass(frozen=True)
class InvSqrtChiSq(MixingDistribution):
    """S = V**-0.5 with V ~ chi2_nu / nu (skew-t)."""

    nu: float

    def __post_init__(self):
        if not self.nu > 0.0:
            raise InvalidParameterError(f"need nu > 0, got {self.nu}")

    def moment(self, k: int) -> float:
        _check_order(k)
        if k >= self.nu:
            raise MomentUndefinedError(
                f"E(S^{k}) undefined for inverse-sqrt-chi-square with nu={self.nu}"
            )
        nu = self.nu
        return math.exp(
            0.5 * k * math.log(0.5 * nu)
            + log_gamma(0.5 * (nu - k))
            - log_gamma(0.5 * nu)
        )

    def sample(self, n, rng):
        v = rng.chisquare(self.nu, size=n) / self.nu
        return v ** -0.5

    def quantile_transform(self, u):
        v = scipy.stats.chi2.ppf(u, self.nu) / self.nu
        return v ** -0.5


@dataclass(frozen=True)
class SqrtGamma(MixingDistribution):
    """S = sqrt(W) with W ~ Gamma((p+1)/2, scale=8) (skew double exponential).

    The Gamma scale convention is fixed by requiring E(S^k) to agree with the
    closed form ``2**(k/2) G(p/2) G(p+k) / (G(p) G((p+k)/2))``; the two
    expressions coincide through the Legendre duplication formula, and the
    test suite enshrines their agreement.
    """

    p: int

    _GAMMA_SCALE = 8.0

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise InvalidParameterError(f"need integer p >= 1, got {self.p}")

    def moment(self, k: int) -> float:
        _check_order(k)
        p = float(self.p)
        return math.exp(
            0.5 * k * math.log(2.0)
            + log_gamma(0.5 * p)
            + log_gamma(p + k)
            - log_gamma(p)
            - log_gamma(0.5 * (p + k))
        )

    def sample(self, n, rng):
        w = rng.gamma(0.5 * (self.p + 1), scale=self._GAMMA_SCALE, size=n)
        return np.sqrt(w)

    def quantile_transform(self, u):
        w = scipy.stats.gamma.ppf(u, 0.5 * (self.p + 1), scale=self._GAMMA_SCALE)
        return np.sqrt(w)


@dataclass(frozen=True)
class InvPowUniform(MixingDistribution):
    """S = U**(-1/q) with U ~ Uniform(0,1) (skew-slash)."""

    q: float

    def __post_init__(self):
        if not self.q > 0.0:
            raise InvalidParameterError(f"need q > 0, got {self.q}")

    def moment(self, k: int) -> float:
        _check_order(k)
        if k >= self.q:
            raise MomentUndefinedError(
                f"E(S^{k}) undefined for inverse-power-uniform with q={self.q}"
            )
        return self.q / (self.q - k)

    def sample(self, n, rng):
        u = rng.uniform(size=n)
        return u ** (-1.0 / self.q)

    def quantile_transform(self, u):
        return u ** (-1.0 / self.q)


@dataclass(frozen=True)
class SkewCoefficients:
    """Moment functionals of S driving the projection-skewness objective.

    ``a = (4/pi) E(S)^3 - E(S^3)``, ``b = E(S) E(S^2) - E(S^3)`` and
    ``c = (2/pi) E(S)^2 / E(S^2)``.  ``b <= 0`` always (Lyapunov moment
    inequality) and ``c`` lies in (0, 4/pi].
    """

    a: float
    b: float
    c: float


def _check_order(k: int) -> None:
    if int(k) != k or k < 1:
        raise InvalidParameterError(f"moment order must be a positive integer, got {k}")


def moment(m: MixingDistribution, k: int) -> float:
    """Raw moment E(S^k) of the mixing variable."""
    return m.moment(k)


def coefficients(m: MixingDistribution) -> SkewCoefficients:
    """Skewness coefficients (a, b, c) from the first three raw moments."""
    m1 = m.moment(1)
    m2 = m.moment(2)
    m3 = m.moment(3)
    a = (4.0 / math.pi) * m1 ** 3 - m3
    b = m1 * m2 - m3
    c = (2.0 / math.pi) * m1 * m1 / m2
    return SkewCoefficients(a=a, b=b, c=c)


def check_moment_condition(m: MixingDistribution):
    """Check the gating inequality ``(4/pi) E(S)^2 >= E(S^2)``.

    Returns ``(holds, lhs, rhs)``; equality within 1e-12 counts as holding,
    which matters at the nu = 4 analytic boundary of the skew-t family.
    """
    m1 = m.moment(1)
    m2 = m.moment(2)
    lhs = (4.0 / math.pi) * m1 * m1
    rhs = m2
    return lhs - rhs >= -_CONDITION_TOL, lhs, rhs


def sample_mixing(m: MixingDistribution, n: int, rng: RngStream) -> np.ndarray:
    """Draw n independent values of S (all strictly positive)."""
    if n < 1:
        raise InvalidParameterError(f"need n >= 1, got {n}")
    return m.sample(n, rng.generator())
