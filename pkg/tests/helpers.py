"""Shared test utilities: random parameter sets and density normalization."""

from __future__ import annotations

import numpy as np

import smsn.mixing as mx
from smsn.model import (
    SmsnParams,
    _smsn_density_values,
    _sn_density_values,
    _st_density_values,
)


def random_correlation(p: int, gen: np.random.Generator) -> np.ndarray:
    """Random full-rank correlation matrix."""
    A = gen.standard_normal((p, p + 3))
    C = A @ A.T
    d = np.sqrt(np.diag(C))
    return C / np.outer(d, d)


def random_params(
    p: int,
    mixing: mx.MixingDistribution,
    gen: np.random.Generator,
    alpha_norm_range=(1.0, 4.0),
) -> SmsnParams:
    """Random valid SMSN parameter set with moderate asymmetry."""
    OmegaBar = random_correlation(p, gen)
    w = gen.uniform(0.5, 3.0, size=p)
    Omega = OmegaBar * np.outer(w, w)
    alpha = gen.standard_normal(p)
    alpha *= gen.uniform(*alpha_norm_range) / np.linalg.norm(alpha)
    xi = gen.uniform(-2.0, 2.0, size=p)
    return SmsnParams(xi=xi, Omega=Omega, alpha=alpha, mixing=mixing)


def mixing_for(tag: str, p: int, nu: float = 4.0, q: float = 5.0):
    return {
        "sn": mx.Degenerate(),
        "st": mx.InvSqrtChiSq(nu=nu),
        "sde": mx.SqrtGamma(p=p),
        "ssl": mx.InvPowUniform(q=q),
    }[tag]


def _density_batch(params: SmsnParams, X: np.ndarray, tol: float) -> np.ndarray:
    if isinstance(params.mixing, mx.Degenerate):
        return _sn_density_values(params, X)
    if isinstance(params.mixing, mx.InvSqrtChiSq):
        return _st_density_values(params, X)
    return _smsn_density_values(params, X, tol)


def _axis_nodes(center: float, scale: float, reach: float, order: int):
    marks = np.array([0.0, 0.35, 1.0, 2.5, 6.0, 12.0, reach])
    edges = np.concatenate([center - scale * marks[::-1], center + scale * marks[1:]])
    gl_x, gl_w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes.append(mid + half * gl_x)
        weights.append(half * gl_w)
    return np.concatenate(nodes), np.concatenate(weights)


def integrate_density(
    params: SmsnParams, reach: float = 40.0, order: int = 24, tol: float = 1e-9
) -> float:
    """Numerically integrate the density over a generous box around xi.

    Composite Gauss-Legendre per axis with panels refined near the location
    (where the double exponential kernel has a cusp).  Supports p = 1 and 2.
    """
    p = params.dim
    scales = np.sqrt(np.diag(params.Omega) * max(params.mixing.moment(2), 1.0))
    if p == 1:
        x, w = _axis_nodes(params.xi[0], scales[0], reach, order)
        vals = _density_batch(params, x[:, None], tol)
        return float(vals @ w)
    if p != 2:
        raise ValueError("integrate_density supports p = 1 and 2 only")
    x1, w1 = _axis_nodes(params.xi[0], scales[0], reach, order)
    x2, w2 = _axis_nodes(params.xi[1], scales[1], reach, order)
    total = 0.0
    for start in range(0, x1.size, 64):
        sl = slice(start, min(start + 64, x1.size))
        G1, G2 = np.meshgrid(x1[sl], x2, indexing="ij")
        X = np.column_stack([G1.ravel(), G2.ravel()])
        vals = _density_batch(params, X, tol).reshape(G1.shape)
        total += float(w1[sl] @ vals @ w2)
    return total
