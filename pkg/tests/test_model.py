import math

import numpy as np
import pytest
import scipy.stats

import smsn.mixing as mx
from smsn.errors import (
    DegenerateDirectionError,
    DimensionMismatchError,
    InvalidParameterError,
    NotSPDError,
)
from smsn.model import (
    SmsnParams,
    density_smsn,
    density_sn,
    density_st,
    derive,
    params_from_dict,
    params_to_dict,
    projection_params,
    sample,
)
from smsn.numerics import RngStream, cholesky, spd_solve, toeplitz_corr

from helpers import integrate_density, mixing_for, random_params

FAMILIES = ["sn", "st", "sde", "ssl"]


def sn_params_1d(alpha=3.0, omega=1.0, xi=0.0):
    return SmsnParams(
        xi=[xi], Omega=[[omega]], alpha=[alpha], mixing=mx.Degenerate()
    )


class TestParams:
    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            SmsnParams(xi=[0.0, 0.0], Omega=[[1.0]], alpha=[1.0], mixing=mx.Degenerate())

    def test_not_spd(self):
        with pytest.raises(NotSPDError):
            SmsnParams(
                xi=[0.0, 0.0],
                Omega=[[1.0, 2.0], [2.0, 1.0]],
                alpha=[1.0, 1.0],
                mixing=mx.Degenerate(),
            )

    def test_sde_dimension_keyed_to_model(self):
        with pytest.raises(DimensionMismatchError):
            SmsnParams(
                xi=[0.0, 0.0],
                Omega=np.eye(2),
                alpha=[1.0, 0.0],
                mixing=mx.SqrtGamma(p=3),
            )

    def test_json_round_trip(self):
        for tag in FAMILIES:
            p = random_params(3, mixing_for(tag, 3), np.random.default_rng(1))
            q = params_from_dict(params_to_dict(p))
            np.testing.assert_array_equal(p.xi, q.xi)
            np.testing.assert_array_equal(p.Omega, q.Omega)
            np.testing.assert_array_equal(p.alpha, q.alpha)
            assert p.mixing == q.mixing

    def test_malformed_document(self):
        with pytest.raises(InvalidParameterError):
            params_from_dict({"xi": [0.0]})
        with pytest.raises(InvalidParameterError):
            params_from_dict(
                {"xi": [0.0], "Omega": [[1.0]], "alpha": [1.0], "mixing": {"type": "st"}}
            )


class TestDerive:
    def test_symmetric_case(self):
        p = SmsnParams(
            xi=[1.0, 2.0],
            Omega=toeplitz_corr(0.5, 2),
            alpha=[0.0, 0.0],
            mixing=mx.InvSqrtChiSq(nu=6.0),
        )
        d = derive(p)
        np.testing.assert_array_equal(d.delta, np.zeros(2))
        np.testing.assert_array_equal(d.gamma_vec, np.zeros(2))
        np.testing.assert_array_equal(d.mu, p.xi)
        np.testing.assert_allclose(d.Sigma, d.c2 * p.Omega)

    def test_scalar_sn(self):
        d = derive(sn_params_1d(alpha=3.0))
        assert d.delta[0] == pytest.approx(3.0 / math.sqrt(10.0), rel=1e-14)
        assert d.Sigma[0, 0] == pytest.approx(1.0 - (2.0 / math.pi) * 0.9, rel=1e-14)

    def test_scalar_sn_variance_monte_carlo(self):
        p = sn_params_1d(alpha=3.0)
        d = derive(p)
        x = sample(p, 1_000_000, RngStream(11))[:, 0]
        se = x.var() * math.sqrt(2.0 / x.size)  # approximate SE of the variance
        assert abs(x.var() - d.Sigma[0, 0]) < 4 * se

    def test_st_sigma_spd(self):
        w = np.array([2.0, 3.0])
        Omega = toeplitz_corr(0.4, 2) * np.outer(w, w)
        p = SmsnParams(
            xi=[0.0, 0.0], Omega=Omega, alpha=[3.0, 0.0], mixing=mx.InvSqrtChiSq(nu=4.0)
        )
        cholesky(derive(p).Sigma)  # must not raise

    @pytest.mark.parametrize("tag", FAMILIES)
    def test_algebraic_identities(self, tag):
        gen = np.random.default_rng(42)
        for _ in range(10):
            p = random_params(4, mixing_for(tag, 4), gen)
            d = derive(p)
            eta, alpha = d.eta, p.alpha
            lhs = np.diag(d.omega) * d.delta
            rhs = (p.Omega @ eta) / math.sqrt(1.0 + eta @ p.Omega @ eta)
            np.testing.assert_allclose(lhs, rhs, atol=1e-12 * np.abs(rhs).max() + 1e-14)
            assert eta @ p.Omega @ eta == pytest.approx(
                alpha @ d.OmegaBar @ alpha, rel=1e-12
            )
            assert np.allclose(np.diag(d.OmegaBar), 1.0)


class TestLemma1:
    @pytest.mark.parametrize("tag", FAMILIES)
    def test_sigma_inv_gamma_parallel_to_eta(self, tag):
        gen = np.random.default_rng(7)
        for _ in range(25):
            dim = int(gen.integers(1, 8))
            p = random_params(dim, mixing_for(tag, dim, nu=6.0), gen)
            d = derive(p)
            v = spd_solve(d.Sigma, d.gamma_vec)
            cos = abs(v @ d.eta) / (np.linalg.norm(v) * np.linalg.norm(d.eta))
            assert cos >= 1.0 - 1e-10

    def test_closed_form_sigma_inv_gamma(self):
        gen = np.random.default_rng(8)
        for tag in FAMILIES:
            p = random_params(5, mixing_for(tag, 5, nu=5.0, q=6.0), gen)
            d = derive(p)
            direct = spd_solve(d.Sigma, d.gamma_vec)
            og = np.linalg.solve(p.Omega, d.gamma_vec)
            closed = og / (d.c2 - (2.0 / math.pi) * d.c1 ** 2 * (d.gamma_vec @ og))
            np.testing.assert_allclose(direct, closed, rtol=1e-9)

    def test_sherman_morrison_inverse(self):
        gen = np.random.default_rng(9)
        p = random_params(6, mx.InvSqrtChiSq(nu=7.0), gen)
        d = derive(p)
        u = -(2.0 / math.pi) * d.c1 ** 2 * d.gamma_vec
        A_inv = np.linalg.inv(d.c2 * p.Omega)
        sm = A_inv - (A_inv @ np.outer(u, d.gamma_vec) @ A_inv) / (
            1.0 + d.gamma_vec @ A_inv @ u
        )
        np.testing.assert_allclose(sm, np.linalg.inv(d.Sigma), rtol=1e-9)


class TestDensitySN:
    def test_mode_alpha_zero(self):
        p = SmsnParams(xi=[0.0, 0.0], Omega=np.eye(2), alpha=[0.0, 0.0], mixing=mx.Degenerate())
        assert density_sn([0.0, 0.0], p) == pytest.approx((2 * math.pi) ** -1, rel=1e-12)

    def test_at_location_phi_cancellation(self):
        p = SmsnParams(
            xi=[1.0, -1.0], Omega=toeplitz_corr(0.3, 2), alpha=[4.0, -2.0], mixing=mx.Degenerate()
        )
        expected = scipy.stats.multivariate_normal(mean=p.xi, cov=p.Omega).pdf(p.xi)
        assert density_sn(p.xi, p) == pytest.approx(expected, rel=1e-12)

    def test_scalar_formula(self):
        p = sn_params_1d(alpha=1.0)
        expected = 2.0 * scipy.stats.norm.pdf(1.0) * scipy.stats.norm.cdf(1.0)
        assert density_sn([1.0], p) == pytest.approx(expected, rel=1e-12)

    def test_requires_degenerate_mixing(self):
        p = SmsnParams(xi=[0.0], Omega=[[1.0]], alpha=[1.0], mixing=mx.InvSqrtChiSq(nu=5.0))
        with pytest.raises(InvalidParameterError):
            density_sn([0.0], p)


class TestDensityST:
    def test_at_location(self):
        nu = 4.0
        p = SmsnParams(
            xi=[0.5, -0.5], Omega=toeplitz_corr(0.2, 2), alpha=[3.0, 3.0],
            mixing=mx.InvSqrtChiSq(nu=nu),
        )
        # at x = xi the skewing factor is 1/2, leaving the symmetric t density
        detL = np.linalg.det(p.Omega)
        expected = math.exp(
            math.lgamma(0.5 * (nu + 2)) - math.lgamma(0.5 * nu)
        ) / (nu * math.pi * math.sqrt(detL))
        assert density_st(p.xi, p) == pytest.approx(expected, rel=1e-12)

    def test_large_nu_matches_sn(self):
        st = SmsnParams(xi=[0.3], Omega=[[1.5]], alpha=[2.0], mixing=mx.InvSqrtChiSq(nu=1e6))
        sn = sn_params_1d(alpha=2.0, omega=1.5, xi=0.3)
        for x in (-2.0, -0.5, 0.3, 1.0, 3.0):
            assert density_st([x], st) == pytest.approx(density_sn([x], sn), abs=1e-4)

    def test_normalizes_p2(self):
        p = SmsnParams(
            xi=[0.0, 0.0], Omega=np.eye(2), alpha=[3.0, 3.0], mixing=mx.InvSqrtChiSq(nu=4.0)
        )
        assert integrate_density(p) == pytest.approx(1.0, abs=1e-4)


class TestDensitySMSN:
    def test_degenerate_delegates_to_sn(self):
        p = sn_params_1d(alpha=2.0)
        for x in (-1.0, 0.0, 2.0):
            assert density_smsn([x], p) == density_sn([x], p)

    def test_sde_closed_form_p1(self):
        # symmetric double exponential kernel at p=1: (1/4) exp(-|x|/2)
        p = SmsnParams(xi=[0.0], Omega=[[1.0]], alpha=[0.0], mixing=mx.SqrtGamma(p=1))
        assert density_smsn([2.0], p, tol=1e-10) == pytest.approx(
            0.25 * math.exp(-1.0), rel=1e-8
        )

    def test_matches_st_closed_form(self):
        p = SmsnParams(
            xi=[0.2, -0.1], Omega=toeplitz_corr(0.4, 2), alpha=[2.0, -1.0],
            mixing=mx.InvSqrtChiSq(nu=5.0),
        )
        tol = 1e-8
        for x in ([0.0, 0.0], [1.5, -2.0], [-3.0, 1.0]):
            assert density_smsn(x, p, tol=tol) == pytest.approx(
                density_st(x, p), abs=10 * tol
            )

    def test_ssl_normalizes_p2(self):
        p = SmsnParams(
            xi=[0.0, 0.0], Omega=np.eye(2), alpha=[3.0, -3.0], mixing=mx.InvPowUniform(q=5.0)
        )
        assert integrate_density(p) == pytest.approx(1.0, abs=1e-4)


class TestSample:
    def test_plain_normal(self):
        p = SmsnParams(
            xi=[1.0, -2.0], Omega=toeplitz_corr(0.5, 2), alpha=[0.0, 0.0],
            mixing=mx.Degenerate(),
        )
        X = sample(p, 1_000_000, RngStream(21))
        se_mean = X.std(axis=0) / math.sqrt(X.shape[0])
        assert np.all(np.abs(X.mean(axis=0) - p.xi) < 4 * se_mean)
        Xc = X - X.mean(axis=0)
        for i in range(2):
            for j in range(2):
                prod = Xc[:, i] * Xc[:, j]
                se = prod.std() / math.sqrt(X.shape[0])
                assert abs(prod.mean() - p.Omega[i, j]) < 4 * se

    def test_sn_mean(self):
        p = sn_params_1d(alpha=3.0)
        d = derive(p)
        x = sample(p, 1_000_000, RngStream(22))[:, 0]
        se = x.std() / math.sqrt(x.size)
        assert abs(x.mean() - d.mu[0]) < 4 * se

    def test_st_covariance(self):
        w = np.array([2.0, 1.0])
        p = SmsnParams(
            xi=[0.0, 0.0],
            Omega=toeplitz_corr(0.3, 2) * np.outer(w, w),
            alpha=[2.0, 1.0],
            mixing=mx.InvSqrtChiSq(nu=4.0),
        )
        d = derive(p)
        X = sample(p, 1_000_000, RngStream(23))
        cov = np.cov(X.T, bias=True)
        # 5% relative to the covariance scale: the entrywise relative error is
        # meaningless for near-zero entries under infinite fourth moments
        assert np.abs(cov - d.Sigma).max() < 0.05 * np.abs(d.Sigma).max()

    @pytest.mark.parametrize("tag", ["sn", "st", "ssl"])
    def test_moment_match_all_families(self, tag):
        # light-tailed parameter choices so that 4-SE bands are meaningful
        gen = np.random.default_rng(31)
        p = random_params(3, mixing_for(tag, 3, nu=20.0, q=10.0), gen)
        d = derive(p)
        X = sample(p, 1_000_000, RngStream(24))
        se_mean = X.std(axis=0) / math.sqrt(X.shape[0])
        assert np.all(np.abs(X.mean(axis=0) - d.mu) < 4 * se_mean)
        Xc = X - X.mean(axis=0)
        for i in range(3):
            for j in range(i, 3):
                prod = Xc[:, i] * Xc[:, j]
                se = prod.std() / math.sqrt(X.shape[0])
                assert abs(prod.mean() - d.Sigma[i, j]) < 4 * se

    def test_ssl_quantile_route_agrees_in_distribution(self):
        # direct S = U^(-1/q) sampling vs the inverse-CDF transform used by
        # the density quadrature, compared by two-sample KS on a projection
        q = 5.0
        p = SmsnParams(
            xi=[0.0, 0.0], Omega=toeplitz_corr(0.4, 2), alpha=[3.0, -1.0],
            mixing=mx.InvPowUniform(q=q),
        )
        n = 100_000
        X1 = sample(p, n, RngStream(25))
        d = derive(p)
        gen = RngStream(26).generator()
        L = cholesky(d.OmegaBar)
        U = gen.standard_normal((n, 2)) @ L.T
        aOa = float(p.alpha @ d.OmegaBar @ p.alpha)
        u0 = (U @ p.alpha) / math.sqrt(1 + aOa) + gen.standard_normal(n) / math.sqrt(1 + aOa)
        Z = np.where(u0[:, None] > 0, U, -U)
        s = p.mixing.quantile_transform(gen.uniform(size=n))
        X2 = (s[:, None] * Z) * np.sqrt(np.diag(p.Omega))
        proj = np.array([0.8, 0.6])
        res = scipy.stats.ks_2samp(X1 @ proj, X2 @ proj)
        assert res.pvalue > 0.001

    def test_bad_count(self):
        with pytest.raises(InvalidParameterError):
            sample(sn_params_1d(), 0, RngStream(0))


class TestProjectionParams:
    def test_orthogonal_direction(self):
        p = SmsnParams(
            xi=[0.0, 0.0], Omega=np.eye(2), alpha=[2.0, 0.0], mixing=mx.Degenerate()
        )
        d = derive(p)
        perp = np.array([-d.gamma_vec[1], d.gamma_vec[0]])
        pp = projection_params(p, perp)
        assert pp.alpha_d == 0.0
        assert pp.delta0sq == 0.0
        assert pp.t == 0.0

    def test_scalar_example(self):
        pp = projection_params(sn_params_1d(alpha=3.0), np.array([1.0]))
        assert pp.omega_d == pytest.approx(1.0)
        assert pp.t == pytest.approx(0.9, rel=1e-14)
        assert pp.delta0sq == pytest.approx(0.9, rel=1e-14)

    def test_delta0sq_scale_invariant(self):
        gen = np.random.default_rng(51)
        p = random_params(3, mx.InvSqrtChiSq(nu=8.0), gen)
        d = gen.standard_normal(3)
        base = projection_params(p, d).delta0sq
        for s in (0.1, -2.0, 37.0):
            assert projection_params(p, s * d).delta0sq == pytest.approx(base, rel=1e-12)

    def test_degenerate_direction(self):
        # a half-normal marginal: p=1 with alpha -> infinity pushes
        # (d'gamma)^2 -> omega_d
        p = sn_params_1d(alpha=1e9)
        with pytest.raises(DegenerateDirectionError):
            projection_params(p, np.array([1.0]))

    def test_zero_direction(self):
        with pytest.raises(InvalidParameterError):
            projection_params(sn_params_1d(), np.array([0.0]))
