"""Gibbs samplers: conditionals, invariances, persistence, and guards."""

import time

import numpy as np
import pytest

from conftest import model_spec
from sfofr.basis import make_bspline
from sfofr.curves import CoefficientSet
from sfofr.errors import ConfigError, DimensionError, MissingFileError
from sfofr.projection import build_mesh, moran_basis_areal, projection_point
from sfofr.sampler import (
    McmcSpec,
    ModelSpec,
    PosteriorDraws,
    PriorSpec,
    draw_delta_block,
    draw_nu,
    draw_psi_block,
    draw_sigma2_projected,
    draw_tau2,
    draw_w_discrete,
    fit_fofr,
    fit_psfofr,
    fit_sfofr_continuous,
    fit_sfofr_discrete,
    load_draws,
    save_draws,
)
from sfofr.spatial import icar_precision, matern_cov, morans_i

GRID = np.linspace(0.0, 1.0, 50)


def bases(k=6, g=5):
    phi = make_bspline((0.0, 1.0), k, grid=GRID, order=min(4, k))
    xi = make_bspline((0.0, 1.0), g, grid=GRID, order=min(4, g))
    return phi, xi


def coefficients(n=60, k=6, g=5, seed=0, noise=0.3):
    rng = np.random.default_rng(seed)
    phi, xi = bases(k, g)
    x = rng.normal(size=(n, g))
    y = x @ rng.normal(size=(g, k)) + noise * rng.normal(size=(n, k))
    return CoefficientSet(y_coef=y, x_coef=x, phi=phi, xi=xi), rng


class TestSpecValidation:
    def test_burnin_bounds(self):
        with pytest.raises(ConfigError, match="burnin"):
            McmcSpec(iters=100, burnin=100, thin=1, seed=0)

    def test_thin_divisibility(self):
        with pytest.raises(ConfigError, match="divisible"):
            McmcSpec(iters=100, burnin=10, thin=7, seed=0)

    def test_positive_priors(self):
        with pytest.raises(ConfigError, match="positive"):
            PriorSpec(psi_var=-1.0)

    def test_range_prior_fixed(self):
        with pytest.raises(ConfigError, match="Unif"):
            PriorSpec(rho_unif=(0.0, 2.0))

    def test_unknown_model(self):
        with pytest.raises(ConfigError, match="unknown model"):
            ModelSpec(model="gp", domain_kind="continuous")

    def test_draws_validation(self):
        spec = model_spec("fofr", 10, 0, 1)
        with pytest.raises(ValueError, match="positive"):
            PosteriorDraws(
                model="fofr",
                domain_kind="continuous",
                psi=np.zeros((10, 2, 2)),
                random_effect=None,
                tau2=np.zeros(10),
                sigma2=None,
                nu=None,
                rho=None,
                acceptance_rate_rho=None,
                spec=spec,
            )


class TestConditionalSanity:
    """Cheap per-conditional checks; the full three-sigma suite over 1e5
    draws runs in the acceptance tests."""

    def test_psi_block_mean(self, rng):
        n, g, k = 40, 3, 2
        x = rng.normal(size=(n, g))
        resid = rng.normal(size=(n, k))
        tau2 = 0.4
        prec = x.T @ x / tau2 + np.eye(g) / 10.0
        want = np.linalg.solve(prec, x.T @ resid / tau2)
        draws = np.stack([draw_psi_block(rng, x, resid, tau2) for _ in range(4000)])
        sd = np.sqrt(np.diag(np.linalg.inv(prec)))[:, None]
        z = (draws.mean(axis=0) - want) / (sd / np.sqrt(4000))
        assert np.abs(z).max() < 4.0

    def test_tau2_moments(self, rng):
        resid = rng.normal(size=(30, 3))
        a = resid.size / 2.0 + 2.0
        b = float(np.sum(resid**2)) / 2.0 + 0.1
        draws = np.array([draw_tau2(rng, resid) for _ in range(20000)])
        assert abs(draws.mean() - b / (a - 1)) < 4 * draws.std() / np.sqrt(draws.size)

    def test_nu_positive_every_draw(self, rng):
        w = rng.normal(size=(6, 2))
        Q = icar_precision(
            np.array(
                [
                    [0, 1, 0, 0, 0, 0],
                    [1, 0, 1, 0, 0, 0],
                    [0, 1, 0, 1, 0, 0],
                    [0, 0, 1, 0, 1, 0],
                    [0, 0, 0, 1, 0, 1],
                    [0, 0, 0, 0, 1, 0],
                ],
                float,
            )
        )
        draws = [draw_nu(rng, w, Q) for _ in range(200)]
        assert min(draws) > 0

    def test_sigma2_projected_literal_shape(self, rng):
        delta = rng.normal(size=(4, 3))
        Qd = np.eye(4) * 2.0
        rate = float(np.sum(delta * (Qd @ delta))) / 2.0 + 4 / 2000.0
        draws = np.array(
            [draw_sigma2_projected(rng, delta, Qd, literal=True) for _ in range(20000)]
        )
        # Gamma(1, rate): mean 1/rate
        assert abs(draws.mean() - 1 / rate) < 4 * draws.std() / np.sqrt(draws.size)


class TestDegenerateProjection:
    def test_fofr_equals_psfofr_with_zero_rank(self):
        coef, _ = coefficients(seed=4)
        spec_f = model_spec("fofr", 400, 100, 3, seed=9)
        spec_p = model_spec("psfofr", 400, 100, 3, seed=9)
        d_f = fit_fofr(coef, spec=spec_f)
        mesh = build_mesh(((0.0, 1.0), (0.0, 1.0)), max_edge=0.5)
        rng = np.random.default_rng(1)
        proj = projection_point(mesh, rng.uniform(0.1, 0.9, size=(60, 2)), p=3)
        proj_zero = type(proj)(
            P=np.zeros((60, 0)),
            rank=0,
            eigenvalues=np.zeros(0),
            mesh=proj.mesh,
            M=proj.M[:, :0],
            A=proj.A,
        )
        d_p = fit_psfofr(coef, proj_zero, Q_delta=np.zeros((0, 0)), spec=spec_p)
        assert np.array_equal(d_f.psi, d_p.psi)
        assert np.array_equal(d_f.tau2, d_p.tau2)


class TestInvariances:
    def test_determinism(self):
        coef, _ = coefficients(seed=5)
        spec = model_spec("fofr", 300, 100, 2, seed=11)
        a = fit_fofr(coef, spec=spec)
        b = fit_fofr(coef, spec=spec)
        assert np.array_equal(a.psi, b.psi)
        assert np.array_equal(a.tau2, b.tau2)

    def test_seed_changes_draws(self):
        coef, _ = coefficients(seed=5)
        a = fit_fofr(coef, spec=model_spec("fofr", 300, 100, 2, seed=11))
        b = fit_fofr(coef, spec=model_spec("fofr", 300, 100, 2, seed=12))
        assert not np.array_equal(a.psi, b.psi)

    def test_site_permutation(self, rng):
        coef, _ = coefficients(n=40, seed=6)
        mesh = build_mesh(((0.0, 1.0), (0.0, 1.0)), max_edge=0.4, margin=0.1)
        pts = rng.uniform(0.1, 0.9, size=(40, 2))
        proj = projection_point(mesh, pts, p=4)
        spec = model_spec("psfofr", 200, 0, 1, seed=2)
        d = fit_psfofr(coef, proj, spec=spec)
        perm = rng.permutation(40)
        coef_p = CoefficientSet(
            y_coef=coef.y_coef[perm],
            x_coef=coef.x_coef[perm],
            phi=coef.phi,
            xi=coef.xi,
        )
        proj_p = projection_point(mesh, pts[perm], p=4)
        d_p = fit_psfofr(coef_p, proj_p, spec=spec)
        assert np.allclose(d.psi, d_p.psi, atol=1e-10)
        assert np.allclose(d.random_effect, d_p.random_effect, atol=1e-10)
        assert np.allclose(d.tau2, d_p.tau2, atol=1e-12)

    def test_delta_update_scales_with_p_not_n(self):
        def one_fit(n, seed=0):
            rngl = np.random.default_rng(seed)
            coef, _ = coefficients(n=n, seed=seed)
            mesh = build_mesh(((0.0, 1.0), (0.0, 1.0)), max_edge=0.2, margin=0.1)
            proj = projection_point(mesh, rngl.uniform(0.1, 0.9, size=(n, 2)), p=20)
            spec = model_spec("psfofr", 300, 0, 1, seed=seed)
            t0 = time.perf_counter()
            fit_psfofr(coef, proj, spec=spec)
            return time.perf_counter() - t0

        one_fit(300)  # warm-up
        t_small = min(one_fit(600, s) for s in range(3))
        t_big = min(one_fit(1200, s) for s in range(3))
        assert t_big / t_small <= 2.5


class TestZeroSignal:
    def test_credible_intervals_cover_zero(self):
        rng = np.random.default_rng(11)
        phi, xi = bases()
        coef = CoefficientSet(
            y_coef=rng.normal(scale=0.5, size=(120, 6)),
            x_coef=rng.normal(size=(120, 5)),
            phi=phi,
            xi=xi,
        )
        d = fit_fofr(coef, spec=model_spec("fofr", 4000, 1000, 1, seed=3))
        lo = np.quantile(d.psi, 0.025, axis=0)
        hi = np.quantile(d.psi, 0.975, axis=0)
        assert np.mean((lo <= 0.0) & (0.0 <= hi)) >= 0.90


class TestRidgeClosedForms:
    def test_fofr_posterior_mean_with_fixed_tau2(self):
        rng = np.random.default_rng(11)
        phi, xi = bases()
        coef = CoefficientSet(
            y_coef=rng.normal(scale=0.5, size=(120, 6)),
            x_coef=rng.normal(size=(120, 5)),
            phi=phi,
            xi=xi,
        )
        tau2 = 0.21
        d = fit_fofr(coef, spec=model_spec("fofr", 4000, 1000, 1, seed=5), fixed={"tau2": tau2})
        assert np.allclose(d.tau2, tau2)
        x = coef.x_coef
        prec = x.T @ x / tau2 + np.eye(5) / 10.0
        want = np.linalg.solve(prec, x.T @ coef.y_coef / tau2)
        U = d.psi.shape[0]
        sd = d.psi.std(axis=0, ddof=1)
        z = (d.psi.mean(axis=0) - want) / (sd / np.sqrt(U))
        assert np.abs(z).max() <= 3.0

    def test_sfofr_reduces_to_ridge_when_sites_are_far_apart(self):
        grid = np.linspace(0.0, 1.0, 40)
        phi = make_bspline((0.0, 1.0), 4, grid=grid)
        xi = make_bspline((0.0, 1.0), 4, grid=grid)
        rng = np.random.default_rng(21)
        n, g, k = 30, 4, 4
        coords = 50.0 * np.arange(n, dtype=float)[:, None] * np.array([[1.0, 0.5]])
        x = rng.normal(size=(n, g))
        y = x @ rng.normal(size=(g, k)) + rng.normal(scale=0.7, size=(n, k))
        coef = CoefficientSet(y_coef=y, x_coef=x, phi=phi, xi=xi)
        tau2, sigma2 = 0.25, 0.8
        d = fit_sfofr_continuous(
            coef,
            coords,
            spec=model_spec("sfofr", 21000, 1000, 1, seed=3),
            fixed={"tau2": tau2, "sigma2": sigma2, "rho": 0.5},
        )
        # joint Gaussian closed form for (psi, W) under Gamma ~ I
        from sfofr.diagnostics import ess

        A = np.hstack([x, np.eye(n)])
        prior = np.diag(np.concatenate([np.full(g, 0.1), np.full(n, 1.0 / sigma2)]))
        prec = A.T @ A / tau2 + prior
        want = np.linalg.solve(prec, A.T @ y / tau2)
        stacked = np.concatenate([d.psi, d.random_effect], axis=1)
        sd = stacked.std(axis=0, ddof=1)
        se = np.empty_like(sd)
        for i in range(se.shape[0]):
            for j in range(k):
                se[i, j] = sd[i, j] / np.sqrt(ess(stacked[:, i, j]))
        z = (stacked.mean(axis=0) - want) / se
        assert np.abs(z).max() <= 3.0


class TestDiscreteModel:
    def adjacency(self, side=5):
        n = side * side
        D = np.zeros((n, n))
        for i in range(side):
            for j in range(side):
                a = i * side + j
                if i + 1 < side:
                    D[a, a + side] = D[a + side, a] = 1.0
                if j + 1 < side:
                    D[a, a + 1] = D[a + 1, a] = 1.0
        return D

    def test_w_columns_recentred_and_nu_positive(self):
        D = self.adjacency()
        coef, _ = coefficients(n=25, seed=8)
        spec = model_spec("sfofr", 600, 200, 2, seed=1, domain_kind="discrete")
        d = fit_sfofr_discrete(coef, D, spec=spec)
        sums = d.random_effect.sum(axis=1)
        assert np.abs(sums).max() < 1e-8
        assert d.nu.min() > 0

    def test_psfofr_removes_residual_autocorrelation(self):
        side = 7
        D = self.adjacency(side)
        n = side * side
        grid = np.linspace(0.0, 1.0, 40)
        phi = make_bspline((0.0, 1.0), 5, grid=grid)
        xi = make_bspline((0.0, 1.0), 5, grid=grid)
        rng = np.random.default_rng(9)
        centroids = np.array(
            [[i / side, j / side] for i in range(side) for j in range(side)]
        )
        L = np.linalg.cholesky(matern_cov(centroids, 1.0, 0.4))
        w = L @ rng.normal(size=(n, 5))
        x = rng.normal(size=(n, 5))
        y = x @ rng.normal(size=(5, 5)) + w + rng.normal(scale=0.1, size=(n, 5))
        coef = CoefficientSet(y_coef=y, x_coef=x, phi=phi, xi=xi)
        proj = moran_basis_areal(x, D, p=12)
        spec_ps = model_spec("psfofr", 3000, 1000, 2, seed=4, domain_kind="discrete")
        spec_fo = model_spec("fofr", 3000, 1000, 2, seed=4, domain_kind="discrete")
        d_ps = fit_psfofr(coef, proj, spec=spec_ps, D=D)
        d_fo = fit_fofr(coef, spec=spec_fo)

        def site_scalar(resid):
            return (resid @ phi.values) @ phi.quad_weights

        r_ps = y - x @ d_ps.psi.mean(axis=0) - proj.P @ d_ps.random_effect.mean(axis=0)
        r_fo = y - x @ d_fo.psi.mean(axis=0)
        i_ps, p_ps = morans_i(site_scalar(r_ps), D, seed=0)
        i_fo, p_fo = morans_i(site_scalar(r_fo), D, seed=0)
        assert i_fo > i_ps + 0.3
        assert p_fo < 0.05 < p_ps


class TestContinuousModel:
    def test_acceptance_rate_in_window_and_rho_in_bounds(self, small_sim, small_coef):
        coords = small_sim.train.spatial.coords
        spec = model_spec("sfofr", 3000, 1500, 3, seed=2)
        d = fit_sfofr_continuous(small_coef, coords, spec=spec)
        assert 0.1 <= d.acceptance_rate_rho <= 0.6
        assert 0.0 < d.rho.min() and d.rho.max() < 1.0
        assert d.sigma2.min() > 0


class TestGuards:
    def test_psfofr_requires_matching_rows(self, rng):
        coef, _ = coefficients(n=30, seed=2)
        mesh = build_mesh(((0.0, 1.0), (0.0, 1.0)), max_edge=0.4)
        proj = projection_point(mesh, rng.uniform(0.1, 0.9, size=(29, 2)), p=3)
        with pytest.raises(DimensionError, match="projection rows"):
            fit_psfofr(coef, proj, spec=model_spec("psfofr", 10, 0, 1))

    def test_model_name_checked(self):
        coef, _ = coefficients(n=20, seed=2)
        with pytest.raises(ConfigError, match="expected 'fofr'"):
            fit_fofr(coef, spec=model_spec("psfofr", 10, 0, 1))

    def test_asymmetric_q_delta_rejected(self, rng):
        coef, _ = coefficients(n=30, seed=2)
        mesh = build_mesh(((0.0, 1.0), (0.0, 1.0)), max_edge=0.4)
        proj = projection_point(mesh, rng.uniform(0.1, 0.9, size=(30, 2)), p=3)
        bad = np.triu(np.ones((3, 3)))
        with pytest.raises(ValueError, match="symmetric"):
            fit_psfofr(coef, proj, Q_delta=bad, spec=model_spec("psfofr", 10, 0, 1))


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path, small_psfofr):
        out = tmp_path / "draws"
        save_draws(small_psfofr, out)
        back = load_draws(out)
        assert np.array_equal(back.psi, small_psfofr.psi)
        assert np.array_equal(back.random_effect, small_psfofr.random_effect)
        assert np.array_equal(back.tau2, small_psfofr.tau2)
        assert back.model == "psfofr"
        assert back.spec.mcmc.seed == small_psfofr.spec.mcmc.seed

    def test_load_missing_directory(self, tmp_path):
        with pytest.raises(MissingFileError):
            load_draws(tmp_path / "nope")
