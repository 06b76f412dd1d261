"""Acceptance suite: one numbered test per shipped guarantee.

Every test is self-contained and runs at the advertised fidelity
(sample sizes, iteration counts, tolerances).  The benchmark tests
print their measured numbers so a verbose run doubles as a report.
"""

import time

import numpy as np
import pytest
from scipy import signal

from sfofr.baseline import uk_predict
from sfofr.basis import (
    BasisSystem,
    gram,
    make_bspline,
    make_fourier,
    make_fpc,
    project_surface,
    tensor_surface,
)
from sfofr.curves import (
    CoefficientSet,
    FunctionalDataset,
    coef_to_basis,
    from_basis,
    to_basis,
)
from sfofr.diagnostics import ess, mcse
from sfofr.posterior import krige, score, score_surface, summarize_surface
from sfofr.projection import (
    ProjectionBasis,
    build_mesh,
    interpolation_matrix,
    moran_basis_areal,
    moran_basis_point,
    projection_point,
)
from sfofr.sampler import (
    McmcSpec,
    ModelSpec,
    PosteriorDraws,
    PriorSpec,
    draw_delta_block,
    draw_nu,
    draw_psi_block,
    draw_sigma2_matern,
    draw_sigma2_projected,
    draw_tau2,
    draw_w_continuous,
    draw_w_discrete,
    fit_fofr,
    fit_psfofr,
    fit_sfofr_continuous,
)
from sfofr.simulate import DOMAIN, N_GRID, SimConfig, generate, true_psi_gaussian
from sfofr.spatial import matern_cov

UNIT = ((0.0, 1.0), (0.0, 1.0))


# ---------------------------------------------------------------- helpers


def _benchmark_seed(seed, n=1000, iters=70000, burnin=50000, thin=20, p=50,
                    max_edge=0.15):
    """One full train/predict/summarize cycle on the reference generator."""
    t0 = time.time()
    sim = generate(SimConfig(n=n, seed=seed))
    train, test = sim.train, sim.test
    phi = xi = sim.basis
    coef = to_basis(train, phi, xi)
    tr_xy = train.spatial.coords
    te_xy = test.spatial.coords
    bounds = (
        (tr_xy[:, 0].min(), tr_xy[:, 0].max()),
        (tr_xy[:, 1].min(), tr_xy[:, 1].max()),
    )
    mesh = build_mesh(bounds, max_edge=max_edge, margin=0.1)
    proj = projection_point(mesh, tr_xy, p=p)

    def spec(model):
        return ModelSpec(
            model=model,
            domain_kind="continuous",
            priors=PriorSpec(),
            mcmc=McmcSpec(iters=iters, burnin=burnin, thin=thin, seed=seed),
        )

    d_ps = fit_psfofr(coef, proj, spec=spec("psfofr"))
    d_fo = fit_fofr(coef, spec=spec("fofr"))
    x_star = to_basis(test, phi, xi).x_coef
    proj_star = projection_point(mesh, te_xy, p=p).P
    kr_ps = krige(d_ps, x_star, phi, proj_star=proj_star, seed=seed)
    kr_fo = krige(d_fo, x_star, phi, seed=seed)
    sc_ps = score(kr_ps.mean_curves, test.response_curves,
                  bands=(kr_ps.lower, kr_ps.upper))
    sc_fo = score(kr_fo.mean_curves, test.response_curves)
    summ = summarize_surface(d_ps, xi, phi)
    mse = score_surface(summ.mean, sim.psi_surface)
    uk_pred, _ = uk_predict(
        train.response_curves, tr_xy, te_xy,
        x_drift=coef.x_coef, x_drift_targets=x_star,
        grid=train.t_grid, domain=phi.domain,
        variogram_cfg={"family": "gaussian"},
    )
    sc_uk = score(uk_pred, test.response_curves)
    row = {
        "seed": seed,
        "mspe_ps": sc_ps["mspe"],
        "cov_ps": sc_ps["mean_coverage"],
        "mspe_fo": sc_fo["mspe"],
        "mspe_uk": sc_uk["mspe"],
        "mse": mse,
        "elapsed": time.time() - t0,
    }
    print({k: (round(v, 5) if isinstance(v, float) else v) for k, v in row.items()},
          flush=True)
    return row


def _draws_from_psi(psi):
    """Wrap raw coefficient draws as an independent-model chain."""
    u = psi.shape[0]
    return PosteriorDraws(
        model="fofr",
        domain_kind="continuous",
        psi=psi,
        random_effect=None,
        tau2=np.ones(u),
        sigma2=None,
        nu=None,
        rho=None,
        acceptance_rate_rho=None,
        spec=ModelSpec(model="fofr"),
    )


def _gauss_oracle(sampler, prec, rhs, u):
    """Worst |z| of empirical mean/variance against a Gaussian conditional."""
    cov = np.linalg.inv(prec)
    mean = cov @ rhs
    var = np.diag(cov)[:, None] * np.ones_like(rhs)
    draws = np.stack([sampler() for _ in range(u)])
    z_mean = (draws.mean(axis=0) - mean) / np.sqrt(var / u)
    z_var = (draws.var(axis=0, ddof=1) - var) / (var * np.sqrt(2.0 / (u - 1)))
    return float(np.abs(z_mean).max()), float(np.abs(z_var).max())


def _scalar_oracle(sampler, mean, var, mu4, u):
    """Worst |z| of empirical mean/variance against scalar moments."""
    draws = np.array([sampler() for _ in range(u)])
    z_mean = (draws.mean() - mean) / np.sqrt(var / u)
    z_var = (draws.var(ddof=1) - var) / np.sqrt((mu4 - var**2) / u)
    return float(abs(z_mean)), float(abs(z_var))


def _invgamma_moments(a, b):
    m = [b**r / np.prod([a - j for j in range(1, r + 1)]) for r in (1, 2, 3, 4)]
    mean = m[0]
    var = m[1] - m[0] ** 2
    mu4 = m[3] - 4 * m[2] * m[0] + 6 * m[1] * m[0] ** 2 - 3 * m[0] ** 4
    return mean, var, mu4


def _gamma_moments(shape, rate):
    theta = 1.0 / rate
    return shape * theta, shape * theta**2, 3 * shape * (shape + 2) * theta**4


def _columns_match_up_to_sign(got, want, tol=1e-8):
    for j in range(got.shape[1]):
        a, b = got[:, j], want[:, j]
        if min(np.abs(a - b).max(), np.abs(a + b).max()) > tol:
            return False
    return True


def _eigenspaces_match(got_vecs, want_vecs, want_vals, tol=1e-8):
    """Sign-flips for simple eigenvalues, subspaces for repeated ones."""
    p = got_vecs.shape[1]
    scale = max(1.0, float(np.abs(want_vals).max()))
    start = 0
    while start < p:
        stop = start + 1
        while stop < p and want_vals[stop - 1] - want_vals[stop] <= tol * scale:
            stop += 1
        G = got_vecs[:, start:stop]
        W = want_vecs[:, start:stop]
        if np.abs(G @ G.T - W @ W.T).max() > tol:
            return False
        start = stop
    return True


def _band_summary(seed, u=400, shift=0.0, alphas=(0.05,)):
    """Random coefficient draws, their summary, and the draw surfaces."""
    rng = np.random.default_rng(seed)
    xi = make_bspline((0.0, 1.0), 4, grid=np.linspace(0.0, 1.0, 21))
    phi = make_fourier((0.0, 1.0), 5, grid=np.linspace(0.0, 1.0, 23))
    psi = 0.3 * rng.normal(size=(u, 4, 5)) + shift
    summ = summarize_surface(_draws_from_psi(psi), xi, phi, alphas=alphas)
    surfaces = np.einsum("gr,ugk,kt->urt", xi.values, psi, phi.values)
    return summ, surfaces


# --------------------------------------------------------------- criteria


def test_criterion_1_benchmark_full_scale():
    t0 = time.time()
    rows = [_benchmark_seed(s) for s in (1, 2, 3)]
    elapsed = time.time() - t0
    avg = {
        key: float(np.mean([r[key] for r in rows]))
        for key in ("mspe_ps", "cov_ps", "mspe_fo", "mspe_uk", "mse")
    }
    print(f"averages over seeds 1-3: {avg}, wall time {elapsed:.1f}s")
    assert 0.106 - 0.04 <= avg["mspe_ps"] <= 0.106 + 0.04
    assert avg["mse"] <= 0.01
    assert avg["cov_ps"] >= 0.95
    for row in rows:
        assert row["mspe_fo"] > row["mspe_ps"], f"seed {row['seed']}"
    assert 0.123 - 0.05 <= avg["mspe_uk"] <= 0.123 + 0.05
    assert elapsed <= 90 * 60


def test_criterion_1_benchmark_fast_mode():
    t0 = time.time()
    rows = [
        _benchmark_seed(s, n=300, iters=20000, burnin=10000, thin=10,
                        p=15, max_edge=0.25)
        for s in (1, 2, 3)
    ]
    elapsed = time.time() - t0
    for row in rows:
        assert row["mspe_fo"] > row["mspe_ps"], f"seed {row['seed']}"
        assert row["mspe_fo"] > row["mspe_uk"], f"seed {row['seed']}"
        assert row["mse"] <= 0.02, f"seed {row['seed']}"
    assert elapsed <= 600.0


def test_criterion_2_full_conditionals_match_analytic_moments():
    t0 = time.time()
    u = 100_000
    reports = []
    root = np.random.SeedSequence(20260819003)
    rngs = [np.random.Generator(np.random.Philox(s)) for s in root.spawn(10)]
    setup = np.random.default_rng(7)

    # regression block: n=40 sites, g=3, k=2
    n, g, k = 40, 3, 2
    x = setup.normal(size=(n, g))
    resid = setup.normal(size=(n, k))
    tau2 = 0.37
    prec = x.T @ x / tau2 + np.eye(g) / 10.0
    reports.append(
        ("psi",)
        + _gauss_oracle(lambda: draw_psi_block(rngs[0], x, resid, tau2),
                        prec, x.T @ resid / tau2, u)
    )

    # projected-effect block: p=4
    p = 4
    P = setup.normal(size=(n, p))
    A = setup.normal(size=(p, p))
    Qd = A @ A.T + p * np.eye(p)
    sigma2 = 1.8
    prec = P.T @ P / tau2 + sigma2 * Qd
    reports.append(
        ("delta",)
        + _gauss_oracle(
            lambda: draw_delta_block(rngs[1], P, resid, tau2, sigma2, Qd),
            prec, P.T @ resid / tau2, u)
    )

    # latent block, point domain: 5 sites
    n5 = 5
    coords = setup.uniform(size=(n5, 2))
    gamma_inv = np.linalg.inv(matern_cov(coords, 1.0, 0.3))
    resid5 = setup.normal(size=(n5, k))
    s2w = 0.9
    prec = np.eye(n5) / tau2 + gamma_inv / s2w
    reports.append(
        ("w_point",)
        + _gauss_oracle(
            lambda: draw_w_continuous(rngs[2], resid5, tau2, s2w, gamma_inv),
            prec, resid5 / tau2, u)
    )

    # latent block, areal domain: two-node path with hand-checked precision
    Q2 = np.array([[1.0, -1.0], [-1.0, 1.0]])
    resid2 = np.array([[0.7, -0.2], [0.1, 0.4]])
    prec = np.eye(2) / 0.5 + 2.0 * Q2
    assert np.allclose(prec, [[4.0, -2.0], [-2.0, 4.0]])
    assert np.allclose(np.linalg.inv(prec), [[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
    reports.append(
        ("w_areal",)
        + _gauss_oracle(lambda: draw_w_discrete(rngs[3], resid2, 0.5, 2.0, Q2),
                        prec, resid2 / 0.5, u)
    )

    # error variance: inverse gamma
    mean, var, mu4 = _invgamma_moments(
        n * k / 2.0 + 2.0, float(np.sum(resid * resid)) / 2.0 + 0.1
    )
    reports.append(
        ("tau2",) + _scalar_oracle(lambda: draw_tau2(rngs[4], resid),
                                   mean, var, mu4, u)
    )

    # latent scale, point domain: inverse gamma
    w5 = setup.normal(size=(n5, k))
    mean, var, mu4 = _invgamma_moments(
        2.0 + n5 * k / 2.0, 0.1 + float(np.sum(w5 * (gamma_inv @ w5))) / 2.0
    )
    reports.append(
        ("sigma2_point",)
        + _scalar_oracle(lambda: draw_sigma2_matern(rngs[5], w5, gamma_inv),
                         mean, var, mu4, u)
    )

    # projected-effect precision multiplier: gamma, kernel-derived shape
    delta = setup.normal(size=(p, k))
    rate = float(np.sum(delta * (Qd @ delta))) / 2.0 + p / 2000.0
    mean, var, mu4 = _gamma_moments(p * k / 2.0 + 0.5, rate)
    reports.append(
        ("sigma2_proj",)
        + _scalar_oracle(lambda: draw_sigma2_projected(rngs[6], delta, Qd),
                         mean, var, mu4, u)
    )

    # same draw with the literal unit shape
    mean, var, mu4 = _gamma_moments(1.0, rate)
    reports.append(
        ("sigma2_proj_literal",)
        + _scalar_oracle(
            lambda: draw_sigma2_projected(rngs[7], delta, Qd, literal=True),
            mean, var, mu4, u)
    )

    # intrinsic precision multiplier: gamma with unit shape
    Q5 = (
        np.diag([2.0, 3.0, 2.0, 3.0, 2.0])
        - np.diag([1.0] * 4, 1)
        - np.diag([1.0] * 4, -1)
    )
    Q5[0, 0] = Q5[-1, -1] = 1.0
    mean, var, mu4 = _gamma_moments(
        1.0, float(np.sum(w5 * (Q5 @ w5))) / 2.0 + n5 / 2000.0
    )
    reports.append(
        ("nu",) + _scalar_oracle(lambda: draw_nu(rngs[8], w5, Q5),
                                 mean, var, mu4, u)
    )

    elapsed = time.time() - t0
    for name, zm, zv in reports:
        print(f"{name:20s} max|z_mean|={zm:6.3f}  max|z_var|={zv:6.3f}")
        assert zm <= 3.0, f"{name}: mean z {zm:.3f}"
        assert zv <= 3.0, f"{name}: variance z {zv:.3f}"
    assert elapsed <= 120.0


def test_criterion_3_fixed_scale_posterior_matches_closed_form():
    t0 = time.time()
    rng = np.random.default_rng(42)
    n, g, k, p = 50, 3, 3, 5
    basis = make_bspline((0.0, 1.0), 3, order=2, grid=np.linspace(0.0, 1.0, 30))
    x = rng.normal(size=(n, g))
    P = rng.normal(size=(n, p))
    Qd = 2.0 * np.eye(p)
    tau2, sigma2 = 0.3, 1.5
    y = (
        x @ rng.normal(size=(g, k))
        + P @ rng.normal(size=(p, k))
        + np.sqrt(tau2) * rng.normal(size=(n, k))
    )
    coef = CoefficientSet(y_coef=y, x_coef=x, phi=basis, xi=basis)
    proj = ProjectionBasis(P=P, rank=p, eigenvalues=np.zeros(p))
    spec = ModelSpec(
        model="psfofr",
        domain_kind="continuous",
        mcmc=McmcSpec(iters=22000, burnin=2000, thin=1, seed=7),
    )
    draws = fit_psfofr(coef, proj, Q_delta=Qd, spec=spec,
                       fixed={"tau2": tau2, "sigma2": sigma2})

    # with tau2 and sigma2 fixed the stacked coefficients are jointly
    # Gaussian with a closed-form posterior, column by column
    Z = np.hstack([x, P])
    prior_prec = np.zeros((g + p, g + p))
    prior_prec[:g, :g] = np.eye(g) / 10.0
    prior_prec[g:, g:] = sigma2 * Qd
    prec = Z.T @ Z / tau2 + prior_prec
    post_mean = np.linalg.solve(prec, Z.T @ y / tau2)

    u = draws.n_draws
    emp = np.concatenate(
        [draws.psi.reshape(u, -1), draws.random_effect.reshape(u, -1)], axis=1
    )
    closed = post_mean.ravel()
    ses = np.array([mcse(emp[:, j]) for j in range(emp.shape[1])])
    ratio = np.abs(emp.mean(axis=0) - closed) / ses
    elapsed = time.time() - t0
    print(f"max |error|/MCSE = {ratio.max():.3f}, wall time {elapsed:.1f}s")
    assert ratio.max() <= 3.0
    assert elapsed <= 60.0


def test_criterion_4_simultaneous_band_guarantees():
    # hand example: one r point, two t points, three draws whose
    # surfaces are (0, 2), (1, 1), (2, 0)
    psi = np.array([[[0.0, 2.0]], [[1.0, 1.0]], [[2.0, 0.0]]]) / np.sqrt(2.0)
    xi = BasisSystem(
        family="bspline", n_basis=1, domain=(0.0, 1.0),
        grid=np.array([0.5]), values=np.array([[1.0]]),
        quad_weights=np.array([1.0]),
    )
    root2 = np.sqrt(2.0)
    phi = BasisSystem(
        family="bspline", n_basis=2, domain=(0.0, 1.0),
        grid=np.array([0.0, 1.0]),
        values=np.array([[root2, 0.0], [0.0, root2]]),
        quad_weights=np.array([0.5, 0.5]),
    )
    with pytest.warns(UserWarning, match="below 50 draws"):
        summ = summarize_surface(_draws_from_psi(psi), xi, phi, alphas=(1 / 3,))
    assert summ.m_alpha[1 / 3] == pytest.approx(1.0)

    for seed in (0, 1, 2):
        shift = 0.4 if seed == 1 else 0.0
        alphas = (0.05, 0.2)
        summ, surfaces = _band_summary(seed, u=400, shift=shift, alphas=alphas)
        u = surfaces.shape[0]
        sb = summ.simbas.values
        for alpha in alphas:
            lo = summ.lower[alpha].values
            hi = summ.upper[alpha].values
            inside = np.all((surfaces >= lo[None]) & (surfaces <= hi[None]),
                            axis=(1, 2))
            # counts move in steps of 1/u, so the 1e-12 pad only absorbs
            # representation error when the fraction lands exactly on the bound
            assert inside.mean() + 1e-12 >= 1.0 - alpha - 1.0 / u

            # duality between the score and the band, exact off tie points
            sig = summ.significance[alpha]
            want = np.where(lo > 0, 1, np.where(hi < 0, -1, 0))
            assert np.array_equal(sig, want)
            assert np.all(sig[sb < alpha] != 0)
            assert np.all(sig[sb > alpha] == 0)


def test_criterion_5_projection_construction_oracles():
    rng = np.random.default_rng(12)

    # areal operator vs a dense eigensolve on an 8-node graph
    n = 8
    D = np.zeros((n, n))
    for i in range(n):
        D[i, (i + 1) % n] = D[(i + 1) % n, i] = 1.0
    D[0, 4] = D[4, 0] = 1.0
    x = rng.normal(size=(n, 3))
    # the top 3 eigenvalues are simple; the 4th already falls in the
    # null cluster spanned by the covariates
    proj = moran_basis_areal(x, D, p=3)
    H = np.eye(n) - x @ np.linalg.pinv(x)
    vals, vecs = np.linalg.eigh(H @ D @ H)
    order = np.argsort(vals)[::-1]
    assert np.abs(proj.eigenvalues - vals[order[:3]]).max() < 1e-8
    assert _columns_match_up_to_sign(proj.P, vecs[:, order[:3]])

    # covariate orthogonality of the nonzero-eigenvalue columns
    keep = proj.eigenvalues > 1e-10
    assert keep.any()
    assert np.abs(x.T @ proj.P[:, keep]).max() < 1e-8

    # mesh operator vs a dense eigensolve on a 25-vertex mesh
    mesh = build_mesh(UNIT, max_edge=0.25)
    m = mesh.vertices.shape[0]
    assert m == 25
    Hm = np.eye(m) - np.ones((m, m)) / m
    vals, vecs = np.linalg.eigh(Hm @ mesh.graph_adjacency @ Hm)
    order = np.argsort(vals)[::-1]
    M, lam = moran_basis_point(mesh, p=6)
    assert np.abs(lam - vals[order[:6]]).max() < 1e-8
    # eigenvalues 4 and 5 are a repeated pair under the lattice's mirror
    # symmetry, so their columns are compared as a subspace
    assert _eigenspaces_match(M, vecs[:, order[:6]], vals[order[:6]])

    # interpolation reproduces affine functions exactly
    pts = rng.uniform(0.1, 0.9, size=(50, 2))
    A = interpolation_matrix(mesh, pts)
    for a, b, c in [(1.0, 0.0, 0.0), (0.3, 2.0, -1.5), (0.0, 1.0, 1.0)]:
        f_vertices = a + b * mesh.vertices[:, 0] + c * mesh.vertices[:, 1]
        f_points = a + b * pts[:, 0] + c * pts[:, 1]
        assert np.abs(A @ f_vertices - f_points).max() < 1e-10

    # composed point projection agrees with its factors
    proj_pt = projection_point(mesh, pts, p=6)
    assert np.abs(proj_pt.P - A @ M).max() < 1e-12


def test_criterion_6_universal_kriging_hand_solve():
    nugget, sill, range_ = 0.1, 1.0, 1.0
    sites = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    grid = np.linspace(0.0, 1.0, 25)
    curves = np.vstack(
        [np.sin(2 * np.pi * grid), np.cos(2 * np.pi * grid), grid**2]
    )

    def gamma(h):
        return np.where(h > 0, nugget + sill * (1.0 - np.exp(-h / range_)), 0.0)

    cfg = {"family": "exponential", "nugget": nugget, "sill": sill,
           "range_": range_}

    # one target, the 4x4 extended system solved by hand
    target = np.array([0.5, 0.0])
    d = np.sqrt(((sites[:, None] - sites[None]) ** 2).sum(-1))
    system = np.zeros((4, 4))
    system[:3, :3] = gamma(d)
    system[:3, 3] = 1.0
    system[3, :3] = 1.0
    rhs = np.concatenate(
        [gamma(np.sqrt(((sites - target) ** 2).sum(-1))), [1.0]]
    )
    sol = np.linalg.solve(system, rhs)
    pred, uks = uk_predict(curves, sites, target[None], grid=grid,
                           domain=(0.0, 1.0), variogram_cfg=cfg)
    assert np.abs(uks.weights[:, 0] - sol[:3]).max() <= 1e-10
    assert abs(uks.multipliers[0, 0] - sol[3]) <= 1e-10
    assert np.abs(pred[0] - sol[:3] @ curves).max() <= 1e-10

    # without a nugget, prediction at an observed site returns its curve
    pred2, uks2 = uk_predict(curves, sites, sites[1:2], grid=grid,
                             domain=(0.0, 1.0),
                             variogram_cfg=dict(cfg, nugget=0.0))
    unit = np.zeros(3)
    unit[1] = 1.0
    assert np.abs(uks2.weights[:, 0] - unit).max() < 1e-10
    assert np.abs(pred2[0] - curves[1]).max() < 1e-10


def test_criterion_7_chain_diagnostics():
    # iid chain: batch-means MCSE tracks sd/sqrt(U)
    chain = np.random.default_rng(5).normal(size=10_000)
    want = chain.std(ddof=1) / np.sqrt(chain.size)
    assert abs(mcse(chain) - want) / want < 0.30

    # AR(1) chain: ESS/U tracks (1 - phi) / (1 + phi)
    phi = 0.9
    noise = np.random.default_rng(11).normal(size=100_000)
    ar1 = signal.lfilter([1.0], [1.0, -phi], noise)
    want_ratio = (1.0 - phi) / (1.0 + phi)
    got_ratio = ess(ar1) / ar1.size
    assert abs(got_ratio - want_ratio) / want_ratio < 0.25

    # the projected effect mixes better than the latent field at
    # matched iteration counts
    sim = generate(SimConfig(n=300, seed=1))
    coef = to_basis(sim.train, sim.basis, sim.basis)
    coords = sim.train.spatial.coords
    bounds = (
        (coords[:, 0].min(), coords[:, 0].max()),
        (coords[:, 1].min(), coords[:, 1].max()),
    )
    mesh = build_mesh(bounds, max_edge=0.25, margin=0.1)
    proj = projection_point(mesh, coords, p=15)
    mcmc = McmcSpec(iters=6000, burnin=3000, thin=3, seed=1)
    d_ps = fit_psfofr(coef, proj, spec=ModelSpec(model="psfofr", mcmc=mcmc))
    d_sf = fit_sfofr_continuous(
        coef, coords, spec=ModelSpec(model="sfofr", mcmc=mcmc)
    )
    ess_delta = float(np.mean(
        [ess(c) for c in d_ps.random_effect.reshape(d_ps.n_draws, -1).T]
    ))
    ess_w = float(np.mean(
        [ess(c) for c in d_sf.random_effect.reshape(d_sf.n_draws, -1).T]
    ))
    print(f"mean ESS: projected effect {ess_delta:.1f}, latent field {ess_w:.1f}")
    assert ess_delta > ess_w


def test_criterion_8_basis_transform_identities():
    grid = np.linspace(0.0, 1.0, 101)
    waves = np.vstack([np.sin((j + 1) * np.pi * grid) for j in range(6)])
    fpc_curves = np.random.default_rng(8).normal(size=(40, 6)) @ waves
    systems = [
        make_bspline((0.0, 1.0), 12, grid=grid),
        make_fourier((0.0, 1.0), 11, grid=grid),
        make_fpc(fpc_curves, 5, grid=grid, domain=(0.0, 1.0)),
    ]
    rng = np.random.default_rng(9)
    for basis in systems:
        resid = np.abs(
            gram(basis.values, basis.quad_weights) - np.eye(basis.n_basis)
        ).max()
        assert resid < 1e-8, basis.family
        coefs = rng.normal(size=(7, basis.n_basis))
        curves = from_basis(coefs, basis)
        back = coef_to_basis(curves, basis)
        assert np.abs(back - coefs).max() < 1e-8, basis.family
        assert np.abs(from_basis(back, basis) - curves).max() < 1e-8

    # dataset-level round trip through both bases at once
    phi, xi = systems[0], systems[1]
    yc = rng.normal(size=(5, phi.n_basis))
    xc = rng.normal(size=(5, xi.n_basis))
    dataset = FunctionalDataset(
        response_curves=from_basis(yc, phi),
        covariate_curves=from_basis(xc, xi),
        t_grid=grid,
        r_grid=grid,
        spatial=None,
        ids=tuple(f"s{i}" for i in range(5)),
    )
    coef = to_basis(dataset, phi, xi)
    assert np.abs(coef.y_coef - yc).max() < 1e-8
    assert np.abs(coef.x_coef - xc).max() < 1e-8
    assert np.abs(from_basis(coef.y_coef, phi) - dataset.response_curves).max() < 1e-8

    # tensor reconstruction of the benchmark ridge surface
    g225 = np.linspace(DOMAIN[0], DOMAIN[1], N_GRID)
    truth = true_psi_gaussian(g225[:, None], g225[None, :])
    peak = np.abs(truth).max()
    ratios = {}
    for nb in (15, 25):
        basis = make_bspline(DOMAIN, nb, grid=g225)
        recon = tensor_surface(basis, basis, project_surface(basis, basis, truth))
        ratios[nb] = float(np.abs(recon.values - truth).max() / peak)
    print(f"sup-error over peak by marginal rank: {ratios}")
    # the ridge is too narrow for 15 spline functions per margin: the
    # measured ratio there is about 0.11 and first drops under 0.01 at 25
    assert ratios[15] < 0.01


def test_criterion_9_thresholded_surface_recovery():
    sim = generate(SimConfig(n=300, seed=2, n_basis=20, psi="complex"))
    coef = to_basis(sim.train, sim.basis, sim.basis)
    coords = sim.train.spatial.coords
    bounds = (
        (coords[:, 0].min(), coords[:, 0].max()),
        (coords[:, 1].min(), coords[:, 1].max()),
    )
    mesh = build_mesh(bounds, max_edge=0.25, margin=0.1)
    proj = projection_point(mesh, coords, p=15)
    spec = ModelSpec(
        model="psfofr",
        domain_kind="continuous",
        mcmc=McmcSpec(iters=20000, burnin=10000, thin=10, seed=2),
    )
    draws = fit_psfofr(coef, proj, spec=spec)
    summ = summarize_surface(draws, sim.basis, sim.basis, alphas=(0.05,))
    mse = score_surface(summ.mean, sim.psi_formula)

    dead = sim.psi_formula.values == 0
    assert dead.any()
    overlap = float((summ.significance[0.05][dead] == 0).mean())
    print(f"surface error {mse:.5f}, dead-zone overlap {overlap:.3f}")
    assert mse <= 0.01
    assert overlap >= 0.90
