"""Data-space inference from basis-space draws.

Each draw's coefficient matrix maps to a surface on the (r, t) grid;
summaries stream over draws in chunks so the full draw-by-grid cube is
never materialized.  Simultaneous bands and SimBaS come from the same
sorted max-deviation statistics, so their duality is exact.  Kriging
propagates draws to new sites and wraps per-site simultaneous bands
around the predictive curves.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtri

from .basis import BasisSystem, TensorSurface
from .errors import CapabilityError, ConfigError, DimensionError
from .sampler import PosteriorDraws
from .spatial import matern_cov

EPS_SD = 1e-12
CHUNK = 32


@dataclass(frozen=True, eq=False)
class SurfaceSummary:
    """Posterior surface with simultaneous-inference layers."""

    mean: TensorSurface
    sd: TensorSurface
    m_alpha: dict[float, float]
    lower: dict[float, TensorSurface]
    upper: dict[float, TensorSurface]
    simbas: TensorSurface
    significance: dict[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class KrigingResult:
    """Predictive curves at q new sites with per-site simultaneous bands."""

    ids: tuple[str, ...] | None
    coords: np.ndarray | None
    t_grid: np.ndarray
    mean_curves: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    alpha: float
    predictive_draws: np.ndarray | None = None

    def __post_init__(self) -> None:
        q, n_t = self.mean_curves.shape
        if self.t_grid.shape != (n_t,):
            raise DimensionError("t_grid must match curve columns")
        if self.lower.shape != (q, n_t) or self.upper.shape != (q, n_t):
            raise DimensionError("bands must match mean_curves")
        if np.any(self.lower > self.mean_curves) or np.any(
            self.upper < self.mean_curves
        ):
            raise ValueError("bands must bracket the mean curves")


def _surface_chunks(psi_draws: np.ndarray, xi: BasisSystem, phi: BasisSystem):
    """Yield (start, surfaces) blocks of draw surfaces Xi' psi Phi."""
    xi_t = np.ascontiguousarray(xi.values.T)
    for start in range(0, psi_draws.shape[0], CHUNK):
        block = psi_draws[start : start + CHUNK]
        tmp = block @ phi.values
        yield start, xi_t[None, :, :] @ tmp


def _check_draw_count(u: int, alphas) -> None:
    if u < 50:
        warnings.warn(
            f"only {u} draws; simultaneous bands are unreliable below 50 draws",
            UserWarning,
            stacklevel=3,
        )
    for alpha in alphas:
        if not 0.0 < alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
        if u * alpha < 1.0:
            raise ValueError(
                f"{u} draws cannot resolve the {alpha} quantile (need U*alpha >= 1)"
            )


def _band_index(u: int, alpha: float) -> int:
    return int(np.ceil((1.0 - alpha) * u)) - 1


def summarize_surface(
    draws: PosteriorDraws,
    xi: BasisSystem,
    phi: BasisSystem,
    alphas: tuple[float, ...] = (0.05,),
) -> SurfaceSummary:
    """Mean, SD, simultaneous bands, SimBaS, and significance masks.

    The band half-width at level alpha is M_alpha * SD with M_alpha the
    empirical (1 - alpha) quantile of each draw's largest standardized
    deviation from the mean surface.  SimBaS at a grid point is the
    share of draws whose deviation statistic exceeds that point's
    |mean|/SD, so a point is inside the alpha band exactly when its
    SimBaS value is at least alpha.
    """
    psi_draws = draws.psi
    u = psi_draws.shape[0]
    if psi_draws.shape[1] != xi.n_basis or psi_draws.shape[2] != phi.n_basis:
        raise DimensionError("draw dimensions must match the basis systems")
    _check_draw_count(u, alphas)

    shape = (xi.grid.size, phi.grid.size)
    total = np.zeros(shape)
    total_sq = np.zeros(shape)
    for _, surf in _surface_chunks(psi_draws, xi, phi):
        total += surf.sum(axis=0)
        total_sq += np.sum(surf * surf, axis=0)
    mean = total / u
    var = np.maximum(total_sq - u * mean * mean, 0.0) / (u - 1)
    sd = np.maximum(np.sqrt(var), EPS_SD)

    z = np.empty(u)
    for start, surf in _surface_chunks(psi_draws, xi, phi):
        dev = np.abs(surf - mean[None]) / sd[None]
        z[start : start + surf.shape[0]] = dev.max(axis=(1, 2))
    z_sorted = np.sort(z)

    ratio = np.abs(mean) / sd
    exceed = u - np.searchsorted(z_sorted, ratio.ravel(), side="left")
    simbas = (exceed / u).reshape(shape)

    r_grid, t_grid = xi.grid, phi.grid
    m_alpha: dict[float, float] = {}
    lower: dict[float, TensorSurface] = {}
    upper: dict[float, TensorSurface] = {}
    significance: dict[float, np.ndarray] = {}
    for alpha in alphas:
        m = float(z_sorted[_band_index(u, alpha)])
        lo, hi = mean - m * sd, mean + m * sd
        m_alpha[alpha] = m
        lower[alpha] = TensorSurface(r_grid=r_grid, t_grid=t_grid, values=lo)
        upper[alpha] = TensorSurface(r_grid=r_grid, t_grid=t_grid, values=hi)
        mask = np.zeros(shape, dtype=int)
        mask[lo > 0] = 1
        mask[hi < 0] = -1
        significance[alpha] = mask

    return SurfaceSummary(
        mean=TensorSurface(r_grid=r_grid, t_grid=t_grid, values=mean),
        sd=TensorSurface(r_grid=r_grid, t_grid=t_grid, values=sd),
        m_alpha=m_alpha,
        lower=lower,
        upper=upper,
        simbas=TensorSurface(r_grid=r_grid, t_grid=t_grid, values=simbas),
        significance=significance,
    )


def contour_avoiding(
    draws: PosteriorDraws,
    xi: BasisSystem,
    phi: BasisSystem,
    alpha: float = 0.05,
) -> tuple[np.ndarray, TensorSurface]:
    """Contour-avoidance mask at reference level zero.

    Per grid point: the larger of the shares of draws above and below
    zero, clamped to [1/U, 1 - 1/U], sets one-sided limits through the
    standard normal quantile scaled by the draw SD; the avoidance
    function F0 is the share of draws inside those limits, and the mask
    flags F0 > 1 - alpha.  Returns (mask, F0 surface).
    """
    psi_draws = draws.psi
    u = psi_draws.shape[0]
    _check_draw_count(u, (alpha,))
    shape = (xi.grid.size, phi.grid.size)

    total = np.zeros(shape)
    total_sq = np.zeros(shape)
    n_pos = np.zeros(shape)
    n_neg = np.zeros(shape)
    for _, surf in _surface_chunks(psi_draws, xi, phi):
        total += surf.sum(axis=0)
        total_sq += np.sum(surf * surf, axis=0)
        n_pos += (surf > 0).sum(axis=0)
        n_neg += (surf < 0).sum(axis=0)
    mean = total / u
    var = np.maximum(total_sq - u * mean * mean, 0.0) / (u - 1)
    sd = np.sqrt(var)

    rho_u = n_pos / u
    rho = np.clip(np.maximum(rho_u, n_neg / u), 1.0 / u, 1.0 - 1.0 / u)
    lower_side = rho_u <= 0.5
    a = np.where(lower_side, -np.inf, sd * ndtri(1.0 - rho))
    b = np.where(lower_side, sd * ndtri(rho), np.inf)

    inside = np.zeros(shape)
    for _, surf in _surface_chunks(psi_draws, xi, phi):
        inside += ((surf >= a[None]) & (surf <= b[None])).sum(axis=0)
    f0 = inside / u
    mask = (f0 > 1.0 - alpha).astype(int)
    return mask, TensorSurface(r_grid=xi.grid, t_grid=phi.grid, values=f0)


def _conditional_w_factors(
    rho: float, train_coords: np.ndarray, star_coords: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Kriging factors of the latent field at new sites.

    Returns (B, L) with conditional mean B @ W and conditional
    covariance (per unit variance) L L'.
    """
    n = train_coords.shape[0]
    both = np.vstack([train_coords, star_coords])
    corr = matern_cov(both, 1.0, rho)
    c_nn = corr[:n, :n]
    c_sn = corr[n:, :n]
    c_ss = corr[n:, n:]
    chol_nn = np.linalg.cholesky(c_nn)
    half = solve_triangular(chol_nn, c_sn.T, lower=True)
    B = solve_triangular(chol_nn.T, half, lower=False).T
    cond = c_ss - half.T @ half
    cond[np.diag_indices_from(cond)] += 1e-10
    return B, np.linalg.cholesky(cond)


def krige(
    draws: PosteriorDraws,
    x_star_coef: np.ndarray,
    phi: BasisSystem,
    proj_star: np.ndarray | None = None,
    train_coords: np.ndarray | None = None,
    star_coords: np.ndarray | None = None,
    alpha: float = 0.05,
    seed: int = 0,
    ids: tuple[str, ...] | None = None,
    include_draws: bool = False,
) -> KrigingResult:
    """Posterior predictive curves at new sites.

    Per draw the basis-space predictor is X* psi (plus P* delta for the
    projected model, or the conditional Gaussian of the latent field for
    the continuous latent model); predictive noise with variance tau2 is
    added and the coefficients expand through phi.  Discrete-domain
    models cannot extrapolate to unobserved units.
    """
    x_star = np.asarray(x_star_coef, dtype=float)
    if x_star.ndim != 2 or x_star.shape[0] < 1:
        raise DimensionError("x_star_coef must be q x g_n")
    if x_star.shape[1] != draws.psi.shape[1]:
        raise DimensionError("x_star_coef columns must match psi rows")
    q = x_star.shape[0]
    u = draws.n_draws
    k = draws.psi.shape[2]
    if k != phi.n_basis:
        raise DimensionError("psi draw columns must match phi.n_basis")

    if draws.domain_kind == "discrete" and draws.model in ("sfofr", "psfofr"):
        raise CapabilityError(
            "prediction at unobserved areal units is not supported; "
            "discrete-domain effects are defined only on the observed graph"
        )
    if draws.model == "psfofr":
        if proj_star is None:
            raise ConfigError("projected-model kriging needs proj_star")
        proj_star = np.asarray(proj_star, dtype=float)
        if proj_star.shape != (q, draws.random_effect.shape[1]):
            raise DimensionError("proj_star must be q x p")
    elif draws.model == "sfofr":
        if train_coords is None or star_coords is None:
            raise ConfigError(
                "latent-model kriging needs train_coords and star_coords"
            )
        train_coords = np.asarray(train_coords, dtype=float)
        star_coords = np.asarray(star_coords, dtype=float)
        if star_coords.shape != (q, 2):
            raise DimensionError("star_coords must be q x 2")
        if train_coords.shape[0] != draws.random_effect.shape[1]:
            raise DimensionError("train_coords must match latent-effect rows")

    n_t = phi.grid.size

    def predictive(pass_rng: np.random.Generator):
        """Yield per-draw predictive curve matrices (q x n_t)."""
        for v in range(u):
            eta = x_star @ draws.psi[v]
            if draws.model == "psfofr":
                eta = eta + proj_star @ draws.random_effect[v]
            elif draws.model == "sfofr":
                B, L = _conditional_w_factors(
                    float(draws.rho[v]), train_coords, star_coords
                )
                w_mean = B @ draws.random_effect[v]
                noise = L @ pass_rng.standard_normal((q, k))
                eta = eta + w_mean + np.sqrt(float(draws.sigma2[v])) * noise
            y_tilde = eta + np.sqrt(float(draws.tau2[v])) * pass_rng.standard_normal(
                (q, k)
            )
            yield y_tilde @ phi.values

    def fresh_rng() -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))

    total = np.zeros((q, n_t))
    total_sq = np.zeros((q, n_t))
    kept = np.empty((u, q, n_t)) if include_draws else None
    for v, curves in enumerate(predictive(fresh_rng())):
        total += curves
        total_sq += curves * curves
        if kept is not None:
            kept[v] = curves
    mean = total / u
    var = np.maximum(total_sq - u * mean * mean, 0.0) / max(u - 1, 1)
    sd = np.maximum(np.sqrt(var), EPS_SD)

    z = np.empty((u, q))
    for v, curves in enumerate(predictive(fresh_rng())):
        z[v] = (np.abs(curves - mean) / sd).max(axis=1)
    z.sort(axis=0)
    idx = min(max(_band_index(u, alpha), 0), u - 1)
    m = z[idx]
    lower = mean - m[:, None] * sd
    upper = mean + m[:, None] * sd

    return KrigingResult(
        ids=ids,
        coords=star_coords,
        t_grid=phi.grid,
        mean_curves=mean,
        lower=lower,
        upper=upper,
        alpha=alpha,
        predictive_draws=kept,
    )


def score(
    predicted: np.ndarray,
    truth: np.ndarray,
    bands: tuple[np.ndarray, np.ndarray] | None = None,
) -> dict:
    """Root mean square prediction error and mean simultaneous coverage.

    mspe = sqrt(mean over curves and grid points of squared error);
    mean_coverage averages, over curves, the fraction of grid points
    whose band contains the truth (None without bands).  Coverage is a
    fraction in [0, 1].
    """
    predicted = np.asarray(predicted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if predicted.shape != truth.shape:
        raise DimensionError("predicted and truth must have matching shapes")
    mspe = float(np.sqrt(np.mean((predicted - truth) ** 2)))
    coverage = None
    if bands is not None:
        lower, upper = bands
        if lower.shape != truth.shape or upper.shape != truth.shape:
            raise DimensionError("bands must match the truth shape")
        inside = (truth >= lower) & (truth <= upper)
        coverage = float(inside.mean(axis=1).mean())
    return {"mspe": mspe, "mean_coverage": coverage}


def score_surface(psi_hat, psi_true) -> float:
    """Root mean square error between two surfaces on one grid."""
    a = psi_hat.values if isinstance(psi_hat, TensorSurface) else np.asarray(psi_hat)
    b = psi_true.values if isinstance(psi_true, TensorSurface) else np.asarray(psi_true)
    if a.shape != b.shape:
        raise DimensionError("surfaces must share a grid")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def write_summary_csv(path: str, summary: SurfaceSummary) -> None:
    """Long-format surface summary: one row per (r, t) grid point."""
    alphas = sorted(summary.m_alpha)
    cols = ["r", "t", "mean", "sd"]
    for alpha in alphas:
        cols += [f"lower_{alpha:g}", f"upper_{alpha:g}"]
    cols.append("simbas")
    cols += [f"significant_{alpha:g}" for alpha in alphas]
    r_grid, t_grid = summary.mean.r_grid, summary.mean.t_grid
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for i, r in enumerate(r_grid):
            for j, t in enumerate(t_grid):
                row = [repr(float(r)), repr(float(t)),
                       repr(float(summary.mean.values[i, j])),
                       repr(float(summary.sd.values[i, j]))]
                for alpha in alphas:
                    row.append(repr(float(summary.lower[alpha].values[i, j])))
                    row.append(repr(float(summary.upper[alpha].values[i, j])))
                row.append(repr(float(summary.simbas.values[i, j])))
                for alpha in alphas:
                    row.append(str(int(summary.significance[alpha][i, j])))
                fh.write(",".join(row) + "\n")


def write_kriging_csv(path: str, result: KrigingResult) -> None:
    """Long-format predictions: one row per site and grid point."""
    q = result.mean_curves.shape[0]
    ids = result.ids if result.ids is not None else tuple(
        f"site{i + 1}" for i in range(q)
    )
    with open(path, "w", newline="") as fh:
        fh.write("site,t,mean,lower,upper\n")
        for i in range(q):
            for j, t in enumerate(result.t_grid):
                fh.write(
                    f"{ids[i]},{float(t)!r},{float(result.mean_curves[i, j])!r},"
                    f"{float(result.lower[i, j])!r},{float(result.upper[i, j])!r}\n"
                )
