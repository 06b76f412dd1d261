"""Spatial dependence structures and diagnostics.

Continuous domains use a Matern covariance over point coordinates;
discrete domains use an intrinsic autoregressive precision built from a
binary adjacency matrix.  Diagnostics cover Moran's I with a permutation
test and the trace-variogram of curve collections.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial.distance import cdist
from scipy.special import gamma as gamma_fn
from scipy.special import kv

from .basis import cell_weights
from .errors import DimensionError


@dataclass(frozen=True)
class SpatialStructure:
    """Either point coordinates or an adjacency graph for n sites.

    Exactly one of ``coords`` (continuous domains) and ``adjacency``
    (discrete domains) is set.
    """

    kind: str
    coords: np.ndarray | None = None
    adjacency: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind == "continuous":
            if self.coords is None or self.adjacency is not None:
                raise ValueError("continuous structure needs coords only")
            if self.coords.ndim != 2 or self.coords.shape[1] != 2:
                raise DimensionError("coords must be n x 2")
            if not np.all(np.isfinite(self.coords)):
                raise ValueError("coords must be finite")
        elif self.kind == "discrete":
            if self.adjacency is None or self.coords is not None:
                raise ValueError("discrete structure needs adjacency only")
            validate_adjacency(self.adjacency)
        else:
            raise ValueError(f"unknown spatial kind {self.kind!r}")

    @property
    def n_sites(self) -> int:
        if self.coords is not None:
            return self.coords.shape[0]
        return self.adjacency.shape[0]


def validate_adjacency(D: np.ndarray) -> None:
    """Check that D is symmetric, binary, zero-diagonal; warn if disconnected."""
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise DimensionError("adjacency must be square")
    if not np.array_equal(D, D.T):
        raise ValueError("adjacency must be symmetric")
    if not np.all((D == 0) | (D == 1)):
        raise ValueError("adjacency must be binary")
    if np.any(np.diag(D) != 0):
        raise ValueError("adjacency must have a zero diagonal")
    if not _connected(D):
        warnings.warn("adjacency graph is not connected", stacklevel=3)


def _connected(D: np.ndarray) -> bool:
    n = D.shape[0]
    if n == 0:
        return True
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in np.nonzero(D[i])[0]:
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return bool(seen.all())


def matern_cov(
    coords: np.ndarray,
    sigma2: float,
    rho: float,
    smoothness: float = 0.5,
) -> np.ndarray:
    """Matern covariance matrix over pairwise distances.

    Uses the classical form ``sigma2 * 2^(1-v)/Gamma(v) * (d/rho)^v K_v(d/rho)``
    with ``matern(0) = 1``; smoothness 0.5 reduces to ``sigma2 * exp(-d/rho)``.
    A jitter of ``1e-8 * sigma2`` is added to the diagonal so the result
    passes a Cholesky factorization.
    """
    if sigma2 <= 0 or rho <= 0 or smoothness <= 0:
        raise ValueError("sigma2, rho, smoothness must be positive")
    coords = np.asarray(coords, dtype=float)
    d = cdist(coords, coords)
    if not np.all(np.isfinite(d)):
        raise ValueError("non-finite distances")
    if smoothness == 0.5:
        corr = np.exp(-d / rho)
    else:
        scaled = d / rho
        corr = np.ones_like(d)
        pos = scaled > 0
        x = scaled[pos]
        corr[pos] = (
            (2.0 ** (1.0 - smoothness) / gamma_fn(smoothness))
            * x**smoothness
            * kv(smoothness, x)
        )
    cov = sigma2 * corr
    cov[np.diag_indices_from(cov)] += 1e-8 * sigma2
    return cov


def icar_precision(D: np.ndarray) -> np.ndarray:
    """Intrinsic autoregressive precision ``diag(D 1) - D``.

    Symmetric positive semidefinite with the constant vector in its null
    space; ``x.T @ Q @ x`` equals the sum of squared differences across
    edges.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise DimensionError("adjacency must be square")
    if not np.array_equal(D, D.T):
        raise ValueError("adjacency must be symmetric")
    return np.diag(D.sum(axis=1)) - D


def morans_i(
    residuals: np.ndarray,
    D: np.ndarray,
    n_permutations: int = 999,
    seed: int | None = None,
) -> tuple[float, float]:
    """Moran's I with a two-sided permutation p-value.

    ``I = (n / S0) * (e' D e) / (e' e)`` for centered residuals e and
    ``S0`` the total edge weight.  The p-value compares the observed
    deviation from the null mean ``-1/(n-1)`` against ``n_permutations``
    random relabelings.
    """
    e = np.asarray(residuals, dtype=float)
    D = np.asarray(D, dtype=float)
    n = e.size
    if D.shape != (n, n):
        raise DimensionError("adjacency must be n x n")
    e = e - e.mean()
    denom = float(e @ e)
    if denom == 0.0:
        raise ValueError("residuals are constant; Moran's I is undefined")
    s0 = D.sum()
    if s0 == 0:
        raise ValueError("adjacency has no edges")

    def stat(v: np.ndarray) -> float:
        return float(n / s0 * (v @ D @ v) / (v @ v))

    obs = stat(e)
    rng = np.random.default_rng(seed)
    center = -1.0 / (n - 1)
    hits = 0
    for _ in range(n_permutations):
        perm = stat(rng.permutation(e))
        if abs(perm - center) >= abs(obs - center):
            hits += 1
    p = (1 + hits) / (n_permutations + 1)
    return obs, p


def trace_variogram(
    curves: np.ndarray,
    coords: np.ndarray,
    grid: np.ndarray | None = None,
    domain: tuple[float, float] | None = None,
    n_bins: int = 15,
    max_dist: float | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Empirical trace-variogram of curves over point locations.

    For each distance bin, ``gamma(h)`` is half the average integrated
    squared difference between curve pairs at that separation, the
    integral taken with the grid's cell weights.

    Returns
    -------
    (lags, gamma, counts)
        Bin midpoints, variogram estimates, and pair counts.  Empty bins
        are dropped with a warning.
    """
    curves = np.asarray(curves, dtype=float)
    coords = np.asarray(coords, dtype=float)
    n = curves.shape[0]
    if coords.shape[0] != n:
        raise DimensionError("curves and coords must have matching site counts")
    if n < 2:
        raise ValueError("at least two sites are required")
    if grid is None:
        grid = np.arange(curves.shape[1], dtype=float)
    grid = np.asarray(grid, dtype=float)
    if domain is None:
        domain = (float(grid[0]), float(grid[-1])) if grid.size > 1 else (0.0, 1.0)
    w = cell_weights(domain, grid)

    d = cdist(coords, coords)
    iu, ju = np.triu_indices(n, k=1)
    pair_d = d[iu, ju]
    if max_dist is None:
        max_dist = float(pair_d.max()) / 2.0
    edges = np.linspace(0.0, max_dist, n_bins + 1)
    keep = pair_d <= max_dist
    pd = pair_d[keep]
    diff = curves[iu[keep]] - curves[ju[keep]]
    isq = (diff * diff) @ w

    idx = np.clip(np.searchsorted(edges, pd, side="right") - 1, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=isq, minlength=n_bins)
    mids = 0.5 * (edges[:-1] + edges[1:])
    nonempty = counts > 0
    if not np.all(nonempty):
        warnings.warn(
            f"dropping {int((~nonempty).sum())} empty variogram bins", stacklevel=2
        )
    gamma = sums[nonempty] / (2.0 * counts[nonempty])
    return mids[nonempty], gamma, counts[nonempty]


@dataclass(frozen=True)
class VariogramFit:
    """Fitted parametric variogram: ``gamma(h) = nugget + sill * shape(h/range)``.

    ``gamma(0) = 0`` exactly; the nugget is the jump as h -> 0+.  Keeping
    the zero on the diagonal is what lets the nugget regularize kriging
    systems.
    """

    nugget: float
    sill: float
    range_: float
    family: str

    def __call__(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        if self.family == "exponential":
            rise = 1.0 - np.exp(-h / self.range_)
        elif self.family == "gaussian":
            rise = 1.0 - np.exp(-((h / self.range_) ** 2))
        else:
            raise ValueError(f"unknown variogram family {self.family!r}")
        return np.where(h > 0, self.nugget + self.sill * rise, 0.0)


def fit_variogram(
    lags: np.ndarray,
    gamma: np.ndarray,
    counts: np.ndarray,
    family: str = "gaussian",
) -> VariogramFit:
    """Weighted least squares fit of a parametric variogram model.

    Pair counts weight the squared errors.  For a trial range the nugget
    and sill solve a 2 x 2 linear system with nonnegativity enforced; the
    range minimizes the profiled objective on a bounded interval.
    """
    lags = np.asarray(lags, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if family not in ("gaussian", "exponential"):
        raise ValueError(f"unknown variogram family {family!r}")
    if lags.size < 2:
        raise ValueError("need at least two lags to fit a variogram")

    def rise(r: float) -> np.ndarray:
        if family == "exponential":
            return 1.0 - np.exp(-lags / r)
        return 1.0 - np.exp(-((lags / r) ** 2))

    def profile(r: float) -> tuple[float, float, float]:
        x = rise(r)
        # weighted LS for gamma ~ nugget + sill * x, clamped to be nonnegative
        ws = counts
        a = np.array(
            [
                [ws.sum(), float(ws @ x)],
                [float(ws @ x), float(ws @ (x * x))],
            ]
        )
        b = np.array([float(ws @ gamma), float(ws @ (x * gamma))])
        try:
            nugget, sill = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            nugget, sill = 0.0, float(ws @ (x * gamma)) / max(float(ws @ (x * x)), 1e-300)
        if nugget < 0.0:
            nugget = 0.0
            sill = float(ws @ (x * gamma)) / max(float(ws @ (x * x)), 1e-300)
        if sill < 0.0:
            sill = 0.0
            nugget = max(float(ws @ gamma) / ws.sum(), 0.0)
        sse = float(ws @ (gamma - nugget - sill * x) ** 2)
        return sse, nugget, sill

    hi = float(lags.max()) * 3.0
    lo = float(lags.max()) * 1e-3
    res = minimize_scalar(
        lambda r: profile(r)[0], bounds=(lo, hi), method="bounded",
        options={"xatol": hi * 1e-6},
    )
    r_best = float(res.x)
    _, nugget, sill = profile(r_best)
    return VariogramFit(nugget, sill, r_best, family)


def write_variogram_csv(
    path: str,
    lags: np.ndarray,
    gamma: np.ndarray,
    counts: np.ndarray,
    fit: VariogramFit | None = None,
) -> None:
    """Write the empirical (and optionally fitted) variogram as CSV."""
    fitted = fit(lags) if fit is not None else np.full(lags.shape, np.nan)
    with open(path, "w", newline="") as fh:
        fh.write("lag,gamma,n_pairs,fitted_gamma\n")
        for row in zip(lags, gamma, counts, fitted):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
