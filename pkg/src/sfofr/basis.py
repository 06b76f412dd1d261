"""Orthonormal basis systems on an interval and tensor-product surfaces.

A basis system is a matrix of basis functions evaluated on a shared grid,
orthonormal under a discrete weighted L2 inner product.  The weights are
cell widths: each grid point owns the half-open interval reaching halfway
to its neighbors, clipped to the domain, so the weights always sum to the
domain length and reduce to trapezoid weights when the grid spans the
domain exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline

from .errors import DimensionError, RankDeficiencyError

GRAM_TOL = 1e-8


def cell_weights(domain: tuple[float, float], grid: np.ndarray) -> np.ndarray:
    """Quadrature weights assigning each grid point its cell within the domain.

    Parameters
    ----------
    domain : (float, float)
        Closed interval ``(a, b)`` with ``a < b``.
    grid : ndarray
        Strictly increasing points inside the domain.

    Returns
    -------
    ndarray
        Nonnegative weights of the same length as ``grid`` summing to ``b - a``.
    """
    a, b = float(domain[0]), float(domain[1])
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise DimensionError("grid must be a one-dimensional sequence")
    if not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    if a >= b:
        raise ValueError(f"domain must satisfy a < b, got ({a}, {b})")
    if grid[0] < a or grid[-1] > b:
        raise ValueError("grid must lie inside the domain")
    if grid.size == 1:
        return np.array([b - a])
    mids = 0.5 * (grid[1:] + grid[:-1])
    edges = np.concatenate([[a], mids, [b]])
    return np.diff(edges)


@dataclass(frozen=True)
class BasisSystem:
    """Orthonormal basis functions evaluated on a grid.

    Attributes
    ----------
    family : str
        One of ``"bspline"``, ``"fourier"``, ``"fpc"``.
    n_basis : int
        Number of basis functions (rows of ``values``).
    domain : (float, float)
        Interval the functions live on.
    grid : ndarray
        Evaluation points, strictly increasing, inside ``domain``.
    values : ndarray
        ``n_basis x len(grid)`` matrix, row k is basis function k on the grid.
    quad_weights : ndarray
        Discrete L2 weights; ``values @ diag(w) @ values.T`` is the identity.
    """

    family: str
    n_basis: int
    domain: tuple[float, float]
    grid: np.ndarray
    values: np.ndarray
    quad_weights: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.values.shape != (self.n_basis, self.grid.size):
            raise DimensionError(
                f"values shape {self.values.shape} does not match "
                f"(n_basis, grid) = ({self.n_basis}, {self.grid.size})"
            )
        if self.quad_weights.shape != self.grid.shape:
            raise DimensionError("quad_weights must align with grid")
        resid = np.abs(gram(self.values, self.quad_weights) - np.eye(self.n_basis)).max()
        if resid >= GRAM_TOL:
            raise ValueError(f"basis not orthonormal: Gram residual {resid:.3e}")


@dataclass(frozen=True)
class TensorSurface:
    """A function of two arguments tabulated on a rectangular grid."""

    r_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != (self.r_grid.size, self.t_grid.size):
            raise DimensionError(
                f"surface values shape {self.values.shape} does not match "
                f"grids ({self.r_grid.size}, {self.t_grid.size})"
            )


def gram(values: np.ndarray, quad_weights: np.ndarray) -> np.ndarray:
    """Weighted Gram matrix ``values @ diag(w) @ values.T``."""
    return (values * quad_weights) @ values.T


def orthonormalize(raw: np.ndarray, quad_weights: np.ndarray) -> np.ndarray:
    """Orthonormalize rows of ``raw`` under the weighted inner product.

    Uses a QR factorization of the weighted row matrix.  The output rows
    span the same space as the input rows.  Signs are fixed so that each
    output row has positive weighted inner product with its raw
    counterpart, which makes the result reproducible across platforms.

    Raises
    ------
    RankDeficiencyError
        If the rows are numerically dependent; the message reports the
        numerical rank.
    """
    raw = np.asarray(raw, dtype=float)
    w = np.asarray(quad_weights, dtype=float)
    if raw.ndim != 2:
        raise DimensionError("raw must be a 2-d matrix of rows")
    if w.shape != (raw.shape[1],):
        raise DimensionError("quad_weights length must equal the row length")
    _, r = np.linalg.qr((raw * np.sqrt(w)).T)
    diag = np.abs(np.diag(r))
    scale = diag.max() if diag.size else 0.0
    rank = int(np.sum(diag > 1e-12 * max(scale, 1e-300)))
    if rank < raw.shape[0]:
        raise RankDeficiencyError(
            f"rows are numerically dependent: rank {rank} < {raw.shape[0]}"
        )
    sgn = np.sign(np.diag(r))
    r = r * sgn[:, None]
    # rows of the result satisfy result @ diag(w) @ raw.T = R.T with positive diagonal
    return np.linalg.solve(r.T, raw)


def make_bspline(
    domain: tuple[float, float],
    n_basis: int,
    order: int = 4,
    grid: np.ndarray | None = None,
) -> BasisSystem:
    """B-spline basis with equally spaced interior knots, orthonormalized.

    Parameters
    ----------
    domain : (float, float)
        Support interval; boundary knots get full multiplicity ``order``.
    n_basis : int
        Number of basis functions, at least ``order``.
    order : int
        Spline order (degree + 1); 4 gives cubic splines.
    grid : ndarray
        Evaluation points inside the domain.
    """
    if grid is None:
        raise ValueError("grid is required")
    grid = np.asarray(grid, dtype=float)
    if order < 2:
        raise ValueError(f"order must be >= 2, got {order}")
    if n_basis < order:
        raise ValueError(f"n_basis must be >= order, got {n_basis} < {order}")
    if grid.size < n_basis:
        raise RankDeficiencyError(
            f"grid has {grid.size} points, fewer than n_basis = {n_basis}"
        )
    w = cell_weights(domain, grid)
    a, b = float(domain[0]), float(domain[1])
    interior = np.linspace(a, b, n_basis - order + 2)[1:-1]
    knots = np.concatenate([np.full(order, a), interior, np.full(order, b)])
    design = BSpline.design_matrix(grid, knots, order - 1, extrapolate=False)
    raw = design.toarray().T
    values = orthonormalize(raw, w)
    return BasisSystem("bspline", n_basis, (a, b), grid, values, w, {"order": order})


def make_fourier(
    domain: tuple[float, float],
    n_basis: int,
    grid: np.ndarray | None = None,
) -> BasisSystem:
    """Fourier basis: constant plus sin/cos pairs, orthonormalized.

    ``n_basis`` must be odd (one constant plus whole sin/cos pairs).  Rows
    are ordered constant, sin(1), cos(1), sin(2), cos(2), ...  Residual
    non-orthonormality on the discrete grid is removed by
    :func:`orthonormalize`.
    """
    if grid is None:
        raise ValueError("grid is required")
    grid = np.asarray(grid, dtype=float)
    if n_basis % 2 == 0:
        raise ValueError(
            f"n_basis must be odd for a Fourier system (constant plus "
            f"sin/cos pairs); use n_basis = {n_basis + 1}"
        )
    if grid.size < n_basis:
        raise RankDeficiencyError(
            f"grid has {grid.size} points, fewer than n_basis = {n_basis}"
        )
    a, b = float(domain[0]), float(domain[1])
    w = cell_weights(domain, grid)
    period = b - a
    t = grid - a
    rows = [np.full(grid.size, 1.0 / np.sqrt(period))]
    amp = np.sqrt(2.0 / period)
    for j in range(1, (n_basis - 1) // 2 + 1):
        arg = 2.0 * np.pi * j * t / period
        rows.append(amp * np.sin(arg))
        rows.append(amp * np.cos(arg))
    values = orthonormalize(np.vstack(rows), w)
    return BasisSystem("fourier", n_basis, (a, b), grid, values, w)


def make_fpc(
    curves: np.ndarray,
    n_components: int,
    grid: np.ndarray | None = None,
    domain: tuple[float, float] | None = None,
) -> BasisSystem:
    """Functional principal component basis from observed curves.

    Rows are the leading eigenfunctions of the empirical covariance of the
    centered curves under the weighted inner product, ordered by
    non-increasing eigenvalue.  Each row's sign is fixed so its
    largest-magnitude entry is positive.

    Raises
    ------
    RankDeficiencyError
        If ``n_components`` exceeds the covariance rank; the message names
        the achievable rank.
    """
    curves = np.asarray(curves, dtype=float)
    if grid is None:
        raise ValueError("grid is required")
    grid = np.asarray(grid, dtype=float)
    if curves.ndim != 2 or curves.shape[1] != grid.size:
        raise DimensionError("curves must be n x len(grid)")
    n = curves.shape[0]
    if n < n_components:
        raise RankDeficiencyError(
            f"{n} curves cannot support {n_components} components"
        )
    if domain is None:
        domain = (float(grid[0]), float(grid[-1]))
    w = cell_weights(domain, grid)
    centered = curves - curves.mean(axis=0)
    cov = centered.T @ centered / max(n - 1, 1)
    sqw = np.sqrt(w)
    sym = (cov * sqw[None, :]) * sqw[:, None]
    eigval, eigvec = np.linalg.eigh(sym)
    order = np.argsort(-eigval, kind="stable")
    eigval = eigval[order]
    rank = int(np.sum(eigval > max(eigval[0], 0.0) * 1e-12)) if eigval.size else 0
    if n_components > rank:
        raise RankDeficiencyError(
            f"requested {n_components} components but the covariance has "
            f"numerical rank {rank}"
        )
    comps = (eigvec[:, order[:n_components]] / sqw[:, None]).T
    flip = np.sign(comps[np.arange(n_components), np.argmax(np.abs(comps), axis=1)])
    comps = comps * flip[:, None]
    return BasisSystem(
        "fpc",
        n_components,
        domain,
        grid,
        comps,
        w,
        {"eigenvalues": eigval[:n_components]},
    )


def fpc_count_for_variance(
    curves: np.ndarray,
    grid: np.ndarray,
    share: float = 0.9,
    domain: tuple[float, float] | None = None,
) -> int:
    """Smallest number of principal components explaining ``share`` of variance."""
    curves = np.asarray(curves, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if domain is None:
        domain = (float(grid[0]), float(grid[-1]))
    w = cell_weights(domain, grid)
    centered = curves - curves.mean(axis=0)
    cov = centered.T @ centered / max(curves.shape[0] - 1, 1)
    sqw = np.sqrt(w)
    eigval = np.linalg.eigvalsh((cov * sqw[None, :]) * sqw[:, None])[::-1]
    eigval = np.clip(eigval, 0.0, None)
    total = eigval.sum()
    if total <= 0:
        raise ValueError("curves have no variance")
    frac = np.cumsum(eigval) / total
    return int(np.searchsorted(frac, share) + 1)


def tensor_surface(
    xi: BasisSystem, phi: BasisSystem, coeff: np.ndarray
) -> TensorSurface:
    """Assemble the surface ``xi.values.T @ coeff @ phi.values`` on the grids."""
    coeff = np.asarray(coeff, dtype=float)
    if coeff.shape != (xi.n_basis, phi.n_basis):
        raise DimensionError(
            f"coeff shape {coeff.shape} does not match bases "
            f"({xi.n_basis}, {phi.n_basis})"
        )
    vals = xi.values.T @ coeff @ phi.values
    return TensorSurface(xi.grid, phi.grid, vals)


def project_surface(xi: BasisSystem, phi: BasisSystem, values: np.ndarray) -> np.ndarray:
    """Weighted L2 projection of a tabulated surface onto the tensor basis.

    Returns the coefficient matrix ``c`` minimizing the weighted squared
    error of ``xi.values.T @ c @ phi.values`` against ``values``.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (xi.grid.size, phi.grid.size):
        raise DimensionError("surface values do not match the basis grids")
    return (xi.values * xi.quad_weights) @ values @ (phi.values * phi.quad_weights).T


def write_surface_csv(path: str, surface: TensorSurface) -> None:
    """Write a surface in long format: one r,t,value row per grid point."""
    with open(path, "w", newline="") as fh:
        fh.write("r,t,value\n")
        for i, r in enumerate(surface.r_grid):
            for j, t in enumerate(surface.t_grid):
                fh.write(
                    f"{float(r)!r},{float(t)!r},{float(surface.values[i, j])!r}\n"
                )


def read_surface_csv(path: str) -> TensorSurface:
    """Read a long-format surface CSV back into a TensorSurface."""
    import csv as _csv

    with open(path, newline="") as fh:
        rows = list(_csv.reader(fh))
    if not rows or rows[0] != ["r", "t", "value"]:
        raise ValueError(f"{path}: expected header r,t,value")
    r_vals = sorted({float(row[0]) for row in rows[1:]})
    t_vals = sorted({float(row[1]) for row in rows[1:]})
    r_index = {v: i for i, v in enumerate(r_vals)}
    t_index = {v: j for j, v in enumerate(t_vals)}
    values = np.full((len(r_vals), len(t_vals)), np.nan)
    for row in rows[1:]:
        values[r_index[float(row[0])], t_index[float(row[1])]] = float(row[2])
    if np.any(np.isnan(values)):
        raise ValueError(f"{path}: surface grid is incomplete")
    return TensorSurface(
        r_grid=np.array(r_vals), t_grid=np.array(t_vals), values=values
    )


def write_basis_csv(basis: BasisSystem, path: str) -> None:
    """Write a basis matrix as CSV: header row of grid points, one row per function."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([repr(float(g)) for g in basis.grid])
        for row in basis.values:
            writer.writerow([repr(float(v)) for v in row])


def read_basis_csv(path: str, family: str, domain: tuple[float, float]) -> BasisSystem:
    """Reload a basis written by :func:`write_basis_csv`.

    Quadrature weights are recomputed from the grid and domain, which is
    how they were derived in the first place.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    grid = np.array([float(v) for v in rows[0]])
    values = np.array([[float(v) for v in r] for r in rows[1:]])
    w = cell_weights(domain, grid)
    return BasisSystem(family, values.shape[0], domain, grid, values, w)
