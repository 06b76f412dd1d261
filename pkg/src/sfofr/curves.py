"""Functional datasets and basis-space transforms.

A dataset holds densely observed response and covariate curves over
common grids plus the spatial structure of their sites.  Transforms move
curve matrices into coefficient space through weighted inner products
and back through basis expansion, and GCV picks the basis count.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .basis import BasisSystem, make_bspline, make_fourier, make_fpc
from .errors import ConfigError, DimensionError, MissingFileError, SchemaError
from .spatial import SpatialStructure


def _check_grid(grid: np.ndarray, name: str) -> None:
    if grid.ndim != 1 or grid.size < 2:
        raise DimensionError(f"{name} must be a 1-d grid with at least 2 points")
    if not np.all(np.diff(grid) > 0):
        raise ValueError(f"{name} must be strictly increasing")


@dataclass(frozen=True)
class FunctionalDataset:
    """Observed curves Y_i(t), X_i(r) at n spatial sites."""

    response_curves: np.ndarray
    covariate_curves: np.ndarray
    t_grid: np.ndarray
    r_grid: np.ndarray
    spatial: SpatialStructure | None
    ids: tuple[str, ...]

    def __post_init__(self) -> None:
        y, x = self.response_curves, self.covariate_curves
        if y.ndim != 2 or x.ndim != 2:
            raise DimensionError("curve matrices must be 2-d")
        n = y.shape[0]
        if x.shape[0] != n:
            raise DimensionError(
                f"response has {n} rows but covariate has {x.shape[0]}"
            )
        if self.spatial is not None and self.spatial.n_sites != n:
            raise DimensionError(
                f"{n} curves but {self.spatial.n_sites} spatial sites"
            )
        if len(self.ids) != n:
            raise DimensionError(f"{n} curves but {len(self.ids)} ids")
        _check_grid(self.t_grid, "t_grid")
        _check_grid(self.r_grid, "r_grid")
        if y.shape[1] != self.t_grid.size:
            raise DimensionError("response columns must match t_grid length")
        if x.shape[1] != self.r_grid.size:
            raise DimensionError("covariate columns must match r_grid length")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise SchemaError("curves contain missing or non-finite values")

    @property
    def n_sites(self) -> int:
        return self.response_curves.shape[0]


@dataclass(frozen=True)
class CoefficientSet:
    """Basis-space coefficients of a dataset: rows of y_coef are Y-tilde."""

    y_coef: np.ndarray
    x_coef: np.ndarray
    phi: BasisSystem
    xi: BasisSystem

    def __post_init__(self) -> None:
        if self.y_coef.ndim != 2 or self.x_coef.ndim != 2:
            raise DimensionError("coefficient matrices must be 2-d")
        if self.y_coef.shape[0] != self.x_coef.shape[0]:
            raise DimensionError("y_coef and x_coef must have matching rows")
        if self.y_coef.shape[1] != self.phi.n_basis:
            raise DimensionError("y_coef columns must match phi.n_basis")
        if self.x_coef.shape[1] != self.xi.n_basis:
            raise DimensionError("x_coef columns must match xi.n_basis")


def to_basis(
    dataset: FunctionalDataset, phi: BasisSystem, xi: BasisSystem
) -> CoefficientSet:
    """Project curves onto basis systems by weighted inner products.

    ``y_coef[i, k] = sum_t w_t phi_k(t) Y_i(t)`` and analogously for the
    covariate curves against ``xi``.  Basis grids must equal the dataset
    grids.
    """
    if not np.array_equal(phi.grid, dataset.t_grid):
        raise DimensionError("phi grid differs from dataset t_grid")
    if not np.array_equal(xi.grid, dataset.r_grid):
        raise DimensionError("xi grid differs from dataset r_grid")
    y_coef = dataset.response_curves @ (phi.values * phi.quad_weights).T
    x_coef = dataset.covariate_curves @ (xi.values * xi.quad_weights).T
    return CoefficientSet(y_coef=y_coef, x_coef=x_coef, phi=phi, xi=xi)


def from_basis(coef: np.ndarray, phi: BasisSystem) -> np.ndarray:
    """Expand coefficient rows back into curves on the basis grid."""
    coef = np.asarray(coef, dtype=float)
    if coef.ndim == 1:
        coef = coef[None, :]
    if coef.shape[1] != phi.n_basis:
        raise DimensionError(
            f"coefficients have {coef.shape[1]} columns, basis has {phi.n_basis}"
        )
    return coef @ phi.values


def coef_to_basis(curves: np.ndarray, basis: BasisSystem) -> np.ndarray:
    """Weighted projection of a bare curve matrix onto one basis system."""
    curves = np.asarray(curves, dtype=float)
    if curves.ndim == 1:
        curves = curves[None, :]
    if curves.shape[1] != basis.grid.size:
        raise DimensionError("curve columns must match basis grid length")
    return curves @ (basis.values * basis.quad_weights).T


def _build_basis(
    family: str,
    n_basis: int,
    domain: tuple[float, float],
    grid: np.ndarray,
    curves: np.ndarray | None = None,
) -> BasisSystem:
    if family == "bspline":
        return make_bspline(domain, n_basis, grid=grid)
    if family == "fourier":
        return make_fourier(domain, n_basis, grid=grid)
    if family == "fpc":
        if curves is None:
            raise ConfigError("fpc basis needs the curves themselves")
        return make_fpc(curves, n_basis, grid=grid, domain=domain)
    raise ConfigError(f"unknown basis family {family!r}")


def gcv_select(
    curves: np.ndarray,
    grid: np.ndarray,
    family: str,
    candidates: list[int] | np.ndarray,
    domain: tuple[float, float] | None = None,
) -> int:
    """Pick the basis count minimizing pooled GCV error.

    ``GCV(k) = sum_i RSS_i(k) / (n_t (1 - k/n_t)^2)`` where RSS_i is the
    residual sum of squares after projecting curve i onto the k-function
    system.  Ties break toward smaller k.
    """
    curves = np.asarray(curves, dtype=float)
    grid = np.asarray(grid, dtype=float)
    candidates = [int(k) for k in candidates]
    if not candidates:
        raise ConfigError("gcv_select needs at least one candidate")
    n_t = grid.size
    for k in candidates:
        if not 0 < k < n_t:
            raise ConfigError(
                f"candidate {k} must lie strictly between 0 and grid length {n_t}"
            )
    if domain is None:
        domain = (float(grid[0]), float(grid[-1]))

    best_k, best_score = None, np.inf
    for k in sorted(set(candidates)):
        basis = _build_basis(family, k, domain, grid, curves=curves)
        coef = coef_to_basis(curves, basis)
        resid = curves - coef @ basis.values
        rss = float(np.sum(resid * resid))
        score = rss / (n_t * (1.0 - k / n_t) ** 2)
        if score < best_score:
            best_k, best_score = k, score
    return best_k


# CSV layouts: a curve file's first row holds the grid, and each later
# row holds a site id followed by that site's curve values.  Locations
# files have header id,x,y; adjacency files are edge lists of id pairs.


def _require_file(path: str) -> None:
    if not os.path.exists(path):
        raise MissingFileError(f"no such file: {path}")


def _parse_float(cell: str, where: str) -> float:
    cell = cell.strip()
    if not cell:
        raise SchemaError(f"missing value {where}")
    try:
        value = float(cell)
    except ValueError:
        raise SchemaError(f"non-numeric value {cell!r} {where}") from None
    if not np.isfinite(value):
        raise SchemaError(f"non-finite value {cell!r} {where}")
    return value


def read_curves_csv(path: str) -> tuple[np.ndarray, tuple[str, ...], np.ndarray]:
    """Load (grid, ids, values) from a curve CSV."""
    _require_file(path)
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if len(rows) < 2:
        raise SchemaError(f"{path}: need a grid row and at least one curve row")
    grid = np.array(
        [_parse_float(c, f"in grid row of {path}") for c in rows[0]], dtype=float
    )
    ids: list[str] = []
    values = np.empty((len(rows) - 1, grid.size))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != grid.size + 1:
            raise SchemaError(
                f"{path} line {r}: expected id plus {grid.size} values, got "
                f"{len(row)} cells"
            )
        ids.append(row[0].strip())
        values[r - 2] = [
            _parse_float(c, f"at {path} line {r}") for c in row[1:]
        ]
    if len(set(ids)) != len(ids):
        raise SchemaError(f"{path}: duplicate site ids")
    return grid, tuple(ids), values


def write_curves_csv(
    path: str, grid: np.ndarray, ids: tuple[str, ...], values: np.ndarray
) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(repr(float(g)) for g in grid) + "\n")
        for sid, row in zip(ids, values):
            fh.write(sid + "," + ",".join(repr(float(v)) for v in row) + "\n")


def read_locations_csv(path: str) -> tuple[tuple[str, ...], np.ndarray]:
    """Load site coordinates from an id,x,y CSV (header required)."""
    _require_file(path)
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows or [c.strip().lower() for c in rows[0]] != ["id", "x", "y"]:
        raise SchemaError(f"{path}: expected header id,x,y")
    ids: list[str] = []
    coords = np.empty((len(rows) - 1, 2))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise SchemaError(f"{path} line {r}: expected id,x,y")
        ids.append(row[0].strip())
        coords[r - 2, 0] = _parse_float(row[1], f"at {path} line {r}")
        coords[r - 2, 1] = _parse_float(row[2], f"at {path} line {r}")
    if len(set(ids)) != len(ids):
        raise SchemaError(f"{path}: duplicate site ids")
    return tuple(ids), coords


def write_locations_csv(path: str, ids: tuple[str, ...], coords: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("id,x,y\n")
        for sid, (x, y) in zip(ids, coords):
            fh.write(f"{sid},{float(x)!r},{float(y)!r}\n")


def read_adjacency_csv(path: str, ids: tuple[str, ...]) -> np.ndarray:
    """Build the 0/1 adjacency matrix from an edge-list CSV of id pairs."""
    _require_file(path)
    index = {sid: i for i, sid in enumerate(ids)}
    n = len(ids)
    D = np.zeros((n, n))
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    for r, row in enumerate(rows, start=1):
        if len(row) != 2:
            raise SchemaError(f"{path} line {r}: expected an id pair")
        a, b = row[0].strip(), row[1].strip()
        if a == b:
            raise SchemaError(f"{path} line {r}: self edge {a!r}")
        try:
            i, j = index[a], index[b]
        except KeyError as exc:
            raise SchemaError(
                f"{path} line {r}: unknown site id {exc.args[0]!r}"
            ) from None
        D[i, j] = D[j, i] = 1.0
    return D


def write_adjacency_csv(path: str, ids: tuple[str, ...], D: np.ndarray) -> None:
    iu, ju = np.nonzero(np.triu(D, k=1))
    with open(path, "w", newline="") as fh:
        for i, j in zip(iu, ju):
            fh.write(f"{ids[i]},{ids[j]}\n")


def load_dataset(
    response_path: str,
    covariate_path: str,
    locations_path: str | None = None,
    adjacency_path: str | None = None,
) -> FunctionalDataset:
    """Assemble a dataset from curve files plus at most one spatial file.

    Covariate and location rows are aligned to the response file's id
    order; ids present in one file but not another are schema errors.
    With neither spatial file the dataset carries no site structure,
    which suffices for the non-spatial model.
    """
    if locations_path is not None and adjacency_path is not None:
        raise ConfigError("provide at most one of locations or adjacency")
    t_grid, ids, y = read_curves_csv(response_path)
    r_grid, x_ids, x = read_curves_csv(covariate_path)
    if set(x_ids) != set(ids):
        raise SchemaError("response and covariate files list different site ids")
    order = [x_ids.index(sid) for sid in ids]
    x = x[order]

    if locations_path is None and adjacency_path is None:
        spatial = None
    elif locations_path is not None:
        loc_ids, coords = read_locations_csv(locations_path)
        if set(loc_ids) != set(ids):
            raise SchemaError("location file lists different site ids")
        coords = coords[[loc_ids.index(sid) for sid in ids]]
        spatial = SpatialStructure(kind="continuous", coords=coords)
    else:
        D = read_adjacency_csv(adjacency_path, ids)
        spatial = SpatialStructure(kind="discrete", adjacency=D)

    return FunctionalDataset(
        response_curves=y,
        covariate_curves=x,
        t_grid=t_grid,
        r_grid=r_grid,
        spatial=spatial,
        ids=ids,
    )
