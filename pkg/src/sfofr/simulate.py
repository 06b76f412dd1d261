"""Synthetic spatial functional datasets with closed-form truth.

Locations are uniform on the unit square; covariate coefficients are
Normal around each site's x coordinate; latent-effect coefficients are
iid columns of a Matern Gaussian process over the sites; the response
coefficients follow the basis-space regression with the true surface's
projection onto the tensor basis.  Curves live on the integer grid
1..225 and are exactly representable in the generating basis.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .basis import (
    BasisSystem,
    TensorSurface,
    make_bspline,
    project_surface,
    tensor_surface,
    write_surface_csv,
)
from .curves import (
    FunctionalDataset,
    write_curves_csv,
    write_locations_csv,
)
from .errors import ConfigError
from .spatial import SpatialStructure, matern_cov

N_GRID = 225
DOMAIN = (1.0, 225.0)
STREAM_NAMES = ("locations", "x", "w", "eps", "split")


def true_psi_gaussian(r, t):
    """Diagonal Gaussian ridge on [0,225]^2.

    (7/500) / sqrt(0.006 pi) * exp(-((t-r)/225)^2 / 0.006); peaks at
    about 0.10197 along t = r and decays to zero off the diagonal.
    """
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    amp = (7.0 / 500.0) / np.sqrt(0.006 * np.pi)
    return amp * np.exp(-(((t - r) / 225.0) ** 2) / 0.006)


def true_psi_complex(r, t):
    """Soft-thresholded oscillatory surface on [0,225]^2.

    The raw surface is evaluated in unit-square coordinates (r/225,
    t/225) so its oscillations are resolved on the curve grid:
    (1/10)(sin(10u)cos(10v) + exp(-5(u^2+v^2)) + 0.5 sin(5(u+v))).
    Values within 0.03 of zero are zeroed and the rest shrink toward
    zero by 0.03, leaving a continuous surface with a flat dead zone.
    """
    u = np.asarray(r, dtype=float) / 225.0
    v = np.asarray(t, dtype=float) / 225.0
    raw = (
        np.sin(10.0 * u) * np.cos(10.0 * v)
        + np.exp(-5.0 * (u**2 + v**2))
        + 0.5 * np.sin(5.0 * (u + v))
    ) / 10.0
    return np.sign(raw) * np.maximum(np.abs(raw) - 0.03, 0.0)


TRUE_PSI = {"gaussian": true_psi_gaussian, "complex": true_psi_complex}


@dataclass(frozen=True)
class SimConfig:
    """Generator settings; defaults follow the reference simulation."""

    n: int = 1000
    seed: int = 0
    n_basis: int = 15
    sigma2_w: float = 0.5
    range_w: float = 0.2
    smoothness_w: float = 0.5
    tau2: float = 0.01
    psi: str = "gaussian"
    train_frac: float = 0.7

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ConfigError("need at least 2 sites")
        if self.psi not in TRUE_PSI:
            raise ConfigError(f"unknown true surface {self.psi!r}")
        if not 0.0 < self.train_frac < 1.0:
            raise ConfigError("train_frac must be strictly between 0 and 1")
        if self.tau2 < 0 or self.sigma2_w < 0:
            raise ConfigError("variances must be nonnegative")
        if self.range_w <= 0 or self.smoothness_w <= 0:
            raise ConfigError("range and smoothness must be positive")
        if self.n_basis < 4:
            raise ConfigError("n_basis must be at least the spline order (4)")


@dataclass(frozen=True, eq=False)
class SimulationResult:
    """Generated train/test datasets plus every layer of ground truth."""

    train: FunctionalDataset
    test: FunctionalDataset
    basis: BasisSystem
    psi_coef: np.ndarray
    psi_surface: TensorSurface
    psi_formula: TensorSurface
    train_idx: np.ndarray
    test_idx: np.ndarray
    config: SimConfig


def _streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
    return {
        name: np.random.Generator(np.random.Philox(ss))
        for name, ss in zip(STREAM_NAMES, children)
    }


def generate(config: SimConfig) -> SimulationResult:
    """Draw one dataset; the same config yields bit-identical output."""
    rngs = _streams(config.seed)
    n, nb = config.n, config.n_basis
    grid = np.arange(1.0, N_GRID + 1.0)
    basis = make_bspline(DOMAIN, nb, grid=grid)

    locations = rngs["locations"].uniform(size=(n, 2))
    x_coef = locations[:, :1] + rngs["x"].standard_normal((n, nb))

    if config.sigma2_w > 0:
        cov = matern_cov(
            locations, config.sigma2_w, config.range_w, config.smoothness_w
        )
        w_coef = np.linalg.cholesky(cov) @ rngs["w"].standard_normal((n, nb))
    else:
        w_coef = np.zeros((n, nb))

    true_fn = TRUE_PSI[config.psi]
    formula_values = true_fn(grid[:, None], grid[None, :])
    psi_coef = project_surface(basis, basis, formula_values)
    eps = np.sqrt(config.tau2) * rngs["eps"].standard_normal((n, nb))
    y_coef = x_coef @ psi_coef + w_coef + eps

    y_curves = y_coef @ basis.values
    x_curves = x_coef @ basis.values

    n_train = int(round(config.train_frac * n))
    n_train = min(max(n_train, 1), n - 1)
    perm = rngs["split"].permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    ids = np.array([f"site{i + 1:05d}" for i in range(n)])

    def subset(idx: np.ndarray) -> FunctionalDataset:
        return FunctionalDataset(
            response_curves=y_curves[idx],
            covariate_curves=x_curves[idx],
            t_grid=grid,
            r_grid=grid,
            spatial=SpatialStructure(kind="continuous", coords=locations[idx]),
            ids=tuple(ids[idx]),
        )

    return SimulationResult(
        train=subset(train_idx),
        test=subset(test_idx),
        basis=basis,
        psi_coef=psi_coef,
        psi_surface=tensor_surface(basis, basis, psi_coef),
        psi_formula=TensorSurface(r_grid=grid, t_grid=grid, values=formula_values),
        train_idx=train_idx,
        test_idx=test_idx,
        config=config,
    )


def write_dataset(result: SimulationResult, outdir: str) -> None:
    """Lay a simulation out as the CSV directory the CLI consumes.

    train/ and test/ hold response, covariate, and location files;
    truth/ holds the generating coefficients and both true surfaces.
    """
    for sub in ("train", "test", "truth"):
        os.makedirs(os.path.join(outdir, sub), exist_ok=True)
    for name, ds in (("train", result.train), ("test", result.test)):
        base = os.path.join(outdir, name)
        write_curves_csv(
            os.path.join(base, "response.csv"), ds.t_grid, ds.ids, ds.response_curves
        )
        write_curves_csv(
            os.path.join(base, "covariate.csv"), ds.r_grid, ds.ids, ds.covariate_curves
        )
        write_locations_csv(
            os.path.join(base, "locations.csv"), ds.ids, ds.spatial.coords
        )
    truth = os.path.join(outdir, "truth")
    with open(os.path.join(truth, "psi_coef.csv"), "w") as fh:
        for row in result.psi_coef:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    write_surface_csv(os.path.join(truth, "psi_surface.csv"), result.psi_surface)
    write_surface_csv(os.path.join(truth, "psi_formula.csv"), result.psi_formula)
    meta = {
        "config": asdict(result.config),
        "domain": list(DOMAIN),
        "n_grid": N_GRID,
        "basis_family": "bspline",
        "train_sites": len(result.train.ids),
        "test_sites": len(result.test.ids),
    }
    with open(os.path.join(outdir, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
