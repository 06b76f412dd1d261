"""Trace-variogram universal kriging baseline.

Curves are detrended by ordinary least squares on the drift, the
residual trace variogram is estimated and a parametric model fitted,
and each target solves the variogram-form kriging system

    [ Gamma  X ] [ lambda ]   [ gamma_0 ]
    [  X'    0 ] [  mu    ] = [   x*    ]

whose drift rows enforce unbiasedness.  Predictions are the weighted
combinations of the observed curves; the baseline emits point
predictions only, with no uncertainty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, NumericalError, RankDeficiencyError
from .spatial import VariogramFit, fit_variogram, trace_variogram

UNBIASEDNESS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class UKSystem:
    """Fitted variogram model plus the solved kriging weights."""

    gamma_model: VariogramFit
    weights: np.ndarray
    multipliers: np.ndarray
    drift: np.ndarray

    def __post_init__(self) -> None:
        n, q = self.weights.shape
        if self.drift.shape[0] != n or self.multipliers.shape[1] != q:
            raise DimensionError("weights, multipliers, and drift must align")


def solve_uk_system(
    gamma_matrix: np.ndarray,
    drift: np.ndarray,
    gamma_targets: np.ndarray,
    drift_targets: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve the extended kriging system for one or more targets.

    gamma_matrix is n x n site-to-site variogram values, drift is the
    n x L constraint matrix, gamma_targets is n x q site-to-target
    values, drift_targets is L x q.  Returns (weights n x q,
    multipliers L x q).
    """
    gamma_matrix = np.asarray(gamma_matrix, dtype=float)
    drift = np.asarray(drift, dtype=float)
    gamma_targets = np.asarray(gamma_targets, dtype=float)
    drift_targets = np.asarray(drift_targets, dtype=float)
    n = gamma_matrix.shape[0]
    if gamma_matrix.shape != (n, n):
        raise DimensionError("gamma_matrix must be square")
    if drift.ndim != 2 or drift.shape[0] != n:
        raise DimensionError("drift must have one row per site")
    n_drift = drift.shape[1]
    if gamma_targets.ndim == 1:
        gamma_targets = gamma_targets[:, None]
    if drift_targets.ndim == 1:
        drift_targets = drift_targets[:, None]
    if gamma_targets.shape[0] != n:
        raise DimensionError("gamma_targets must have one row per site")
    if drift_targets.shape[0] != n_drift:
        raise DimensionError("drift_targets must have one row per drift column")
    if gamma_targets.shape[1] != drift_targets.shape[1]:
        raise DimensionError("gamma_targets and drift_targets disagree on q")

    if np.linalg.matrix_rank(drift) < n_drift:
        raise RankDeficiencyError(
            "drift matrix is rank deficient; drop collinear columns "
            "(see the drift truncation option)"
        )

    system = np.zeros((n + n_drift, n + n_drift))
    system[:n, :n] = gamma_matrix
    system[:n, n:] = drift
    system[n:, :n] = drift.T
    rhs = np.vstack([gamma_targets, drift_targets])
    try:
        solution = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise RankDeficiencyError(
            "kriging system is singular; add a small nugget to the "
            "variogram or jitter duplicate site locations"
        ) from exc
    if not np.all(np.isfinite(solution)):
        raise NumericalError(
            "kriging solve produced non-finite weights; add a small "
            "nugget to the variogram or jitter duplicate site locations"
        )
    weights = solution[:n]
    multipliers = solution[n:]
    gap = np.max(np.abs(drift.T @ weights - drift_targets))
    if gap > UNBIASEDNESS_TOL:
        raise NumericalError(
            f"unbiasedness constraints violated by {gap:.3e}; the system "
            "is ill-conditioned, add a nugget or truncate the drift"
        )
    return weights, multipliers


def _resolve_variogram(
    curves: np.ndarray,
    coords: np.ndarray,
    design: np.ndarray,
    grid: np.ndarray | None,
    domain: tuple[float, float] | None,
    cfg: dict | None,
) -> VariogramFit:
    cfg = dict(cfg or {})
    family = cfg.pop("family", "gaussian")
    fixed = {k: cfg.pop(k, None) for k in ("nugget", "sill", "range_")}
    n_bins = cfg.pop("n_bins", 15)
    max_dist = cfg.pop("max_dist", None)
    if cfg:
        raise ConfigError(f"unknown variogram options: {sorted(cfg)}")
    if all(v is not None for v in fixed.values()):
        return VariogramFit(
            nugget=float(fixed["nugget"]),
            sill=float(fixed["sill"]),
            range_=float(fixed["range_"]),
            family=family,
        )
    if any(v is not None for v in fixed.values()):
        raise ConfigError(
            "fix all of nugget, sill, range_ or none; partial fixing is ambiguous"
        )
    beta, *_ = np.linalg.lstsq(design, curves, rcond=None)
    resid = curves - design @ beta
    lags, gamma, counts = trace_variogram(
        resid, coords, grid=grid, domain=domain, n_bins=n_bins, max_dist=max_dist
    )
    return fit_variogram(lags, gamma, counts, family=family)


def uk_predict(
    curves: np.ndarray,
    coords: np.ndarray,
    targets: np.ndarray,
    x_drift: np.ndarray | None = None,
    x_drift_targets: np.ndarray | None = None,
    grid: np.ndarray | None = None,
    domain: tuple[float, float] | None = None,
    variogram_cfg: dict | None = None,
    drift_components: int | None = None,
) -> tuple[np.ndarray, UKSystem]:
    """Universal kriging of curves at target locations.

    An intercept is always included; x_drift adds scalar covariate
    columns (with x_drift_targets giving their values at the targets),
    and drift_components keeps only the first few covariate columns
    when the full drift makes the system ill-conditioned.  With no
    covariates this is ordinary kriging.  Pass fixed nugget/sill/range_
    in variogram_cfg to skip estimation.
    """
    curves = np.asarray(curves, dtype=float)
    coords = np.asarray(coords, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if targets.ndim == 1:
        targets = targets[None, :]
    n = curves.shape[0]
    if coords.shape != (n, 2):
        raise DimensionError("coords must be n x 2 and match the curves")
    if targets.shape[1] != 2:
        raise DimensionError("targets must be q x 2")

    if x_drift is None:
        design = np.ones((n, 1))
        design_targets = np.ones((targets.shape[0], 1))
    else:
        x_drift = np.asarray(x_drift, dtype=float)
        if x_drift_targets is None:
            raise ConfigError("x_drift_targets is required when x_drift is given")
        x_drift_targets = np.asarray(x_drift_targets, dtype=float)
        if x_drift.shape[0] != n or x_drift_targets.shape[0] != targets.shape[0]:
            raise DimensionError("drift rows must match sites and targets")
        if x_drift.shape[1] != x_drift_targets.shape[1]:
            raise DimensionError("drift columns must match at sites and targets")
        if drift_components is not None:
            if not 0 <= drift_components <= x_drift.shape[1]:
                raise ConfigError(
                    f"drift_components must be in 0..{x_drift.shape[1]}"
                )
            x_drift = x_drift[:, :drift_components]
            x_drift_targets = x_drift_targets[:, :drift_components]
        design = np.column_stack([np.ones(n), x_drift])
        design_targets = np.column_stack([np.ones(targets.shape[0]), x_drift_targets])

    model = _resolve_variogram(curves, coords, design, grid, domain, variogram_cfg)

    diff = coords[:, None, :] - coords[None, :, :]
    gamma_matrix = model(np.sqrt(np.sum(diff * diff, axis=-1)))
    diff_t = coords[:, None, :] - targets[None, :, :]
    gamma_targets = model(np.sqrt(np.sum(diff_t * diff_t, axis=-1)))

    weights, multipliers = solve_uk_system(
        gamma_matrix, design, gamma_targets, design_targets.T
    )
    predictions = weights.T @ curves
    system = UKSystem(
        gamma_model=model, weights=weights, multipliers=multipliers, drift=design
    )
    return predictions, system


def write_uk_csv(path: str, ids, t_grid: np.ndarray, predictions: np.ndarray) -> None:
    """Long-format point predictions: one row per site and grid point."""
    with open(path, "w", newline="") as fh:
        fh.write("site,t,mean\n")
        for i, sid in enumerate(ids):
            for j, t in enumerate(t_grid):
                fh.write(f"{sid},{float(t)!r},{float(predictions[i, j])!r}\n")
