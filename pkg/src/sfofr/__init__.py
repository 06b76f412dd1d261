"""Bayesian spatial function-on-function regression.

Curves observed at spatial sites are transformed to an orthonormal
basis, fit by conjugate Gibbs samplers with optional spatial random
effects (latent Gaussian fields or their low-rank Moran projections),
and interpreted back in data space through posterior surfaces,
simultaneous bands, and functional kriging.  A trace-variogram
universal-kriging baseline and a synthetic-data generator round out
the pipeline.

Attributes are loaded lazily so the command-line entry point can pin
BLAS thread counts before numpy is first imported.
"""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    # basis
    "BasisSystem": "basis",
    "TensorSurface": "basis",
    "cell_weights": "basis",
    "gram": "basis",
    "orthonormalize": "basis",
    "make_bspline": "basis",
    "make_fourier": "basis",
    "make_fpc": "basis",
    "fpc_count_for_variance": "basis",
    "tensor_surface": "basis",
    "project_surface": "basis",
    "write_basis_csv": "basis",
    "read_basis_csv": "basis",
    "write_surface_csv": "basis",
    "read_surface_csv": "basis",
    # curves
    "FunctionalDataset": "curves",
    "CoefficientSet": "curves",
    "to_basis": "curves",
    "from_basis": "curves",
    "coef_to_basis": "curves",
    "gcv_select": "curves",
    "read_curves_csv": "curves",
    "write_curves_csv": "curves",
    "read_locations_csv": "curves",
    "write_locations_csv": "curves",
    "read_adjacency_csv": "curves",
    "write_adjacency_csv": "curves",
    "load_dataset": "curves",
    # spatial
    "SpatialStructure": "spatial",
    "validate_adjacency": "spatial",
    "matern_cov": "spatial",
    "icar_precision": "spatial",
    "morans_i": "spatial",
    "trace_variogram": "spatial",
    "VariogramFit": "spatial",
    "fit_variogram": "spatial",
    "write_variogram_csv": "spatial",
    # projection
    "Mesh": "projection",
    "ProjectionBasis": "projection",
    "build_mesh": "projection",
    "locate": "projection",
    "interpolation_matrix": "projection",
    "moran_basis_areal": "projection",
    "moran_basis_point": "projection",
    "projection_point": "projection",
    "choose_rank": "projection",
    "delta_precision": "projection",
    "write_mesh_csv": "projection",
    "write_projection_csv": "projection",
    # sampler
    "PriorSpec": "sampler",
    "McmcSpec": "sampler",
    "ModelSpec": "sampler",
    "PosteriorDraws": "sampler",
    "rng_streams": "sampler",
    "fit_fofr": "sampler",
    "fit_sfofr_continuous": "sampler",
    "fit_sfofr_discrete": "sampler",
    "fit_psfofr": "sampler",
    "save_draws": "sampler",
    "load_draws": "sampler",
    # diagnostics
    "mcse": "diagnostics",
    "ess": "diagnostics",
    "summarize_chain": "diagnostics",
    # posterior
    "SurfaceSummary": "posterior",
    "KrigingResult": "posterior",
    "summarize_surface": "posterior",
    "contour_avoiding": "posterior",
    "krige": "posterior",
    "score": "posterior",
    "score_surface": "posterior",
    "write_summary_csv": "posterior",
    "write_kriging_csv": "posterior",
    # baseline
    "UKSystem": "baseline",
    "solve_uk_system": "baseline",
    "uk_predict": "baseline",
    "write_uk_csv": "baseline",
    # simulate
    "SimConfig": "simulate",
    "SimulationResult": "simulate",
    "generate": "simulate",
    "write_dataset": "simulate",
    "true_psi_gaussian": "simulate",
    "true_psi_complex": "simulate",
    # errors
    "SfofrError": "errors",
    "MissingFileError": "errors",
    "SchemaError": "errors",
    "DimensionError": "errors",
    "ConfigError": "errors",
    "CapabilityError": "errors",
    "RankDeficiencyError": "errors",
    "NumericalError": "errors",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name: str):
    try:
        module = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    value = getattr(import_module(f".{module}", __name__), name)
    globals()[name] = value
    return value


def __dir__():
    return __all__
