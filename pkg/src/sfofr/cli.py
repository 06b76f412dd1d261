"""Command-line front end.

Five subcommands cover the pipeline: ``simulate`` writes a synthetic
dataset directory, ``fit`` runs a sampler and persists draws plus
diagnostics, ``predict`` kriges curves at new sites, ``summarize``
turns draws into surface summaries and scores, and ``baseline-uk``
runs the universal-kriging comparison.  Every run writes a meta.json
recording the fully resolved configuration.  Failures exit nonzero
with a one-line JSON error object on stderr.

Set SFOFR_NUM_THREADS to pin the BLAS thread count; it is applied
before numpy is first imported, which is why the heavy imports here
live inside functions.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)

DOMAIN_KINDS = {"point": "continuous", "areal": "discrete"}

SIMULATE_DEFAULTS = {
    "n": 1000,
    "seed": 0,
    "psi": "gaussian",
    "n_basis": 15,
    "tau2": 0.01,
    "sigma2_w": 0.5,
    "range_w": 0.2,
    "smoothness_w": 0.5,
    "train_frac": 0.7,
}

FIT_DEFAULTS = {
    "model": "psfofr",
    "domain": "auto",
    "basis": "bspline",
    "k_basis": "auto",
    "g_basis": "auto",
    "rank": "auto",
    "max_edge": 0.1,
    "margin": 0.1,
    "iters": 70000,
    "burnin": 50000,
    "thin": 20,
    "seed": 0,
    "chains": 1,
    "appendix_literal": False,
    "rho_proposal_sd": 1.0,
}

PREDICT_DEFAULTS = {"alpha": 0.05, "seed": 0}

SUMMARIZE_DEFAULTS = {"alpha": [0.05]}

UK_DEFAULTS = {
    "basis": "bspline",
    "g_basis": "auto",
    "family": "gaussian",
    "n_bins": 15,
    "drift_components": None,
}


def _apply_thread_env() -> None:
    count = os.environ.get("SFOFR_NUM_THREADS")
    if count:
        for var in THREAD_ENV_VARS:
            os.environ.setdefault(var, count)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _emit(payload: dict) -> None:
    print(json.dumps(payload))


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as config errors."""

    def error(self, message: str):
        from .errors import ConfigError

        raise ConfigError(message)


def _load_config(path: str | None) -> dict:
    from .errors import MissingFileError, SchemaError

    if path is None:
        return {}
    if not os.path.exists(path):
        raise MissingFileError(f"no such file: {path}")
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise SchemaError("config file must hold a JSON object")
    return cfg


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Defaults, overridden by the config file, overridden by flags."""
    from .errors import ConfigError

    cfg = _load_config(getattr(args, "config", None))
    unknown = set(cfg) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    resolved = dict(defaults)
    resolved.update(cfg)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _basis_count(value, curves, grid, family, domain) -> int:
    """Resolve an explicit or 'auto' basis count for one curve set."""
    import numpy as np

    from .basis import fpc_count_for_variance
    from .curves import gcv_select
    from .errors import ConfigError

    if value != "auto":
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"basis count must be an integer or 'auto', got {value!r}")
    if family == "fpc":
        return fpc_count_for_variance(curves, grid, share=0.9, domain=domain)
    top = min(40, grid.size - 2, curves.shape[0] * curves.shape[1] // 4)
    if family == "fourier":
        candidates = np.arange(5, max(top, 6), 2)
    else:
        candidates = np.arange(4, max(top, 5))
    return gcv_select(curves, grid, family, candidates, domain=domain)


def _grid_domain(grid) -> tuple[float, float]:
    return float(grid[0]), float(grid[-1])


def _save_matrix(path: str, matrix) -> None:
    import numpy as np

    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt="%.17g")


def _load_matrix(path: str):
    import numpy as np

    return np.loadtxt(path, delimiter=",", ndmin=2)


def _chain_diagnostics(draws) -> dict:
    """Mean ESS/MCSE per parameter block of one chain."""
    import numpy as np

    from .diagnostics import ess, mcse

    def block(flat) -> dict:
        cols = [np.ascontiguousarray(flat[:, j]) for j in range(flat.shape[1])]
        ess_vals = [ess(c) for c in cols]
        try:
            mcse_vals = [mcse(c) for c in cols]
            mean_mcse = float(np.mean(mcse_vals))
        except ValueError:
            mean_mcse = None
        return {"mean_ess": float(np.mean(ess_vals)), "mean_mcse": mean_mcse}

    out = {"psi": block(draws.psi.reshape(draws.n_draws, -1))}
    effect = draws.random_effect
    if effect is not None and effect.shape[1] > 0:
        out["random_effect"] = block(effect.reshape(draws.n_draws, -1))
    out["tau2"] = block(draws.tau2[:, None])
    for name in ("sigma2", "nu", "rho"):
        chain = getattr(draws, name)
        if chain is not None:
            out[name] = block(chain[:, None])
    return out


def _chain_dirs(run_dir: str) -> list[str]:
    from .errors import MissingFileError

    root = os.path.join(run_dir, "draws")
    if not os.path.isdir(root):
        raise MissingFileError(f"no draws directory under {run_dir}")
    dirs = sorted(
        os.path.join(root, name)
        for name in os.listdir(root)
        if name.startswith("chain_")
    )
    if not dirs:
        raise MissingFileError(f"no chain directories under {root}")
    return dirs


def _load_chains(run_dir: str):
    """Load every chain and pool the draws along the draw axis."""
    import numpy as np

    from .sampler import PosteriorDraws, load_draws

    chains = [load_draws(d) for d in _chain_dirs(run_dir)]
    if len(chains) == 1:
        return chains[0], chains

    def cat(name):
        parts = [getattr(c, name) for c in chains]
        if parts[0] is None:
            return None
        return np.concatenate(parts, axis=0)

    first = chains[0]
    pooled = PosteriorDraws(
        model=first.model,
        domain_kind=first.domain_kind,
        psi=cat("psi"),
        random_effect=cat("random_effect"),
        tau2=cat("tau2"),
        sigma2=cat("sigma2"),
        nu=cat("nu"),
        rho=cat("rho"),
        acceptance_rate_rho=first.acceptance_rate_rho,
        spec=first.spec,
    )
    return pooled, chains


def _read_run_meta(run_dir: str) -> dict:
    from .errors import MissingFileError

    path = os.path.join(run_dir, "meta.json")
    if not os.path.exists(path):
        raise MissingFileError(f"no such file: {path}")
    with open(path) as fh:
        return json.load(fh)


def _load_run_bases(run_dir: str, meta: dict):
    from .basis import read_basis_csv

    xi = read_basis_csv(
        os.path.join(run_dir, "xi.csv"),
        meta["basis_family"],
        tuple(meta["r_domain"]),
    )
    phi = read_basis_csv(
        os.path.join(run_dir, "phi.csv"),
        meta["basis_family"],
        tuple(meta["t_domain"]),
    )
    return xi, phi


def _aligned_locations(path: str, ids: tuple[str, ...]):
    """Coordinates from a locations CSV reordered to the given id order."""
    from .curves import read_locations_csv
    from .errors import SchemaError

    loc_ids, coords = read_locations_csv(path)
    if set(loc_ids) != set(ids):
        raise SchemaError(f"{path}: site ids do not match the curve file")
    return coords[[loc_ids.index(sid) for sid in ids]]


def cmd_simulate(args: argparse.Namespace) -> int:
    from .errors import ConfigError
    from .simulate import SimConfig, generate, write_dataset

    resolved = _resolve(args, SIMULATE_DEFAULTS)
    try:
        config = SimConfig(
            n=int(resolved["n"]),
            seed=int(resolved["seed"]),
            n_basis=int(resolved["n_basis"]),
            sigma2_w=float(resolved["sigma2_w"]),
            range_w=float(resolved["range_w"]),
            smoothness_w=float(resolved["smoothness_w"]),
            tau2=float(resolved["tau2"]),
            psi=resolved["psi"],
            train_frac=float(resolved["train_frac"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc))
    result = generate(config)
    os.makedirs(args.out, exist_ok=True)
    write_dataset(result, args.out)
    _emit(
        {
            "out": args.out,
            "n": config.n,
            "seed": config.seed,
            "psi": config.psi,
            "train_sites": len(result.train_idx),
            "test_sites": len(result.test_idx),
        }
    )
    return 0


def _resolve_domain(resolved: dict, spatial) -> str:
    from .errors import ConfigError

    domain = resolved["domain"]
    if domain == "auto":
        if spatial is None:
            return "point"
        return "point" if spatial.kind == "continuous" else "areal"
    if domain not in DOMAIN_KINDS:
        raise ConfigError(f"domain must be point or areal, got {domain!r}")
    if spatial is not None:
        wants = DOMAIN_KINDS[domain]
        if spatial.kind != wants:
            have = "locations" if spatial.kind == "continuous" else "adjacency"
            raise ConfigError(
                f"domain {domain!r} does not match the provided {have} file"
            )
    return domain


def cmd_fit(args: argparse.Namespace) -> int:
    from .curves import _build_basis, load_dataset, to_basis, write_locations_csv
    from .curves import write_adjacency_csv
    from .errors import ConfigError
    from .projection import (
        build_mesh,
        moran_basis_areal,
        projection_point,
        write_mesh_csv,
        write_projection_csv,
    )
    from .sampler import (
        McmcSpec,
        ModelSpec,
        PriorSpec,
        fit_fofr,
        fit_psfofr,
        fit_sfofr_continuous,
        fit_sfofr_discrete,
        save_draws,
    )

    resolved = _resolve(args, FIT_DEFAULTS)
    model = resolved["model"]
    if model not in ("fofr", "sfofr", "psfofr"):
        raise ConfigError(f"model must be fofr, sfofr, or psfofr, got {model!r}")

    dataset = load_dataset(
        args.response, args.covariate, args.locations, args.adjacency
    )
    if model != "fofr" and dataset.spatial is None:
        raise ConfigError(
            f"model {model!r} needs spatial metadata: provide --locations "
            "(point domain) or --adjacency (areal domain)"
        )
    domain = _resolve_domain(resolved, dataset.spatial)
    resolved["domain"] = domain
    domain_kind = DOMAIN_KINDS[domain]

    family = resolved["basis"]
    t_domain = _grid_domain(dataset.t_grid)
    r_domain = _grid_domain(dataset.r_grid)
    k_n = _basis_count(
        resolved["k_basis"], dataset.response_curves, dataset.t_grid, family, t_domain
    )
    g_n = _basis_count(
        resolved["g_basis"], dataset.covariate_curves, dataset.r_grid, family, r_domain
    )
    phi = _build_basis(family, k_n, t_domain, dataset.t_grid, dataset.response_curves)
    xi = _build_basis(family, g_n, r_domain, dataset.r_grid, dataset.covariate_curves)
    coef = to_basis(dataset, phi, xi)

    priors = PriorSpec(appendix_literal=bool(resolved["appendix_literal"]))
    n_chains = int(resolved["chains"])
    if n_chains < 1:
        raise ConfigError("chains must be at least 1")
    base_seed = int(resolved["seed"])

    proj = None
    mesh_info = None
    rank = None
    if model == "psfofr":
        want = resolved["rank"]
        p = None if want == "auto" else int(want)
        if domain == "point":
            coords = dataset.spatial.coords
            bounds = (
                (float(coords[:, 0].min()), float(coords[:, 0].max())),
                (float(coords[:, 1].min()), float(coords[:, 1].max())),
            )
            mesh = build_mesh(bounds, float(resolved["max_edge"]), float(resolved["margin"]))
            proj = projection_point(mesh, coords, p=p)
            mesh_info = {
                "bounds": [list(bounds[0]), list(bounds[1])],
                "max_edge": float(resolved["max_edge"]),
                "margin": float(resolved["margin"]),
                "n_vertices": mesh.n_vertices,
            }
        else:
            proj = moran_basis_areal(coef.x_coef, dataset.spatial.adjacency, p=p)
        rank = proj.rank

    os.makedirs(args.out, exist_ok=True)
    chain_seeds = [base_seed + c for c in range(n_chains)]
    diagnostics = []
    acceptance = []
    for c, chain_seed in enumerate(chain_seeds):
        spec = ModelSpec(
            model=model,
            domain_kind=domain_kind,
            priors=priors,
            mcmc=McmcSpec(
                iters=int(resolved["iters"]),
                burnin=int(resolved["burnin"]),
                thin=int(resolved["thin"]),
                seed=chain_seed,
                rho_proposal_sd=float(resolved["rho_proposal_sd"]),
            ),
        )
        if model == "fofr":
            draws = fit_fofr(coef, spec=spec)
        elif model == "sfofr" and domain == "point":
            draws = fit_sfofr_continuous(coef, dataset.spatial.coords, spec=spec)
        elif model == "sfofr":
            draws = fit_sfofr_discrete(coef, dataset.spatial.adjacency, spec=spec)
        elif domain == "point":
            draws = fit_psfofr(coef, proj, spec=spec)
        else:
            draws = fit_psfofr(coef, proj, spec=spec, D=dataset.spatial.adjacency)
        save_draws(draws, os.path.join(args.out, "draws", f"chain_{c:02d}"))
        diagnostics.append(_chain_diagnostics(draws))
        acceptance.append(draws.acceptance_rate_rho)

    from .basis import write_basis_csv

    write_basis_csv(xi, os.path.join(args.out, "xi.csv"))
    write_basis_csv(phi, os.path.join(args.out, "phi.csv"))
    _save_matrix(os.path.join(args.out, "y_coef.csv"), coef.y_coef)
    _save_matrix(os.path.join(args.out, "x_coef.csv"), coef.x_coef)
    if dataset.spatial is not None and dataset.spatial.kind == "continuous":
        write_locations_csv(
            os.path.join(args.out, "train_locations.csv"),
            dataset.ids,
            dataset.spatial.coords,
        )
    if dataset.spatial is not None and dataset.spatial.kind == "discrete":
        write_adjacency_csv(
            os.path.join(args.out, "adjacency.csv"),
            dataset.ids,
            dataset.spatial.adjacency,
        )
    if proj is not None and proj.mesh is not None:
        write_mesh_csv(
            proj.mesh,
            os.path.join(args.out, "mesh_vertices.csv"),
            os.path.join(args.out, "mesh_triangles.csv"),
        )
    if proj is not None:
        write_projection_csv(os.path.join(args.out, "projection.csv"), proj)

    meta = {
        "command": "fit",
        "config": resolved,
        "model": model,
        "domain": domain,
        "domain_kind": domain_kind,
        "basis_family": family,
        "k_basis": k_n,
        "g_basis": g_n,
        "rank": rank,
        "mesh": mesh_info,
        "n_sites": dataset.n_sites,
        "ids": list(dataset.ids),
        "t_domain": list(t_domain),
        "r_domain": list(r_domain),
        "chains": n_chains,
        "chain_seeds": chain_seeds,
        "acceptance_rate_rho": acceptance,
        "diagnostics": diagnostics,
    }
    _write_json(os.path.join(args.out, "meta.json"), meta)
    _emit(
        {
            "out": args.out,
            "model": model,
            "domain": domain,
            "k_basis": k_n,
            "g_basis": g_n,
            "rank": rank,
            "chains": n_chains,
            "draws_per_chain": draws.n_draws,
        }
    )
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    import numpy as np

    from .curves import coef_to_basis, read_curves_csv
    from .errors import ConfigError, DimensionError, SchemaError
    from .posterior import krige, score, write_kriging_csv
    from .projection import build_mesh, projection_point

    resolved = _resolve(args, PREDICT_DEFAULTS)
    meta = _read_run_meta(args.run)
    pooled, _ = _load_chains(args.run)
    xi, phi = _load_run_bases(args.run, meta)

    r_grid, star_ids, x_star_curves = read_curves_csv(args.covariate)
    if r_grid.size != xi.grid.size or not np.allclose(r_grid, xi.grid):
        raise DimensionError("target covariate grid differs from the training grid")
    x_star_coef = coef_to_basis(x_star_curves, xi)

    proj_star = None
    train_coords = None
    star_coords = None
    model = meta["model"]
    if model == "psfofr" and meta["domain"] == "point":
        if args.locations is None:
            raise ConfigError("point-domain prediction needs --locations")
        star_coords = _aligned_locations(args.locations, star_ids)
        mesh_info = meta["mesh"]
        mesh = build_mesh(
            tuple(tuple(b) for b in mesh_info["bounds"]),
            mesh_info["max_edge"],
            mesh_info["margin"],
        )
        try:
            proj_star = projection_point(mesh, star_coords, p=meta["rank"]).P
        except ValueError as exc:
            raise ConfigError(str(exc))
    elif model == "sfofr" and meta["domain"] == "point":
        if args.locations is None:
            raise ConfigError("point-domain prediction needs --locations")
        star_coords = _aligned_locations(args.locations, star_ids)
        train_coords = _aligned_locations(
            os.path.join(args.run, "train_locations.csv"), tuple(meta["ids"])
        )

    result = krige(
        pooled,
        x_star_coef,
        phi,
        proj_star=proj_star,
        train_coords=train_coords,
        star_coords=star_coords,
        alpha=float(resolved["alpha"]),
        seed=int(resolved["seed"]),
        ids=star_ids,
    )

    os.makedirs(args.out, exist_ok=True)
    write_kriging_csv(os.path.join(args.out, "predictions.csv"), result)
    scores = None
    if args.truth is not None:
        t_grid, truth_ids, truth = read_curves_csv(args.truth)
        if set(truth_ids) != set(star_ids):
            raise SchemaError("truth file lists different site ids")
        if not np.allclose(t_grid, phi.grid):
            raise DimensionError("truth grid differs from the training grid")
        truth = truth[[truth_ids.index(sid) for sid in star_ids]]
        scores = score(result.mean_curves, truth, bands=(result.lower, result.upper))
        _write_json(os.path.join(args.out, "scores.json"), scores)
    _write_json(
        os.path.join(args.out, "meta.json"),
        {"command": "predict", "run": args.run, "config": resolved},
    )
    payload = {"out": args.out, "sites": len(star_ids), "alpha": resolved["alpha"]}
    if scores is not None:
        payload.update(scores)
    _emit(payload)
    return 0


def cmd_summarize(args: argparse.Namespace) -> int:
    import numpy as np

    from .basis import read_surface_csv
    from .curves import read_adjacency_csv
    from .errors import DimensionError
    from .posterior import (
        contour_avoiding,
        score_surface,
        summarize_surface,
        write_summary_csv,
    )
    from .spatial import morans_i

    resolved = _resolve(args, SUMMARIZE_DEFAULTS)
    alphas = tuple(sorted(set(float(a) for a in resolved["alpha"])))
    meta = _read_run_meta(args.run)
    pooled, chains = _load_chains(args.run)
    xi, phi = _load_run_bases(args.run, meta)

    summary = summarize_surface(pooled, xi, phi, alphas=alphas)
    mask, f0 = contour_avoiding(pooled, xi, phi, alpha=min(alphas))

    os.makedirs(args.out, exist_ok=True)
    write_summary_csv(os.path.join(args.out, "surface.csv"), summary)
    with open(os.path.join(args.out, "contour.csv"), "w", newline="") as fh:
        fh.write("r,t,f0,significant\n")
        for i, r in enumerate(f0.r_grid):
            for j, t in enumerate(f0.t_grid):
                fh.write(
                    f"{float(r)!r},{float(t)!r},"
                    f"{float(f0.values[i, j])!r},{int(mask[i, j])}\n"
                )

    mse = None
    if args.truth_surface is not None:
        truth = read_surface_csv(args.truth_surface)
        if truth.values.shape != summary.mean.values.shape or not (
            np.allclose(truth.r_grid, summary.mean.r_grid)
            and np.allclose(truth.t_grid, summary.mean.t_grid)
        ):
            raise DimensionError("truth surface grid differs from the data grid")
        mse = score_surface(summary.mean, truth)

    moran = None
    adjacency_path = os.path.join(args.run, "adjacency.csv")
    if os.path.exists(adjacency_path):
        ids = tuple(meta["ids"])
        D = read_adjacency_csv(adjacency_path, ids)
        y_coef = _load_matrix(os.path.join(args.run, "y_coef.csv"))
        x_coef = _load_matrix(os.path.join(args.run, "x_coef.csv"))
        resid = y_coef - x_coef @ pooled.psi.mean(axis=0)
        effect = pooled.random_effect
        if effect is not None and effect.shape[1] == y_coef.shape[0]:
            resid = resid - effect.mean(axis=0)
        elif effect is not None and effect.shape[1] > 0:
            from .projection import moran_basis_areal

            proj = moran_basis_areal(x_coef, D, p=effect.shape[1])
            resid = resid - proj.P @ effect.mean(axis=0)
        site_scalar = (resid @ phi.values) @ phi.quad_weights
        stat, p_value = morans_i(site_scalar, D, seed=0)
        moran = {"statistic": stat, "p_value": p_value}

    scores = {}
    if args.scores is not None:
        with open(args.scores) as fh:
            scores = json.load(fh)

    payload = {
        "command": "summarize",
        "config": {"alpha": list(alphas)},
        "m_alpha": {f"{a:g}": summary.m_alpha[a] for a in alphas},
        "mse": mse,
        "mspe": scores.get("mspe"),
        "mean_coverage": scores.get("mean_coverage"),
        "morans_i": moran,
        "diagnostics": [_chain_diagnostics(c) for c in chains],
    }
    _write_json(os.path.join(args.out, "summary.json"), payload)
    _emit({"out": args.out, "mse": mse, "m_alpha": payload["m_alpha"]})
    return 0


def cmd_baseline_uk(args: argparse.Namespace) -> int:
    import numpy as np

    from .baseline import uk_predict, write_uk_csv
    from .curves import _build_basis, coef_to_basis, load_dataset, read_curves_csv
    from .errors import DimensionError, SchemaError
    from .posterior import score

    resolved = _resolve(args, UK_DEFAULTS)
    dataset = load_dataset(args.response, args.covariate, args.locations, None)
    family = resolved["basis"]
    r_domain = _grid_domain(dataset.r_grid)
    g_n = _basis_count(
        resolved["g_basis"], dataset.covariate_curves, dataset.r_grid, family, r_domain
    )
    xi = _build_basis(family, g_n, r_domain, dataset.r_grid, dataset.covariate_curves)
    x_coef = coef_to_basis(dataset.covariate_curves, xi)

    r_grid, star_ids, x_star_curves = read_curves_csv(args.covariate_targets)
    if not np.allclose(r_grid, dataset.r_grid):
        raise DimensionError("target covariate grid differs from the training grid")
    x_star_coef = coef_to_basis(x_star_curves, xi)
    star_coords = _aligned_locations(args.targets, star_ids)

    drift_components = resolved["drift_components"]
    if drift_components is not None:
        drift_components = int(drift_components)
    predictions, system = uk_predict(
        dataset.response_curves,
        dataset.spatial.coords,
        star_coords,
        x_drift=x_coef,
        x_drift_targets=x_star_coef,
        grid=dataset.t_grid,
        domain=_grid_domain(dataset.t_grid),
        variogram_cfg={"family": resolved["family"], "n_bins": int(resolved["n_bins"])},
        drift_components=drift_components,
    )

    os.makedirs(args.out, exist_ok=True)
    write_uk_csv(
        os.path.join(args.out, "predictions.csv"),
        star_ids,
        dataset.t_grid,
        predictions,
    )
    scores = None
    if args.truth is not None:
        t_grid, truth_ids, truth = read_curves_csv(args.truth)
        if set(truth_ids) != set(star_ids):
            raise SchemaError("truth file lists different site ids")
        if not np.allclose(t_grid, dataset.t_grid):
            raise DimensionError("truth grid differs from the training grid")
        truth = truth[[truth_ids.index(sid) for sid in star_ids]]
        scores = score(predictions, truth)
        _write_json(os.path.join(args.out, "scores.json"), scores)

    model = system.gamma_model
    _write_json(
        os.path.join(args.out, "meta.json"),
        {
            "command": "baseline-uk",
            "config": resolved,
            "g_basis": g_n,
            "variogram": {
                "family": model.family,
                "nugget": model.nugget,
                "sill": model.sill,
                "range": model.range_,
            },
        },
    )
    payload = {"out": args.out, "sites": len(star_ids)}
    if scores is not None:
        payload["mspe"] = scores["mspe"]
    _emit(payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sfofr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a synthetic dataset directory")
    sim.add_argument("--n", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--psi", choices=("gaussian", "complex"))
    sim.add_argument("--n-basis", dest="n_basis", type=int)
    sim.add_argument("--tau2", type=float)
    sim.add_argument("--sigma2-w", dest="sigma2_w", type=float)
    sim.add_argument("--range-w", dest="range_w", type=float)
    sim.add_argument("--smoothness-w", dest="smoothness_w", type=float)
    sim.add_argument("--train-frac", dest="train_frac", type=float)
    sim.add_argument("--config")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="run a sampler and persist the draws")
    fit.add_argument("--response", required=True)
    fit.add_argument("--covariate", required=True)
    fit.add_argument("--locations")
    fit.add_argument("--adjacency")
    fit.add_argument("--model", choices=("fofr", "sfofr", "psfofr"))
    fit.add_argument("--domain", choices=("point", "areal"))
    fit.add_argument("--basis", choices=("bspline", "fourier", "fpc"))
    fit.add_argument("--k-basis", dest="k_basis")
    fit.add_argument("--g-basis", dest="g_basis")
    fit.add_argument("--rank")
    fit.add_argument("--max-edge", dest="max_edge", type=float)
    fit.add_argument("--margin", type=float)
    fit.add_argument("--iters", type=int)
    fit.add_argument("--burnin", type=int)
    fit.add_argument("--thin", type=int)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--chains", type=int)
    fit.add_argument(
        "--appendix-literal",
        dest="appendix_literal",
        action="store_const",
        const=True,
    )
    fit.add_argument("--config")
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=cmd_fit)

    pred = sub.add_parser("predict", help="krige curves at new sites")
    pred.add_argument("--run", required=True)
    pred.add_argument("--covariate", required=True)
    pred.add_argument("--locations")
    pred.add_argument("--truth")
    pred.add_argument("--alpha", type=float)
    pred.add_argument("--seed", type=int)
    pred.add_argument("--config")
    pred.add_argument("--out", required=True)
    pred.set_defaults(func=cmd_predict)

    summ = sub.add_parser("summarize", help="surface summaries, bands, scores")
    summ.add_argument("--run", required=True)
    summ.add_argument("--alpha", type=float, action="append")
    summ.add_argument("--truth-surface", dest="truth_surface")
    summ.add_argument("--scores")
    summ.add_argument("--config")
    summ.add_argument("--out", required=True)
    summ.set_defaults(func=cmd_summarize)

    uk = sub.add_parser("baseline-uk", help="universal-kriging baseline")
    uk.add_argument("--response", required=True)
    uk.add_argument("--covariate", required=True)
    uk.add_argument("--locations", required=True)
    uk.add_argument("--targets", required=True)
    uk.add_argument("--covariate-targets", dest="covariate_targets", required=True)
    uk.add_argument("--truth")
    uk.add_argument("--basis", choices=("bspline", "fourier", "fpc"))
    uk.add_argument("--g-basis", dest="g_basis")
    uk.add_argument("--family", choices=("gaussian", "exponential"))
    uk.add_argument("--n-bins", dest="n_bins", type=int)
    uk.add_argument("--drift-components", dest="drift_components", type=int)
    uk.add_argument("--config")
    uk.add_argument("--out", required=True)
    uk.set_defaults(func=cmd_baseline_uk)

    return parser


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": {"code": code, "kind": kind, "message": message}}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    _apply_thread_env()
    parser = build_parser()
    from .errors import SfofrError

    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SfofrError as exc:
        return _fail(exc.code, exc.kind, str(exc))
    except FileNotFoundError as exc:
        return _fail(2, "missing-file", str(exc))
    except Exception as exc:  # pragma: no cover - last-resort reporting
        return _fail(1, "unexpected", f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    raise SystemExit(main())
