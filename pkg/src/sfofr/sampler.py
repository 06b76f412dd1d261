"""Gibbs samplers for the basis-space regression models.

All four fits share one engine: a sweep updates the regression
coefficients psi in column blocks, then the spatial random effect
(projected delta, or latent W per domain kind), then the error variance
tau2, then the effect's variance parameter (sigma2, or nu with an
optional Metropolis step for the Matern range rho).

Each conditional is exposed as a standalone draw function so its
moments can be checked against closed forms in isolation; the engine
calls exactly these functions.  Per-parameter RNG substreams keep runs
reproducible and make the independent model a draw-for-draw special
case of the projected model at rank zero.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import expit, logit

from .curves import CoefficientSet
from .diagnostics import ess, mcse, summarize_chain  # noqa: F401  (re-export)
from .errors import ConfigError, DimensionError, MissingFileError, NumericalError
from .projection import ProjectionBasis, delta_precision
from .spatial import matern_cov, validate_adjacency

STREAM_NAMES = ("psi", "random_effect", "tau2", "sigma2", "rho")
RHO_TARGET_RATE = 0.3
RHO_ADAPT_WINDOW = 50


@dataclass(frozen=True)
class PriorSpec:
    """Hyperparameters of the conjugate priors."""

    psi_var: float = 10.0
    tau2_ig: tuple[float, float] = (2.0, 0.1)
    sigma2_ig: tuple[float, float] = (2.0, 0.1)
    rho_unif: tuple[float, float] = (0.0, 1.0)
    nu_gamma: tuple[float, float] = (0.5, 1.0 / 2000.0)
    delta_prec_gamma: tuple[float, float] = (0.5, 1.0 / 2000.0)
    # use the printed Gamma(1, .) shape for the projected-effect precision
    appendix_literal: bool = False

    def __post_init__(self) -> None:
        positives = [self.psi_var, *self.tau2_ig, *self.sigma2_ig,
                     *self.nu_gamma, *self.delta_prec_gamma]
        if any(v <= 0 for v in positives):
            raise ConfigError("prior hyperparameters must be positive")
        if self.rho_unif != (0.0, 1.0):
            raise ConfigError("the range prior is Unif(0,1)")


@dataclass(frozen=True)
class McmcSpec:
    """Chain length, thinning, seeding, and the range-proposal scale."""

    iters: int = 70000
    burnin: int = 50000
    thin: int = 20
    seed: int = 0
    rho_proposal_sd: float = 1.0

    def __post_init__(self) -> None:
        if not 0 <= self.burnin < self.iters:
            raise ConfigError("need 0 <= burnin < iters")
        if self.thin < 1:
            raise ConfigError("thin must be at least 1")
        if (self.iters - self.burnin) % self.thin != 0:
            raise ConfigError("iters - burnin must be divisible by thin")
        if self.rho_proposal_sd <= 0:
            raise ConfigError("rho_proposal_sd must be positive")

    @property
    def n_draws(self) -> int:
        return (self.iters - self.burnin) // self.thin


@dataclass(frozen=True)
class ModelSpec:
    model: str
    domain_kind: str = "continuous"
    priors: PriorSpec = field(default_factory=PriorSpec)
    mcmc: McmcSpec = field(default_factory=McmcSpec)

    def __post_init__(self) -> None:
        if self.model not in ("fofr", "sfofr", "psfofr"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.domain_kind not in ("continuous", "discrete"):
            raise ConfigError(f"unknown domain kind {self.domain_kind!r}")


@dataclass(frozen=True, eq=False)
class PosteriorDraws:
    """Thinned post-burn-in draws of one chain."""

    model: str
    domain_kind: str
    psi: np.ndarray
    random_effect: np.ndarray | None
    tau2: np.ndarray
    sigma2: np.ndarray | None
    nu: np.ndarray | None
    rho: np.ndarray | None
    acceptance_rate_rho: float | None
    spec: ModelSpec

    def __post_init__(self) -> None:
        u = self.psi.shape[0]
        if self.psi.ndim != 3 or self.tau2.shape != (u,):
            raise DimensionError("psi must be U x g x k with matching tau2")
        for arr in (self.random_effect, self.sigma2, self.nu, self.rho):
            if arr is not None and arr.shape[0] != u:
                raise DimensionError("draw arrays must share the first dimension")
        if np.any(self.tau2 <= 0):
            raise ValueError("tau2 draws must be positive")
        if self.rho is not None and (np.any(self.rho <= 0) or np.any(self.rho >= 1)):
            raise ValueError("rho draws must lie in (0, 1)")

    @property
    def n_draws(self) -> int:
        return self.psi.shape[0]


def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent named substreams, one per parameter block."""
    children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
    return {
        name: np.random.Generator(np.random.Philox(ss))
        for name, ss in zip(STREAM_NAMES, children)
    }


def _chol(mat: np.ndarray, what: str) -> np.ndarray:
    """Cholesky factor with escalating diagonal jitter before giving up."""
    scale = float(np.mean(np.diag(mat)))
    if scale <= 0:
        scale = 1.0
    for jitter in (0.0, 1e-10, 1e-8, 1e-6):
        try:
            if jitter == 0.0:
                return np.linalg.cholesky(mat)
            bumped = mat.copy()
            bumped[np.diag_indices_from(bumped)] += jitter * scale
            return np.linalg.cholesky(bumped)
        except np.linalg.LinAlgError:
            continue
    raise NumericalError(f"Cholesky of the {what} failed after jitter escalation")


def _mvn_columns(
    rng: np.random.Generator, prec: np.ndarray, rhs: np.ndarray, what: str
) -> np.ndarray:
    """Draw all columns of a matrix whose columns share one precision.

    Column j is Normal(prec^-1 rhs_j, prec^-1); one Cholesky serves every
    column of the sweep.
    """
    L = _chol(prec, what)
    half = solve_triangular(L, rhs, lower=True)
    mean = solve_triangular(L.T, half, lower=False)
    z = rng.standard_normal(rhs.shape)
    return mean + solve_triangular(L.T, z, lower=False)


def draw_psi_block(
    rng: np.random.Generator,
    x_coef: np.ndarray,
    resid: np.ndarray,
    tau2: float,
    psi_var: float = 10.0,
    xtx: np.ndarray | None = None,
) -> np.ndarray:
    """psi columns given residuals with the random effect removed.

    Precision X'X/tau2 + I/psi_var, mean solving the normal equations on
    the supplied residual columns.
    """
    g = x_coef.shape[1]
    if xtx is None:
        xtx = x_coef.T @ x_coef
    prec = xtx / tau2
    prec[np.diag_indices(g)] += 1.0 / psi_var
    rhs = x_coef.T @ resid / tau2
    return _mvn_columns(rng, prec, rhs, "psi precision")


def draw_delta_block(
    rng: np.random.Generator,
    P: np.ndarray,
    resid: np.ndarray,
    tau2: float,
    sigma2: float,
    Q_delta: np.ndarray,
    ptp: np.ndarray | None = None,
) -> np.ndarray:
    """Projected-effect columns: precision P'P/tau2 + sigma2 Q_delta.

    sigma2 multiplies the prior precision kernel here (it is a precision
    scale, not a variance).
    """
    if ptp is None:
        ptp = P.T @ P
    prec = ptp / tau2 + sigma2 * Q_delta
    rhs = P.T @ resid / tau2
    return _mvn_columns(rng, prec, rhs, "delta precision")


def draw_w_continuous(
    rng: np.random.Generator,
    resid: np.ndarray,
    tau2: float,
    sigma2: float,
    gamma_inv: np.ndarray,
) -> np.ndarray:
    """Latent-effect columns under the Matern prior: I/tau2 + Gamma^-1/sigma2."""
    n = resid.shape[0]
    prec = gamma_inv / sigma2
    prec[np.diag_indices(n)] += 1.0 / tau2
    return _mvn_columns(rng, prec, resid / tau2, "latent-effect precision")


def draw_w_discrete(
    rng: np.random.Generator,
    resid: np.ndarray,
    tau2: float,
    nu: float,
    Q: np.ndarray,
) -> np.ndarray:
    """Latent-effect columns under the intrinsic prior: I/tau2 + nu Q."""
    n = resid.shape[0]
    prec = nu * Q
    prec[np.diag_indices(n)] += 1.0 / tau2
    return _mvn_columns(rng, prec, resid / tau2, "latent-effect precision")


def draw_tau2(
    rng: np.random.Generator,
    resid: np.ndarray,
    prior: tuple[float, float] = (2.0, 0.1),
) -> float:
    """Error variance: InvGamma(n k/2 + a0, sum resid^2 / 2 + b0)."""
    a0, b0 = prior
    shape = resid.size / 2.0 + a0
    rate = float(np.sum(resid * resid)) / 2.0 + b0
    return float(1.0 / rng.gamma(shape, 1.0 / rate))


def draw_sigma2_matern(
    rng: np.random.Generator,
    w: np.ndarray,
    gamma_inv: np.ndarray,
    prior: tuple[float, float] = (2.0, 0.1),
) -> float:
    """Matern scale: InvGamma(a0 + n k/2, b0 + sum_k w_k' Gamma^-1 w_k / 2)."""
    a0, b0 = prior
    shape = a0 + w.size / 2.0
    rate = b0 + float(np.sum(w * (gamma_inv @ w))) / 2.0
    return float(1.0 / rng.gamma(shape, 1.0 / rate))


def draw_sigma2_projected(
    rng: np.random.Generator,
    delta: np.ndarray,
    Q_delta: np.ndarray,
    prior: tuple[float, float] = (0.5, 1.0 / 2000.0),
    literal: bool = False,
) -> float:
    """Projected-effect precision multiplier, a Gamma draw.

    Rate is sum_k delta_k' Q_delta delta_k / 2 + p * b0.  The default
    shape p k/2 + a0 comes from the Gaussian kernel over all columns;
    literal=True fixes the shape at 1 instead (the --appendix-literal
    convention).
    """
    a0, b0 = prior
    p = delta.shape[0]
    quad = float(np.sum(delta * (Q_delta @ delta)))
    shape = 1.0 if literal else p * delta.shape[1] / 2.0 + a0
    rate = quad / 2.0 + p * b0
    return float(rng.gamma(shape, 1.0 / rate))


def draw_nu(
    rng: np.random.Generator,
    w: np.ndarray,
    Q: np.ndarray,
    prior: tuple[float, float] = (0.5, 1.0 / 2000.0),
) -> float:
    """Intrinsic precision multiplier: Gamma(1, sum_k w_k' Q w_k / 2 + n b0)."""
    _, b0 = prior
    n = w.shape[0]
    quad = float(np.sum(w * (Q @ w)))
    rate = quad / 2.0 + n * b0
    return float(rng.gamma(1.0, 1.0 / rate))


def _w_logdensity(chol_gamma: np.ndarray, w: np.ndarray, sigma2: float) -> float:
    """Log density of the latent columns under N(0, sigma2 Gamma), up to
    terms that do not involve the range parameter."""
    sol = solve_triangular(chol_gamma, w, lower=True)
    quad = float(np.sum(sol * sol))
    half_logdet = float(np.sum(np.log(np.diag(chol_gamma))))
    return -w.shape[1] * half_logdet - quad / (2.0 * sigma2)


def _spd_inverse(chol: np.ndarray) -> np.ndarray:
    inv_l = solve_triangular(chol, np.eye(chol.shape[0]), lower=True)
    return inv_l.T @ inv_l


def rho_metropolis_step(
    rng: np.random.Generator,
    rho: float,
    chol_gamma: np.ndarray,
    w: np.ndarray,
    sigma2: float,
    coords: np.ndarray,
    proposal_sd: float,
) -> tuple[float, np.ndarray, bool]:
    """One random-walk Metropolis update of the Matern range on the logit
    scale, under the Unif(0,1) prior.

    Returns (rho, Cholesky of Gamma(rho), accepted).  The Jacobian of the
    logit transform enters the ratio as log(rho'(1-rho')) - log(rho(1-rho)).
    """
    z_new = logit(rho) + proposal_sd * rng.standard_normal()
    log_u = np.log(rng.uniform())
    rho_new = float(expit(z_new))
    if not 1e-12 < rho_new < 1.0 - 1e-12:
        return rho, chol_gamma, False
    chol_new = _chol(matern_cov(coords, 1.0, rho_new), "Matern covariance")
    log_ratio = (
        _w_logdensity(chol_new, w, sigma2)
        - _w_logdensity(chol_gamma, w, sigma2)
        + np.log(rho_new * (1.0 - rho_new))
        - np.log(rho * (1.0 - rho))
    )
    if log_u < log_ratio:
        return rho_new, chol_new, True
    return rho, chol_gamma, False


def _check_coef(coef: CoefficientSet) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(coef.y_coef, dtype=float), np.asarray(coef.x_coef, dtype=float)


def _gibbs(
    spec: ModelSpec,
    y: np.ndarray,
    x: np.ndarray,
    P: np.ndarray | None = None,
    Q_delta: np.ndarray | None = None,
    coords: np.ndarray | None = None,
    Q: np.ndarray | None = None,
    fixed: dict | None = None,
) -> PosteriorDraws:
    pr, mc = spec.priors, spec.mcmc
    n, k = y.shape
    fixed = dict(fixed or {})
    model = spec.model
    continuous = spec.domain_kind == "continuous"
    p = P.shape[1] if P is not None else 0
    U = mc.n_draws
    rngs = rng_streams(mc.seed)

    psi = np.zeros((x.shape[1], k))
    effect = np.zeros((n, k))
    delta = np.zeros((p, k))
    w = np.zeros((n, k))
    tau2 = float(fixed.get("tau2", 1.0))
    sigma2 = float(fixed.get("sigma2", 1.0))
    nu = float(fixed.get("nu", 1.0))
    rho = float(fixed.get("rho", 0.5))

    xtx = x.T @ x
    ptp = P.T @ P if p > 0 else None
    sample_sigma2 = "sigma2" not in fixed and (
        (model == "psfofr" and p > 0) or (model == "sfofr" and continuous)
    )
    sample_rho = model == "sfofr" and continuous and "rho" not in fixed
    sample_nu = model == "sfofr" and not continuous and "nu" not in fixed
    chol_gamma = gamma_inv = None
    if model == "sfofr" and continuous:
        chol_gamma = _chol(matern_cov(coords, 1.0, rho), "Matern covariance")
        gamma_inv = _spd_inverse(chol_gamma)
    proposal_sd = mc.rho_proposal_sd

    psi_draws = np.empty((U, x.shape[1], k))
    tau2_draws = np.empty(U)
    effect_draws = None
    if model == "psfofr":
        effect_draws = np.empty((U, p, k))
    elif model == "sfofr":
        effect_draws = np.empty((U, n, k))
    sigma2_draws = None
    if (model == "psfofr" and p > 0) or (model == "sfofr" and continuous):
        sigma2_draws = np.empty(U)
    nu_draws = np.empty(U) if model == "sfofr" and not continuous else None
    rho_draws = np.empty(U) if model == "sfofr" and continuous else None

    accepted_post = 0
    window_accepted = 0
    window_size = 0

    for it in range(mc.iters):
        try:
            psi = draw_psi_block(rngs["psi"], x, y - effect, tau2, pr.psi_var, xtx=xtx)
            resid = y - x @ psi
            if model == "psfofr" and p > 0:
                delta = draw_delta_block(
                    rngs["random_effect"], P, resid, tau2, sigma2, Q_delta, ptp=ptp
                )
                effect = P @ delta
            elif model == "sfofr" and continuous:
                w = draw_w_continuous(
                    rngs["random_effect"], resid, tau2, sigma2, gamma_inv
                )
                effect = w
            elif model == "sfofr":
                w = draw_w_discrete(rngs["random_effect"], resid, tau2, nu, Q)
                w = w - w.mean(axis=0, keepdims=True)
                effect = w
            if "tau2" not in fixed:
                tau2 = draw_tau2(rngs["tau2"], resid - effect, pr.tau2_ig)
            if sample_sigma2 and model == "psfofr":
                sigma2 = draw_sigma2_projected(
                    rngs["sigma2"], delta, Q_delta,
                    pr.delta_prec_gamma, pr.appendix_literal,
                )
            elif sample_sigma2:
                sigma2 = draw_sigma2_matern(rngs["sigma2"], w, gamma_inv, pr.sigma2_ig)
            if sample_rho:
                rho, chol_new, accepted = rho_metropolis_step(
                    rngs["rho"], rho, chol_gamma, w, sigma2, coords, proposal_sd
                )
                if accepted:
                    if chol_new is not chol_gamma:
                        gamma_inv = _spd_inverse(chol_new)
                    chol_gamma = chol_new
                if it >= mc.burnin:
                    accepted_post += accepted
                else:
                    # adapt the proposal scale toward the target rate,
                    # frozen once burn-in ends
                    window_accepted += accepted
                    window_size += 1
                    if window_size == RHO_ADAPT_WINDOW:
                        rate = window_accepted / window_size
                        proposal_sd = float(
                            np.clip(
                                proposal_sd * np.exp(rate - RHO_TARGET_RATE),
                                1e-3,
                                10.0,
                            )
                        )
                        window_accepted = window_size = 0
            elif sample_nu:
                nu = draw_nu(rngs["sigma2"], w, Q, pr.nu_gamma)
        except NumericalError as exc:
            raise NumericalError(f"{exc} (iteration {it})") from None

        if it >= mc.burnin and (it - mc.burnin) % mc.thin == mc.thin - 1:
            u = (it - mc.burnin) // mc.thin
            psi_draws[u] = psi
            tau2_draws[u] = tau2
            if model == "psfofr":
                effect_draws[u] = delta
            elif model == "sfofr":
                effect_draws[u] = w
            if sigma2_draws is not None:
                sigma2_draws[u] = sigma2
            if nu_draws is not None:
                nu_draws[u] = nu
            if rho_draws is not None:
                rho_draws[u] = rho

    acceptance = None
    if sample_rho:
        acceptance = accepted_post / (mc.iters - mc.burnin)
    return PosteriorDraws(
        model=model,
        domain_kind=spec.domain_kind,
        psi=psi_draws,
        random_effect=effect_draws,
        tau2=tau2_draws,
        sigma2=sigma2_draws,
        nu=nu_draws,
        rho=rho_draws,
        acceptance_rate_rho=acceptance,
        spec=spec,
    )


def fit_psfofr(
    coef: CoefficientSet,
    proj: ProjectionBasis,
    Q_delta: np.ndarray | None = None,
    spec: ModelSpec | None = None,
    fixed: dict | None = None,
    D: np.ndarray | None = None,
) -> PosteriorDraws:
    """Projected model: random effect P delta with p columns of delta.

    Q_delta is the p x p prior precision kernel; when omitted it is
    derived from the basis (mesh path) or from D (areal path).
    """
    y, x = _check_coef(coef)
    if spec is None:
        spec = ModelSpec(model="psfofr")
    if spec.model != "psfofr":
        raise ConfigError(f"spec.model is {spec.model!r}, expected 'psfofr'")
    P = np.asarray(proj.P, dtype=float)
    if P.shape[0] != y.shape[0]:
        raise DimensionError("projection rows must match the number of sites")
    if Q_delta is None and proj.rank > 0:
        Q_delta = delta_precision(proj, D=D)
    if proj.rank > 0:
        Q_delta = np.asarray(Q_delta, dtype=float)
        if Q_delta.shape != (proj.rank, proj.rank):
            raise DimensionError("Q_delta must be p x p")
        if not np.allclose(Q_delta, Q_delta.T, atol=1e-10):
            raise ValueError("Q_delta must be symmetric")
        eigs = np.linalg.eigvalsh((Q_delta + Q_delta.T) / 2.0)
        if eigs[0] < -1e-8 * max(abs(eigs[-1]), 1.0):
            raise ValueError("Q_delta must be positive semidefinite")
    return _gibbs(spec, y, x, P=P, Q_delta=Q_delta, fixed=fixed)


def fit_sfofr_continuous(
    coef: CoefficientSet,
    coords: np.ndarray,
    spec: ModelSpec | None = None,
    fixed: dict | None = None,
) -> PosteriorDraws:
    """Latent Matern model over point coordinates."""
    y, x = _check_coef(coef)
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape != (y.shape[0], 2):
        raise DimensionError("coords must be n x 2")
    if spec is None:
        spec = ModelSpec(model="sfofr", domain_kind="continuous")
    if spec.model != "sfofr" or spec.domain_kind != "continuous":
        raise ConfigError("spec must request the continuous sfofr model")
    return _gibbs(spec, y, x, coords=coords, fixed=fixed)


def fit_sfofr_discrete(
    coef: CoefficientSet,
    D: np.ndarray,
    spec: ModelSpec | None = None,
    fixed: dict | None = None,
) -> PosteriorDraws:
    """Latent intrinsic-autoregressive model over an adjacency graph.

    Latent columns are recentered to sum to zero each sweep; the
    intrinsic prior is improper without the constraint.
    """
    y, x = _check_coef(coef)
    D = np.asarray(D, dtype=float)
    validate_adjacency(D)
    if D.shape[0] != y.shape[0]:
        raise DimensionError("adjacency order must match the number of sites")
    if spec is None:
        spec = ModelSpec(model="sfofr", domain_kind="discrete")
    if spec.model != "sfofr" or spec.domain_kind != "discrete":
        raise ConfigError("spec must request the discrete sfofr model")
    Q = np.diag(D.sum(axis=1)) - D
    return _gibbs(spec, y, x, Q=Q, fixed=fixed)


def fit_fofr(
    coef: CoefficientSet,
    spec: ModelSpec | None = None,
    fixed: dict | None = None,
) -> PosteriorDraws:
    """Independent model: psi and tau2 only, no spatial effect."""
    y, x = _check_coef(coef)
    if spec is None:
        spec = ModelSpec(model="fofr")
    if spec.model != "fofr":
        raise ConfigError(f"spec.model is {spec.model!r}, expected 'fofr'")
    return _gibbs(spec, y, x, fixed=fixed)


def _spec_to_dict(spec: ModelSpec) -> dict:
    return asdict(spec)


def _spec_from_dict(data: dict) -> ModelSpec:
    priors = data.get("priors", {})
    for key in ("tau2_ig", "sigma2_ig", "rho_unif", "nu_gamma", "delta_prec_gamma"):
        if key in priors:
            priors[key] = tuple(priors[key])
    return ModelSpec(
        model=data["model"],
        domain_kind=data["domain_kind"],
        priors=PriorSpec(**priors),
        mcmc=McmcSpec(**data.get("mcmc", {})),
    )


def save_draws(draws: PosteriorDraws, dirpath: str) -> None:
    """Persist a chain as meta.json plus flat binaries and scalar CSVs.

    Arrays are little-endian 64-bit floats in row-major order with their
    dimensions recorded in the meta file.
    """
    os.makedirs(dirpath, exist_ok=True)
    meta = {
        "model": draws.model,
        "domain_kind": draws.domain_kind,
        "dims": {
            "U": draws.n_draws,
            "g_n": draws.psi.shape[1],
            "k_n": draws.psi.shape[2],
            "effect_rows": (
                None if draws.random_effect is None else draws.random_effect.shape[1]
            ),
        },
        "acceptance_rate_rho": draws.acceptance_rate_rho,
        "spec": _spec_to_dict(draws.spec),
        "format": {"dtype": "<f8", "order": "C"},
    }
    with open(os.path.join(dirpath, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
    np.ascontiguousarray(draws.psi, dtype="<f8").tofile(
        os.path.join(dirpath, "psi.bin")
    )
    if draws.random_effect is not None:
        np.ascontiguousarray(draws.random_effect, dtype="<f8").tofile(
            os.path.join(dirpath, "random_effect.bin")
        )
    for name in ("tau2", "sigma2", "nu", "rho"):
        chain = getattr(draws, name)
        if chain is None:
            continue
        with open(os.path.join(dirpath, f"{name}.csv"), "w") as fh:
            fh.write(name + "\n")
            fh.writelines(repr(float(v)) + "\n" for v in chain)


def load_draws(dirpath: str) -> PosteriorDraws:
    meta_path = os.path.join(dirpath, "meta.json")
    if not os.path.exists(meta_path):
        raise MissingFileError(f"no such file: {meta_path}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    dims = meta["dims"]
    u, g, k = dims["U"], dims["g_n"], dims["k_n"]
    psi = np.fromfile(os.path.join(dirpath, "psi.bin"), dtype="<f8").reshape(u, g, k)
    random_effect = None
    if dims["effect_rows"] is not None:
        random_effect = np.fromfile(
            os.path.join(dirpath, "random_effect.bin"), dtype="<f8"
        ).reshape(u, dims["effect_rows"], k)

    def _chain(name: str) -> np.ndarray | None:
        path = os.path.join(dirpath, f"{name}.csv")
        if not os.path.exists(path):
            return None
        with open(path) as fh:
            lines = fh.read().splitlines()
        return np.array([float(v) for v in lines[1:]])

    return PosteriorDraws(
        model=meta["model"],
        domain_kind=meta["domain_kind"],
        psi=psi,
        random_effect=random_effect,
        tau2=_chain("tau2"),
        sigma2=_chain("sigma2"),
        nu=_chain("nu"),
        rho=_chain("rho"),
        acceptance_rate_rho=meta["acceptance_rate_rho"],
        spec=_spec_from_dict(meta["spec"]),
    )
