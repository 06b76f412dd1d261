"""Shared fixtures: one small simulated dataset and one small fitted model.

Session-scoped so the expensive pieces (data generation, a short MCMC run)
are paid once and reused by the posterior, kriging, and CLI tests.
"""

import numpy as np
import pytest

from sfofr.curves import to_basis
from sfofr.projection import build_mesh, projection_point
from sfofr.sampler import McmcSpec, ModelSpec, PriorSpec, fit_psfofr
from sfofr.simulate import SimConfig, generate


def mcmc(iters, burnin, thin, seed=0, **kw):
    return McmcSpec(iters=iters, burnin=burnin, thin=thin, seed=seed, **kw)


def model_spec(model, iters, burnin, thin, seed=0, domain_kind="continuous"):
    return ModelSpec(
        model=model,
        domain_kind=domain_kind,
        priors=PriorSpec(),
        mcmc=mcmc(iters, burnin, thin, seed=seed),
    )


@pytest.fixture(scope="session")
def small_sim():
    return generate(SimConfig(n=120, seed=3))


@pytest.fixture(scope="session")
def small_mesh(small_sim):
    xy = small_sim.train.spatial.coords
    bounds = ((xy[:, 0].min(), xy[:, 0].max()), (xy[:, 1].min(), xy[:, 1].max()))
    return build_mesh(bounds, max_edge=0.3, margin=0.1)


@pytest.fixture(scope="session")
def small_projection(small_sim, small_mesh):
    return projection_point(small_mesh, small_sim.train.spatial.coords, p=10)


@pytest.fixture(scope="session")
def small_coef(small_sim):
    return to_basis(small_sim.train, small_sim.basis, small_sim.basis)


@pytest.fixture(scope="session")
def small_psfofr(small_coef, small_projection):
    spec = model_spec("psfofr", iters=2400, burnin=600, thin=6, seed=3)
    return fit_psfofr(small_coef, small_projection, spec=spec)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
