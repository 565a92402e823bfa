from dataclasses import replace

import pytest

from vpfp.cli import run_convergence_sweep
from vpfp.config import default_config
from vpfp.grids import build_grids, initial_data

ACCEPTANCE_EPSILONS = (0.2, 0.1, 0.05, 0.025)


@pytest.fixture(scope="session")
def acceptance_config():
    """Desk-scale base config: Nx=128, Nv=256, Vmax=8, rho0 = 1 + 0.5cos(2pi x),
    rhoi = 1, T_final = 0.5, p in {2, 4}."""
    return default_config()


@pytest.fixture(scope="session")
def grids128():
    return build_grids(128, 256, 8.0)


@pytest.fixture(scope="session")
def acceptance_initial(acceptance_config, grids128):
    sgrid, vgrid = grids128
    return initial_data(acceptance_config.init, sgrid, vgrid)


@pytest.fixture(scope="session")
def acceptance_sweep(acceptance_config):
    """The full epsilon sweep; shared across the acceptance criteria."""
    cfg = replace(acceptance_config, epsilons=ACCEPTANCE_EPSILONS, epsilon=None)
    return run_convergence_sweep(cfg, out_dir=None, jobs=4)
