"""Phase-space solver and convergence laboratory for the kinetic
Vlasov-Poisson-Fokker-Planck model in the diffusive scaling, its
drift-diffusion-Poisson limit, and the diagnostics that quantify the
distance between the two as the scaling parameter epsilon shrinks.
"""

__version__ = "0.1.0"

from .backend import HAS_NUMBA, USE_NUMBA, backend_name
from .config import ConfigError, SimConfig, default_config, load_config, parse_config
from .diagnostics import (
    DiagnosticsRecord,
    ErrorDecomposition,
    ListSink,
    RateFit,
    beta_exponent,
    default_shifts,
    error_decomposition,
    field_discrepancy,
    fit_rate,
    fp_dissipation,
    gamma_exponent,
    holder_seminorm,
    initial_density_bound,
    laplace_dissipation,
    lp_norm_x,
    marginal,
    shifted_marginal,
    translation_modulus,
    validity_horizon,
    weighted_lp_norm,
    well_preparedness,
)
from .fluid import FluidState, run_ddp, step_ddp
from .grids import (
    CosineSeries,
    InitSpec,
    SpatialGrid,
    VelocityGrid,
    build_grids,
    initial_data,
    maxwellian,
    spatial_grid,
    velocity_grid,
)
from .kinetic import (
    KineticState,
    acceleration_step,
    fokker_planck_step,
    kinetic_dt,
    mass,
    run_vpfp,
    step_vpfp,
    transport_step,
)
from .poisson import FieldPair, field_from_density, solve_poisson, translate_field
from .sde import ParticleEnsemble, compare_marginals, oracle_run, sample_ensemble, step_particles
