"""Stochastic oracle: the Langevin dynamics underlying the kinetic model.

Particles follow

    dX = (V/eps) dt,
    dV = (E(X)/eps - V/eps^2) dt + sqrt(2)/eps dW,

integrated by explicit Euler-Maruyama with dt <= 0.1*eps^2 (stability of the
stiff velocity relaxation; bias at oracle scale sits below the Monte-Carlo
noise floor for the dt used in the checks).  Noise is drawn from a counter
RNG keyed by (seed, step index), so trajectories are reproducible regardless
of how the push itself is parallelized.

The module also drives the cross-check against the grid solver: particles
and the kinetic state advance in lockstep, with the solver's self-consistent
field (frozen per step, linearly interpolated at particle positions) forcing
the ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import SimConfig
from .diagnostics import marginal
from .grids import SpatialGrid, VelocityGrid, initial_data
from .kernels import particle_push
from .poisson import FieldPair


def _rng(seed: int, counter: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, counter], dtype=np.uint64)))


@dataclass
class ParticleEnsemble:
    """N particles on the periodic domain; ``disp`` tracks the unwrapped
    displacement since t = 0 (X == (X0 + disp) mod L)."""

    X: np.ndarray
    V: np.ndarray
    disp: np.ndarray
    eps: float
    t: float
    seed: int
    step_index: int
    L: float


def sample_ensemble(
    n: int,
    rho: np.ndarray,
    sgrid: SpatialGrid,
    eps: float,
    seed: int,
    v_sigma: float = 1.0,
) -> ParticleEnsemble:
    """Draw (X, V) with X ~ rho/mean(rho) (inverse CDF on a refined table)
    and V ~ N(0, v_sigma^2); v_sigma = 1 samples the Maxwellian."""
    rng = _rng(seed, 0)
    # piecewise-linear CDF on a 32x refined periodic grid
    fine = 32
    xf = np.linspace(0.0, sgrid.L, fine * sgrid.Nx + 1)
    rho_fine = np.interp(xf, np.append(sgrid.x, sgrid.L), np.append(rho, rho[0]))
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (rho_fine[1:] + rho_fine[:-1]) * np.diff(xf))])
    cdf /= cdf[-1]
    u = rng.uniform(0.0, 1.0, size=n)
    X = np.interp(u, cdf, xf) % sgrid.L
    V = rng.normal(0.0, v_sigma, size=n)
    return ParticleEnsemble(
        X=X, V=V, disp=np.zeros(n), eps=float(eps), t=0.0, seed=int(seed), step_index=0, L=sgrid.L
    )


def step_particles(ens: ParticleEnsemble, field: FieldPair, dt: float, sgrid: SpatialGrid) -> ParticleEnsemble:
    """One Euler-Maruyama step with the field frozen over the step."""
    if dt == 0.0:
        return ens
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    if dt > 0.1 * ens.eps**2 + 1e-15:
        raise ValueError(f"dt = {dt:.3g} violates dt <= 0.1*eps^2 = {0.1 * ens.eps**2:.3g}")
    noise = _rng(ens.seed, ens.step_index + 1).standard_normal(ens.X.shape[0])
    X, V, disp = particle_push(
        ens.X, ens.V, ens.disp, field.E, ens.L, sgrid.dx, ens.eps, dt, noise
    )
    return replace(ens, X=X, V=V, disp=disp, t=ens.t + dt, step_index=ens.step_index + 1)


def histogram_density(ens: ParticleEnsemble, sgrid: SpatialGrid) -> np.ndarray:
    """Particle density estimate on the Nx cells [j*dx, (j+1)*dx)."""
    bins = np.minimum((ens.X / sgrid.dx).astype(np.int64), sgrid.Nx - 1)
    counts = np.bincount(bins, minlength=sgrid.Nx)
    return counts / (ens.X.shape[0] * sgrid.dx)


def compare_marginals(
    ens: ParticleEnsemble, f: np.ndarray, sgrid: SpatialGrid, vgrid: VelocityGrid
) -> dict:
    """L1 distance between the particle X-histogram and the grid marginal,
    plus the first two velocity moment gaps, with Monte-Carlo standard
    errors.  JSON-serializable."""
    n = ens.X.shape[0]
    rho = marginal(f, vgrid)
    mass = float(np.sum(rho) * sgrid.dx)
    rho_hat = histogram_density(ens, sgrid) * mass
    l1 = float(np.sum(np.abs(rho_hat - rho)) * sgrid.dx)
    p_hat = rho_hat * sgrid.dx / mass
    l1_se = float(np.sum(np.sqrt(np.maximum(p_hat * (1.0 - p_hat), 0.0) / n)) * mass)
    tv = float(np.sum(np.abs(np.diff(np.append(rho, rho[0])))))

    wv = vgrid.w * sgrid.dx
    m1_field = float(np.einsum("jk,k->", f, wv * vgrid.v) / mass)
    m2_field = float(np.einsum("jk,k->", f, wv * vgrid.v**2) / mass)
    m1_part = float(np.mean(ens.V))
    m2_part = float(np.mean(ens.V**2))
    return {
        "n_particles": n,
        "t": ens.t,
        "epsilon": ens.eps,
        "seed": ens.seed,
        "hist_l1": l1,
        "hist_l1_se": l1_se,
        "tv_rho": tv,
        "bin_width": sgrid.dx,
        "hist_tolerance": 5.0 * l1_se + 2.0 * sgrid.dx * tv,
        "v_mean_particles": m1_part,
        "v_mean_field": m1_field,
        "v_mean_gap": abs(m1_part - m1_field),
        "v_mean_se": float(np.std(ens.V) / np.sqrt(n)),
        "v_msq_particles": m2_part,
        "v_msq_field": m2_field,
        "v_msq_gap": abs(m2_part - m2_field),
        "v_msq_se": float(np.std(ens.V**2) / np.sqrt(n)),
    }


def oracle_run(
    cfg: SimConfig,
    n_particles: int,
    t_target: float,
    seed: int | None = None,
    theta_sde: float = 0.01,
):
    """Advance the kinetic solver and a particle ensemble in lockstep to
    t_target and report the marginal comparison.

    The ensemble is driven by the solver's field at each step start; the
    phase-space dynamics of the two representations remain independent.
    Particle substeps are capped at theta_sde * eps^2 (default 0.01), which
    keeps the Euler-Maruyama velocity-variance bias (~theta/2) below the
    Monte-Carlo noise floor at the check's particle counts.
    Returns (report, ensemble, kinetic_state).
    """
    from .kinetic import kinetic_dt, make_state, step_vpfp

    if seed is None:
        seed = cfg.seed
    sgrid, vgrid = cfg.build_grids()
    f0, rho0, rho_i = initial_data(cfg.init, sgrid, vgrid)
    eps = cfg.epsilon
    if eps is None:
        raise ValueError("config must set epsilon for an oracle run")

    dt, _, _ = kinetic_dt(cfg, eps, vgrid)
    if dt == 0.0 or t_target <= 0.0:
        state = make_state(f0, 0.0, eps, rho_i, sgrid, vgrid)
        ens = sample_ensemble(n_particles, rho0, sgrid, eps, seed)
        return compare_marginals(ens, f0, sgrid, vgrid), ens, state
    n_steps = max(1, round(t_target / dt))
    dt = t_target / n_steps
    n_sub = max(1, int(np.ceil(dt / (min(0.1, theta_sde) * eps**2) - 1e-12)))
    dt_o = dt / n_sub

    state = make_state(f0, 0.0, eps, rho_i, sgrid, vgrid)
    ens = sample_ensemble(n_particles, rho0, sgrid, eps, seed)
    for _ in range(n_steps):
        for _ in range(n_sub):
            ens = step_particles(ens, state.field, dt_o, sgrid)
        state = step_vpfp(state, dt, rho_i, sgrid, vgrid)
    report = compare_marginals(ens, state.f, sgrid, vgrid)
    report["n_steps"] = n_steps
    report["dt_particles"] = dt_o
    return report, ens, state
