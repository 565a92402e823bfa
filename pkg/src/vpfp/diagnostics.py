"""Observables for the diffusive-limit convergence study.

Everything here is a pure function of phase-space / spatial fields on the
shared grids: Maxwellian-weighted L^p norms, collision and Laplacian
dissipations, the shifted marginal and its surrogate field, translation
moduli, Holder seminorms of electric fields, the time-integrated error
decomposition against the drift-diffusion limit, and log-log rate fits.

Norms use the renormalized discrete Maxwellian and the shared trapezoid
weights throughout, so the power-mean (Jensen) ordering between exponents
and the Gaussian-Poincare comparison hold at the discrete level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import SpatialGrid, VelocityGrid
from .poisson import field_from_density, translate_field


def marginal(f: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    """Velocity integral rho(x_j) = sum_k w_k f[j, k]."""
    return f @ vgrid.w


def shifted_marginal(f: np.ndarray, eps: float, sgrid: SpatialGrid, vgrid: VelocityGrid) -> np.ndarray:
    """Marginal along shifted characteristics: sum_k w_k f(x_j + eps*v_k, v_k).

    The translations are evaluated as Fourier phase shifts, so the result is
    exact for band-limited data; the shifted phase-space field is never
    materialized.
    """
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    fk = np.fft.fft(f, axis=0)
    phase = np.exp(1j * sgrid.k[:, None] * (eps * vgrid.v[None, :]))
    pik = (fk * phase) @ vgrid.w
    return np.fft.ifft(pik).real


def lp_norm_x(u: np.ndarray, p: float, sgrid: SpatialGrid) -> float:
    """Discrete L^p norm over the periodic spatial domain."""
    if np.isinf(p):
        return float(np.max(np.abs(u)))
    return float(np.sum(np.abs(u) ** p * sgrid.dx) ** (1.0 / p))


def weighted_lp_norm(f: np.ndarray, p: float, sgrid: SpatialGrid, vgrid: VelocityGrid) -> float:
    """Maxwellian-weighted norm ( sum |f/M|^p M w dx )^(1/p)."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    g = np.abs(f / vgrid.M[None, :])
    val = np.einsum("jk,k->", g**p, vgrid.M * vgrid.w) * sgrid.dx
    return float(val ** (1.0 / p))


def fp_dissipation(f: np.ndarray, p: float, sgrid: SpatialGrid, vgrid: VelocityGrid) -> float:
    """Collision dissipation (p-1) * sum |d_v(f/M)|^2 |f/M|^(p-2) M w dx.

    The velocity derivative uses centered differences in the interior and
    one-sided differences at the truncation boundary.
    """
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    g = f / vgrid.M[None, :]
    dg = np.gradient(g, vgrid.dv, axis=1)
    if p == 2:
        weight = dg**2
    else:
        weight = dg**2 * np.abs(g) ** (p - 2)
    return float((p - 1) * np.einsum("jk,k->", weight, vgrid.M * vgrid.w) * sgrid.dx)


def laplace_dissipation(rho: np.ndarray, p: float, sgrid: SpatialGrid) -> float:
    """Laplacian dissipation (p-1) * sum |d_x rho|^2 |rho|^(p-2) dx (spectral d_x)."""
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    from .poisson import spectral_derivative

    dr = spectral_derivative(rho, sgrid)
    if p == 2:
        weight = dr**2
    else:
        weight = dr**2 * np.abs(rho) ** (p - 2)
    return float((p - 1) * np.sum(weight) * sgrid.dx)


def field_discrepancy(
    f: np.ndarray, rho_i: np.ndarray, eps: float, sgrid: SpatialGrid, vgrid: VelocityGrid
) -> float:
    """Sup-norm gap between the fields driven by the plain and shifted marginals."""
    E_plain = field_from_density(marginal(f, vgrid), rho_i, sgrid).E
    E_shift = field_from_density(shifted_marginal(f, eps, sgrid, vgrid), rho_i, sgrid).E
    return float(np.max(np.abs(E_plain - E_shift)))


def default_shifts(sgrid: SpatialGrid) -> tuple:
    """Dyadic grid shifts dx * 2^m up to length 1."""
    shifts = []
    s = sgrid.dx
    while s <= 1.0 + 1e-15:
        shifts.append(s)
        s *= 2.0
    return tuple(shifts)


def translation_modulus(
    f: np.ndarray,
    beta: float,
    p: float,
    shifts,
    sgrid: SpatialGrid,
    vgrid: VelocityGrid,
) -> float:
    """max over shifts of |x0|^(-beta) * || f(.+x0) - f ||_{L^p(M)}."""
    if len(shifts) == 0:
        raise ValueError("shift set must be nonempty")
    best = 0.0
    for x0 in shifts:
        if not (0.0 < abs(x0) <= 1.0):
            raise ValueError(f"shifts must satisfy 0 < |x0| <= 1, got {x0}")
        diff = translate_field(f, x0, sgrid) - f
        val = abs(x0) ** (-beta) * weighted_lp_norm(diff, p, sgrid, vgrid)
        if val > best:
            best = val
    return best


def initial_density_bound(rho0: np.ndarray, rhoi: np.ndarray, p: float, sgrid: SpatialGrid) -> float:
    """max( ||rho0||_{L^p}^2, ||rhoi||_{L^{p+1}}^{2-2/p^2}, ||rho0||_inf, ||rhoi||_inf )."""
    if p <= 1:
        raise ValueError(f"p must exceed 1, got {p}")
    return max(
        lp_norm_x(rho0, p, sgrid) ** 2,
        lp_norm_x(rhoi, p + 1, sgrid) ** (2.0 - 2.0 / p**2),
        float(np.max(np.abs(rho0))),
        float(np.max(np.abs(rhoi))),
    )


def gamma_exponent(p: float, d: int = 1) -> float:
    return 1.0 - d / p


def beta_exponent(p: float, d: int = 1) -> float:
    return (p - d) / (p - 1.0)


def validity_horizon(
    f0_norm_p: float,
    m_p: float,
    c_const: float,
    gamma: float,
    eps: float,
    c_calib: float = 1.0,
    d: int = 1,
) -> float:
    """Logarithmic time horizon of the rate experiment.

    T(eps) = 1/(c_const*c_calib) * ln(1 + c_const * eps^(-gamma)
             / (4*(f0_norm_p^2 + c_calib*m_p^2*eps^(gamma*(1+2/(p-1))))))

    with p recovered from gamma = 1 - d/p.  Grows to infinity as eps -> 0.
    c_calib stands in for an unspecified analysis constant and defaults to 1.
    """
    if min(f0_norm_p, m_p, c_const, gamma, eps, c_calib) <= 0:
        raise ValueError("all arguments must be positive")
    if gamma >= 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    p = d / (1.0 - gamma)
    expo = gamma * (1.0 + 2.0 / (p - 1.0))
    denom = 4.0 * (f0_norm_p**2 + c_calib * m_p**2 * eps**expo)
    return math.log(1.0 + c_const * eps ** (-gamma) / denom) / (c_const * c_calib)


def well_preparedness(
    f0: np.ndarray,
    rho0: np.ndarray,
    eps: float,
    p: float,
    beta: float,
    sgrid: SpatialGrid,
    vgrid: VelocityGrid,
    shifts=None,
) -> float:
    """Initial-data size: ||f0||_p + translation modulus + eps^(-beta) marginal gap.

    The third term vanishes (to roundoff) for product initial data.
    """
    if shifts is None:
        shifts = default_shifts(sgrid)
    t1 = weighted_lp_norm(f0, p, sgrid, vgrid)
    t2 = translation_modulus(f0, beta, p, shifts, sgrid, vgrid)
    t3 = eps ** (-beta) * lp_norm_x(marginal(f0, vgrid) - rho0, p, sgrid)
    return t1 + t2 + t3


def holder_seminorm(E: np.ndarray, gamma: float, sgrid: SpatialGrid) -> float:
    """C^{0,gamma} norm of a spatial field: sup |E| plus the brute-force
    max over node pairs of |E(x) - E(y)| / dist(x, y)^gamma with periodic
    distance."""
    if not (0.0 < gamma <= 1.0):
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    x = sgrid.x
    dxm = np.abs(x[:, None] - x[None, :])
    dist = np.minimum(dxm, sgrid.L - dxm)
    gaps = np.abs(E[:, None] - E[None, :])
    mask = dist > 0
    ratios = gaps[mask] / dist[mask] ** gamma
    semi = float(ratios.max()) if ratios.size else 0.0
    return semi + float(np.max(np.abs(E)))


@dataclass
class RateFit:
    slope: float
    intercept: float
    residual: float


def fit_rate(points) -> RateFit:
    """Least-squares line on (ln eps, ln err); the slope is the empirical rate."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points for a rate fit, got {len(pts)}")
    eps = np.array([p[0] for p in pts], dtype=float)
    err = np.array([p[1] for p in pts], dtype=float)
    if np.any(eps <= 0) or np.any(err <= 0):
        raise ValueError("rate fit requires positive epsilons and errors")
    le, lr = np.log(eps), np.log(err)
    slope, intercept = np.polyfit(le, lr, 1)
    resid = lr - (slope * le + intercept)
    return RateFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))


@dataclass
class ErrorDecomposition:
    """Time-integrated L^2 errors of a kinetic run against the fluid limit.

    e1: distance to the local equilibrium rho_eps (x) M
    e2: plain vs shifted marginal
    e3: shifted marginal vs fluid density
    total: distance to rho_fluid (x) M; satisfies total <= e1 + e2 + e3.
    """

    total: float
    e1: float
    e2: float
    e3: float
    times: np.ndarray = field(repr=False, default=None)
    e1_series: np.ndarray = field(repr=False, default=None)
    e2_series: np.ndarray = field(repr=False, default=None)
    e3_series: np.ndarray = field(repr=False, default=None)
    total_series: np.ndarray = field(repr=False, default=None)


def error_decomposition(
    kinetic_traj,
    fluid_traj,
    eps: float,
    sgrid: SpatialGrid,
    vgrid: VelocityGrid,
) -> ErrorDecomposition:
    """Trapezoid-in-time L^2 error decomposition over a shared schedule.

    ``kinetic_traj`` is a sequence of (t, f) snapshots and ``fluid_traj`` a
    sequence of (t, rho) snapshots on the same time schedule.
    """
    if len(kinetic_traj) != len(fluid_traj):
        raise ValueError(
            f"schedule mismatch: {len(kinetic_traj)} kinetic vs {len(fluid_traj)} fluid snapshots"
        )
    times = np.array([t for t, _ in kinetic_traj], dtype=float)
    times_f = np.array([t for t, _ in fluid_traj], dtype=float)
    if not np.allclose(times, times_f, rtol=0.0, atol=1e-9):
        raise ValueError("schedule mismatch: kinetic and fluid snapshot times differ")
    n = len(times)
    e1 = np.empty(n)
    e2 = np.empty(n)
    e3 = np.empty(n)
    tot = np.empty(n)
    for i, ((_, f), (_, rho_fl)) in enumerate(zip(kinetic_traj, fluid_traj)):
        rho_eps = marginal(f, vgrid)
        pi_eps = shifted_marginal(f, eps, sgrid, vgrid)
        e1[i] = weighted_lp_norm(f - np.outer(rho_eps, vgrid.M), 2, sgrid, vgrid)
        e2[i] = lp_norm_x(rho_eps - pi_eps, 2, sgrid)
        e3[i] = lp_norm_x(pi_eps - rho_fl, 2, sgrid)
        tot[i] = weighted_lp_norm(f - np.outer(rho_fl, vgrid.M), 2, sgrid, vgrid)
    if n == 1:
        ints = [0.0, 0.0, 0.0, 0.0]
    else:
        ints = [float(np.trapezoid(s**2, times)) for s in (tot, e1, e2, e3)]
    return ErrorDecomposition(
        total=math.sqrt(ints[0]),
        e1=math.sqrt(ints[1]),
        e2=math.sqrt(ints[2]),
        e3=math.sqrt(ints[3]),
        times=times,
        e1_series=e1,
        e2_series=e2,
        e3_series=e3,
        total_series=tot,
    )


@dataclass
class DiagnosticsRecord:
    """Per-snapshot observables; one CSV row in diagnostics.csv."""

    t: float
    mass: float
    lp_norms: dict
    f_minus_rhoeps_M_l2: float
    rhoeps_minus_pieps_l2: float
    pieps_minus_rho_l2: float
    field_discrepancy_inf: float
    d2_dissipation: float
    e1_sq_int: float = 0.0
    e2_sq_int: float = 0.0
    e3_sq_int: float = 0.0
    total_sq_int: float = 0.0


def build_record(
    t: float,
    f: np.ndarray,
    rho_fluid: np.ndarray,
    rho_i: np.ndarray,
    eps: float,
    sgrid: SpatialGrid,
    vgrid: VelocityGrid,
    p_list=(2, 4),
) -> DiagnosticsRecord:
    """Instantaneous observables at time t (running integrals left at zero)."""
    rho_eps = marginal(f, vgrid)
    pi_eps = shifted_marginal(f, eps, sgrid, vgrid)
    mass = float(rho_eps @ np.full(sgrid.Nx, sgrid.dx))
    lp = {p: weighted_lp_norm(f, p, sgrid, vgrid) for p in p_list}
    return DiagnosticsRecord(
        t=float(t),
        mass=mass,
        lp_norms=lp,
        f_minus_rhoeps_M_l2=weighted_lp_norm(f - np.outer(rho_eps, vgrid.M), 2, sgrid, vgrid),
        rhoeps_minus_pieps_l2=lp_norm_x(rho_eps - pi_eps, 2, sgrid),
        pieps_minus_rho_l2=lp_norm_x(pi_eps - rho_fluid, 2, sgrid),
        field_discrepancy_inf=field_discrepancy(f, rho_i, eps, sgrid, vgrid),
        d2_dissipation=fp_dissipation(f, 2, sgrid, vgrid),
    )


class ListSink:
    """Minimal diagnostics sink collecting records in order."""

    def __init__(self):
        self.records = []

    def emit(self, record: DiagnosticsRecord):
        self.records.append(record)
