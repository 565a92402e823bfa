"""Periodic spatial grids, truncated velocity grids, and initial phase-space data.

Phase-space densities are plain ``(Nx, Nv)`` float arrays sampled on the
tensor grid; spatial fields are ``(Nx,)`` arrays.  The velocity grid carries
trapezoid quadrature weights and a discrete Maxwellian renormalized so its
discrete mass is exactly one, which makes product states ``rho (x) M`` exact
discrete equilibria of the collision step.  All velocity integrals treat the
density as zero outside ``[-Vmax, Vmax]``; with the default ``Vmax = 8`` the
neglected Gaussian mass is below 1.3e-15.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT_2PI = float(np.sqrt(2.0 * np.pi))


def maxwellian(v):
    """Unit-mass Gaussian velocity profile (2*pi)^(-1/2) exp(-v^2/2)."""
    return np.exp(-0.5 * np.square(v)) / SQRT_2PI


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid on [0, L): x_j = j*L/Nx, j = 0..Nx-1."""

    L: float
    Nx: int
    dx: float
    x: np.ndarray
    k: np.ndarray  # angular wavenumbers 2*pi*m/L in FFT ordering


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform grid on [-Vmax, Vmax] with trapezoid weights.

    ``M`` is the sampled Maxwellian divided by its trapezoid mass, so that
    sum(w * M) == 1 to machine precision.
    """

    Vmax: float
    Nv: int
    dv: float
    v: np.ndarray
    w: np.ndarray
    M: np.ndarray


def spatial_grid(Nx: int, L: float = 1.0) -> SpatialGrid:
    if Nx < 8 or (Nx & (Nx - 1)) != 0:
        raise ValueError(f"Nx must be a power of two >= 8, got {Nx}")
    dx = L / Nx
    x = np.arange(Nx) * dx
    k = 2.0 * np.pi * np.fft.fftfreq(Nx, d=dx)
    return SpatialGrid(L=float(L), Nx=Nx, dx=dx, x=x, k=k)


def velocity_grid(Nv: int, Vmax: float = 8.0) -> VelocityGrid:
    if Nv < 8:
        raise ValueError(f"Nv must be >= 8, got {Nv}")
    if Vmax < 6.0:
        raise ValueError(f"Vmax must be >= 6 (velocity truncation unsafe), got {Vmax}")
    v = np.linspace(-Vmax, Vmax, Nv)
    v = 0.5 * (v - v[::-1])  # exact antisymmetry v_k = -v_{Nv-1-k}
    dv = 2.0 * Vmax / (Nv - 1)
    w = np.full(Nv, dv)
    w[0] *= 0.5
    w[-1] *= 0.5
    M = maxwellian(v)
    M = M / np.sum(w * M)
    return VelocityGrid(Vmax=float(Vmax), Nv=Nv, dv=dv, v=v, w=w, M=M)


def build_grids(Nx: int, Nv: int, Vmax: float = 8.0, L: float = 1.0):
    """Construct the (spatial, velocity) grid pair with validated parameters."""
    return spatial_grid(Nx, L), velocity_grid(Nv, Vmax)


@dataclass(frozen=True)
class CosineSeries:
    """Finite cosine series  mean + sum_m amp_m * cos(2*pi*m*x/L)."""

    mean: float
    modes: tuple  # tuple of (m, amplitude) pairs, m >= 1

    def evaluate(self, grid: SpatialGrid) -> np.ndarray:
        u = np.full(grid.Nx, float(self.mean))
        for m, amp in self.modes:
            u = u + amp * np.cos(2.0 * np.pi * m * grid.x / grid.L)
        return u


@dataclass(frozen=True)
class InitSpec:
    """Initial electron density rho0 and ion background rhoi as cosine series."""

    rho0: CosineSeries
    rhoi: CosineSeries


def initial_data(spec: InitSpec, sgrid: SpatialGrid, vgrid: VelocityGrid):
    """Build well-prepared initial data f0 = rho0 (x) M plus the densities.

    Well-prepared means the marginal of f0 is exactly rho0 on the grid, so
    the initial kinetic state carries no extra marginal mismatch.  Rejects
    densities that are not strictly positive on the grid and mean mismatch
    between rho0 and rhoi beyond 1e-12 (torus compatibility).
    """
    rho0 = spec.rho0.evaluate(sgrid)
    rhoi = spec.rhoi.evaluate(sgrid)
    if rho0.min() <= 0.0:
        raise ValueError(f"rho0 must be positive on the grid, min = {rho0.min():.6g}")
    if rhoi.min() <= 0.0:
        raise ValueError(f"rhoi must be positive on the grid, min = {rhoi.min():.6g}")
    mean0 = float(np.mean(rho0))
    meani = float(np.mean(rhoi))
    if abs(mean0 - meani) > 1e-12:
        raise ValueError(
            f"mean(rho0) = {mean0!r} and mean(rhoi) = {meani!r} must agree to 1e-12"
        )
    f0 = np.outer(rho0, vgrid.M)
    return f0, rho0, rhoi
