"""Spectral Poisson solver on the torus with zero-mean gauge, plus periodic
spectral translation of fields.

The solve is exact on resolved Fourier modes, so the electric fields carry no
discretization error into the epsilon-convergence study.  The potential is
gauged by phi_hat(0) = 0, and E = -d(phi)/dx via spectral differentiation
(Nyquist derivative set to zero).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import SpatialGrid


@dataclass(frozen=True)
class FieldPair:
    """Potential and electric field sampled on the spatial grid."""

    phi: np.ndarray
    E: np.ndarray


def solve_poisson(charge: np.ndarray, grid: SpatialGrid) -> FieldPair:
    """Solve -phi'' = charge with periodic BC, mean(phi) = 0, E = -phi'.

    The charge must have zero mean (torus compatibility); violations signal
    a broken neutrality assumption upstream and are rejected.
    """
    mean = float(np.mean(charge))
    scale = max(1.0, float(np.max(np.abs(charge)))) if charge.size else 1.0
    if abs(mean) > 1e-10 * scale:
        raise ValueError(f"charge must have zero mean, got mean = {mean!r}")
    ck = np.fft.rfft(charge)
    kk = 2.0 * np.pi * np.fft.rfftfreq(grid.Nx, d=grid.dx)
    phik = np.zeros_like(ck)
    phik[1:] = ck[1:] / kk[1:] ** 2
    Ek = -1j * kk * phik
    if grid.Nx % 2 == 0:
        Ek[-1] = 0.0
    phi = np.fft.irfft(phik, n=grid.Nx)
    E = np.fft.irfft(Ek, n=grid.Nx)
    return FieldPair(phi=phi, E=E)


def field_from_density(rho: np.ndarray, rho_i: np.ndarray, grid: SpatialGrid) -> FieldPair:
    """Electric field generated by the charge imbalance rho - rho_i."""
    mean_gap = abs(float(np.mean(rho)) - float(np.mean(rho_i)))
    if mean_gap > 1e-10:
        raise ValueError(f"mean(rho) and mean(rho_i) must agree, gap = {mean_gap!r}")
    return solve_poisson(rho - rho_i, grid)


def translate_field(u: np.ndarray, x0: float, grid: SpatialGrid) -> np.ndarray:
    """Periodic translation u(. + x0) by trigonometric interpolation.

    Works on spatial fields (Nx,) and phase-space fields (Nx, Nv); the shift
    acts along axis 0.  Exact for band-limited data.
    """
    phase = np.exp(1j * grid.k * (float(x0) % grid.L))
    if u.ndim == 2:
        phase = phase[:, None]
    return np.fft.ifft(np.fft.fft(u, axis=0) * phase, axis=0).real


def spectral_derivative(u: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """d/dx by Fourier multiplier i*k; Nyquist mode zeroed for even Nx."""
    uk = np.fft.rfft(u)
    kk = 2.0 * np.pi * np.fft.rfftfreq(grid.Nx, d=grid.dx)
    duk = 1j * kk * uk
    if grid.Nx % 2 == 0:
        duk[-1] = 0.0
    return np.fft.irfft(duk, n=grid.Nx)
