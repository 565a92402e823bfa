"""Hot inner-loop kernels with numba-jitted and pure-numpy implementations.

The active implementation is picked at import time from the ``VPFP_NUMBA``
environment flag (see :mod:`vpfp.backend`).  Both variants stay importable
under explicit names so the benchmark can time them side by side.

Kernels:

- ``upwind_sweep``: conservative finite-volume advection in v with minmod
  limited second-order reconstruction, one constant speed per x-slice, open
  (zero inflow) boundaries.  Returns the new field and the summed boundary
  outflow flux (per unit dx, multiply by dx*dt externally for leaked mass).
- ``particle_push``: one Euler-Maruyama step of the scaled Langevin dynamics
  X' = V/eps, V' = E(X)/eps - V/eps^2 + sqrt(2)/eps * noise, with linear
  periodic interpolation of the field at particle positions.
"""

from __future__ import annotations

import numpy as np

from .backend import HAS_NUMBA, USE_NUMBA


def _minmod(a, b):
    if a > 0.0 and b > 0.0:
        return a if a < b else b
    if a < 0.0 and b < 0.0:
        return a if a > b else b
    return 0.0


def _upwind_sweep_loops(f, a, dv, wv, dt):
    Nx, Nv = f.shape
    f_new = np.empty_like(f)
    F = np.empty(Nv + 1)
    s = np.empty(Nv)
    outflow = 0.0
    for j in range(Nx):
        aj = a[j]
        s[0] = 0.0
        s[Nv - 1] = 0.0
        for k in range(1, Nv - 1):
            s[k] = _minmod(f[j, k + 1] - f[j, k], f[j, k] - f[j, k - 1]) / dv
        if aj >= 0.0:
            F[0] = 0.0
            for i in range(1, Nv):
                F[i] = aj * (f[j, i - 1] + 0.5 * (dv - aj * dt) * s[i - 1])
            F[Nv] = aj * f[j, Nv - 1]
        else:
            F[Nv] = 0.0
            for i in range(1, Nv):
                F[i] = aj * (f[j, i] - 0.5 * (dv + aj * dt) * s[i])
            F[0] = aj * f[j, 0]
        for k in range(Nv):
            f_new[j, k] = f[j, k] - dt * (F[k + 1] - F[k]) / wv[k]
        outflow += F[Nv] - F[0]
    return f_new, outflow


def upwind_sweep_numpy(f, a, dv, wv, dt):
    """Vectorized fallback equivalent to the jitted loops."""
    Nx, Nv = f.shape
    df = np.diff(f, axis=1)
    s = np.zeros_like(f)
    left = df[:, :-1]
    right = df[:, 1:]
    pos = (left > 0.0) & (right > 0.0)
    neg = (left < 0.0) & (right < 0.0)
    s[:, 1:-1] = np.where(pos, np.minimum(left, right), 0.0)
    s[:, 1:-1] += np.where(neg, np.maximum(left, right), 0.0)
    s[:, 1:-1] /= dv
    aa = a[:, None]
    apos = a >= 0.0
    F = np.zeros((Nx, Nv + 1))
    F_pos = aa * (f[:, :-1] + 0.5 * (dv - aa * dt) * s[:, :-1])
    F_neg = aa * (f[:, 1:] - 0.5 * (dv + aa * dt) * s[:, 1:])
    F[:, 1:-1] = np.where(apos[:, None], F_pos, F_neg)
    F[:, 0] = np.where(apos, 0.0, a * f[:, 0])
    F[:, -1] = np.where(apos, a * f[:, -1], 0.0)
    f_new = f - dt * np.diff(F, axis=1) / wv[None, :]
    outflow = float(np.sum(F[:, -1] - F[:, 0]))
    return f_new, outflow


def _particle_push_loops(X, V, disp, E, L, dx, eps, dt, noise):
    N = X.shape[0]
    Nx = E.shape[0]
    Xn = np.empty_like(X)
    Vn = np.empty_like(V)
    dn = np.empty_like(disp)
    c_noise = np.sqrt(2.0 * dt) / eps
    inv_eps2 = 1.0 / (eps * eps)
    for i in range(N):
        u = X[i] / dx
        j0 = int(u)
        if j0 >= Nx:
            j0 = Nx - 1
        frac = u - j0
        j1 = j0 + 1
        if j1 == Nx:
            j1 = 0
        Ei = (1.0 - frac) * E[j0] + frac * E[j1]
        step_x = (V[i] / eps) * dt
        xw = (X[i] + step_x) % L
        if xw >= L:  # IEEE mod of a tiny negative can land exactly on L
            xw = 0.0
        Xn[i] = xw
        dn[i] = disp[i] + step_x
        Vn[i] = V[i] + (Ei / eps - V[i] * inv_eps2) * dt + c_noise * noise[i]
    return Xn, Vn, dn


def particle_push_numpy(X, V, disp, E, L, dx, eps, dt, noise):
    """Vectorized fallback equivalent to the jitted loops."""
    Nx = E.shape[0]
    u = X / dx
    j0 = u.astype(np.int64)
    np.minimum(j0, Nx - 1, out=j0)
    frac = u - j0
    j1 = j0 + 1
    j1[j1 == Nx] = 0
    Ei = (1.0 - frac) * E[j0] + frac * E[j1]
    step_x = (V / eps) * dt
    Xn = (X + step_x) % L
    Xn[Xn >= L] = 0.0  # IEEE mod of a tiny negative can land exactly on L
    dn = disp + step_x
    Vn = V + (Ei / eps - V / eps**2) * dt + (np.sqrt(2.0 * dt) / eps) * noise
    return Xn, Vn, dn


if HAS_NUMBA:
    from numba import njit

    _minmod = njit(cache=True)(_minmod)  # resolved as a global by the sweep jit
    upwind_sweep_numba = njit(cache=True)(_upwind_sweep_loops)
    particle_push_numba = njit(cache=True)(_particle_push_loops)
else:  # pragma: no cover
    upwind_sweep_numba = None
    particle_push_numba = None

if USE_NUMBA:
    upwind_sweep = upwind_sweep_numba
    particle_push = particle_push_numba
else:
    upwind_sweep = upwind_sweep_numpy
    particle_push = particle_push_numpy
