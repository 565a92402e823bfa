import numpy as np
import pytest

from vpfp.config import parse_config
from vpfp.diagnostics import ListSink, fp_dissipation, marginal, weighted_lp_norm
from vpfp.grids import CosineSeries, InitSpec, build_grids, initial_data
from vpfp.kinetic import (
    acceleration_step,
    fokker_planck_step,
    kinetic_dt,
    make_state,
    mass,
    run_vpfp,
    step_vpfp,
    transport_step,
)
from vpfp.poisson import FieldPair


@pytest.fixture(scope="module")
def grids():
    return build_grids(128, 256, 8.0)


@pytest.fixture(scope="module")
def cosine_product(grids):
    sg, vg = grids
    spec = InitSpec(rho0=CosineSeries(1.0, ((1, 0.5),)), rhoi=CosineSeries(1.0, ()))
    return initial_data(spec, sg, vg)


def zero_field(nx):
    return FieldPair(phi=np.zeros(nx), E=np.zeros(nx))


# ------------------------------------------------------------- collisions


@pytest.mark.parametrize("dt,eps", [(0.01, 0.1), (0.0025, 0.05), (0.05, 0.2)])
def test_collision_fixes_local_equilibrium(grids, cosine_product, dt, eps):
    sg, vg = grids
    f0, _, _ = cosine_product
    out = fokker_planck_step(f0, dt, eps, sg, vg)
    assert np.max(np.abs(out - f0)) <= 1e-13 * np.max(f0)


@pytest.mark.parametrize("theta", [0.05, 0.1])
def test_collision_first_moment_ou_decay(grids, theta):
    # the v-mean of (1 + c v) M relaxes by the exact OU factor e^{-dt/eps^2}
    sg, vg = grids
    eps = 0.1
    f = np.tile((1.0 + 0.1 * vg.v) * vg.M, (sg.Nx, 1))
    before = float(np.einsum("jk,k->", f, vg.w * vg.v)) * sg.dx
    out = fokker_planck_step(f, theta * eps**2, eps, sg, vg)
    after = float(np.einsum("jk,k->", out, vg.w * vg.v)) * sg.dx
    assert abs(after - np.exp(-theta) * before) <= theta**2 * abs(before)


def test_collision_conserves_mass(grids, cosine_product):
    sg, vg = grids
    f0, _, _ = cosine_product
    out = fokker_planck_step(f0 * (1.0 + 0.2 * np.abs(vg.v[None, :]) / 8.0), 0.02, 0.1, sg, vg)
    m_in = mass(f0 * (1.0 + 0.2 * np.abs(vg.v[None, :]) / 8.0), sg, vg)
    assert mass(out, sg, vg) == pytest.approx(m_in, rel=1e-13)


def test_collision_preserves_positivity(grids):
    sg, vg = grids
    rng = np.random.default_rng(17)
    f = rng.uniform(0.0, 1.0, size=(sg.Nx, vg.Nv)) * vg.M[None, :]
    out = fokker_planck_step(f, 0.05, 0.1, sg, vg)
    assert out.min() >= -1e-14 * out.max()


def test_collision_dissipates_weighted_l2(grids):
    sg, vg = grids
    rng = np.random.default_rng(23)
    rho = 1.0 + 0.3 * np.cos(2 * np.pi * sg.x)
    f = np.outer(rho, vg.M) * (1.0 + 0.1 * np.sin(vg.v)[None, :] * np.cos(2 * np.pi * sg.x)[:, None])
    n0 = weighted_lp_norm(f, 2, sg, vg)
    for _ in range(5):
        f = fokker_planck_step(f, 0.01, 0.1, sg, vg)
        n1 = weighted_lp_norm(f, 2, sg, vg)
        assert n1 <= n0 * (1 + 1e-12)
        n0 = n1
    assert fp_dissipation(f, 2, sg, vg) >= 0.0


def test_collision_rejects_corrupted_state(grids, cosine_product):
    sg, vg = grids
    f = cosine_product[0].copy()
    f[3, 5] = np.nan
    with pytest.raises(FloatingPointError):
        fokker_planck_step(f, 0.01, 0.1, sg, vg)


def test_collision_rejects_bad_arguments(grids, cosine_product):
    sg, vg = grids
    with pytest.raises(ValueError):
        fokker_planck_step(cosine_product[0], -0.1, 0.1, sg, vg)
    with pytest.raises(ValueError):
        fokker_planck_step(cosine_product[0], 0.1, 0.0, sg, vg)


# -------------------------------------------------------------- transport


def test_transport_homogeneous_invariant(grids):
    sg, vg = grids
    f = np.tile(vg.M, (sg.Nx, 1))
    out = transport_step(f, 0.01, 0.1, sg, vg)
    assert np.max(np.abs(out - f)) < 1e-15


def test_transport_exact_free_streaming(grids):
    sg, vg = grids
    f = np.cos(2 * np.pi * sg.x)[:, None] * vg.M[None, :]
    dt, eps = 0.01, 0.1
    out = transport_step(f, dt, eps, sg, vg)
    exact = np.cos(2 * np.pi * (sg.x[:, None] - vg.v[None, :] * dt / eps)) * vg.M[None, :]
    assert np.max(np.abs(out - exact)) < 1e-12


def test_transport_conserves_mass(grids, cosine_product):
    sg, vg = grids
    f0, _, _ = cosine_product
    out = transport_step(f0, 0.004, 0.05, sg, vg)
    assert mass(out, sg, vg) == pytest.approx(mass(f0, sg, vg), rel=1e-13)


def test_transport_reversibility(grids, cosine_product):
    sg, vg = grids
    f0, _, _ = cosine_product
    out = transport_step(transport_step(f0, 0.01, 0.1, sg, vg), -0.01, 0.1, sg, vg)
    assert np.max(np.abs(out - f0)) < 1e-12


# ------------------------------------------------------------ acceleration


def test_acceleration_zero_field_identity(grids, cosine_product):
    sg, vg = grids
    f0, _, _ = cosine_product
    out, leaked = acceleration_step(f0, zero_field(sg.Nx), 0.001, 0.1, sg, vg)
    assert np.array_equal(out, f0)
    assert leaked == 0.0


def test_acceleration_uniform_field_shifts_mean_velocity(grids, cosine_product):
    # characteristics v' = E/eps: mean velocity gains +E*dt/eps per step
    sg, vg = grids
    f0, _, _ = cosine_product
    eps, E0 = 0.1, 0.05
    field = FieldPair(phi=np.zeros(sg.Nx), E=np.full(sg.Nx, E0))
    dt = 0.4 * eps * vg.dv / E0
    f, n_steps = f0.copy(), 25
    for _ in range(n_steps):
        f, _ = acceleration_step(f, field, dt, eps, sg, vg)
    mw = vg.w * vg.v
    mean0 = float(np.einsum("jk,k->", f0, mw)) * sg.dx / mass(f0, sg, vg)
    mean1 = float(np.einsum("jk,k->", f, mw)) * sg.dx / mass(f, sg, vg)
    assert mean1 - mean0 == pytest.approx(n_steps * E0 * dt / eps, abs=0.5 * vg.dv)


def test_acceleration_rejects_cfl_violation(grids, cosine_product):
    sg, vg = grids
    f0, _, _ = cosine_product
    field = FieldPair(phi=np.zeros(sg.Nx), E=np.full(sg.Nx, 1.0))
    with pytest.raises(ValueError, match="CFL"):
        acceleration_step(f0, field, 10.0 * vg.dv, 1.0, sg, vg)


def test_acceleration_interior_support_no_leak(grids):
    sg, vg = grids
    f = np.outer(np.ones(sg.Nx), np.exp(-vg.v**2))  # supported well inside
    field = FieldPair(phi=np.zeros(sg.Nx), E=np.full(sg.Nx, 0.1))
    _, leaked = acceleration_step(f, field, 0.2 * vg.dv, 1.0, sg, vg)
    assert abs(leaked) < 1e-14


def test_acceleration_leak_accounts_for_mass(grids):
    # push a boundary-hugging bump outward: mass loss equals reported leak
    sg, vg = grids
    f = np.outer(np.ones(sg.Nx), np.exp(-0.5 * (vg.v - 7.0) ** 2))
    field = FieldPair(phi=np.zeros(sg.Nx), E=np.full(sg.Nx, 0.5))
    f_new, leaked = acceleration_step(f, field, 0.5 * vg.dv, 1.0, sg, vg)
    assert leaked > 0.0
    assert mass(f, sg, vg) - mass(f_new, sg, vg) == pytest.approx(leaked, rel=1e-10)


def test_acceleration_preserves_positivity(grids):
    sg, vg = grids
    rng = np.random.default_rng(31)
    f = rng.uniform(0.0, 1.0, size=(sg.Nx, vg.Nv)) * vg.M[None, :]
    a_max = 0.5 * vg.dv  # CFL 0.5 at dt = 1
    field = FieldPair(phi=np.zeros(sg.Nx), E=rng.uniform(-a_max, a_max, sg.Nx))
    out, _ = acceleration_step(f, field, 1.0, 1.0, sg, vg)
    assert out.min() >= -1e-15 * out.max()


# ---------------------------------------------------------------- stepping


def test_global_equilibrium_is_stationary(grids):
    sg, vg = grids
    spec = InitSpec(rho0=CosineSeries(1.0, ()), rhoi=CosineSeries(1.0, ()))
    f0, _, rhoi = initial_data(spec, sg, vg)
    state = make_state(f0, 0.0, 0.1, rhoi, sg, vg)
    for _ in range(100):
        state = step_vpfp(state, 0.0025, rhoi, sg, vg)
    assert np.max(np.abs(state.f - f0)) <= 1e-12


def test_long_run_mass_conservation(grids, cosine_product):
    sg, vg = grids
    f0, _, rhoi = cosine_product
    state = make_state(f0, 0.0, 0.1, rhoi, sg, vg)
    m0 = mass(f0, sg, vg)
    for _ in range(1000):
        state = step_vpfp(state, 0.0005, rhoi, sg, vg)
    drift = abs(mass(state.f, sg, vg) + state.mass_leaked - m0)
    assert drift <= 1e-10 * m0
    assert state.mass_leaked < 1e-10 * m0


def test_positivity_monitor_along_run(grids, cosine_product):
    sg, vg = grids
    f0, _, rhoi = cosine_product
    state = make_state(f0, 0.0, 0.1, rhoi, sg, vg)
    for _ in range(10):
        for _ in range(20):
            state = step_vpfp(state, 0.0025, rhoi, sg, vg)
        assert state.f.min() >= -1e-13 * state.f.max()


def test_state_field_consistency(grids, cosine_product):
    from vpfp.poisson import field_from_density

    sg, vg = grids
    f0, _, rhoi = cosine_product
    state = make_state(f0, 0.0, 0.1, rhoi, sg, vg)
    for _ in range(5):
        state = step_vpfp(state, 0.0025, rhoi, sg, vg)
    expected = field_from_density(marginal(state.f, vg), rhoi, sg)
    assert np.max(np.abs(state.field.E - expected.E)) < 1e-14


# ------------------------------------------------------------- run driver


def tiny_config(**overrides):
    base = {
        "epsilon": 0.2,
        "T_final": 0.05,
        "Nx": 32,
        "Nv": 64,
        "N_min": 20,
        "diag_interval": 0.0125,
    }
    base.update(overrides)
    return parse_config(base)


def test_dt_policy_bounds():
    cfg = tiny_config()
    _, vg = cfg.build_grids()
    for eps in (0.2, 0.05, 0.025):
        dt, n_sub, interval = kinetic_dt(cfg, eps, vg)
        assert dt <= cfg.c_adv * eps * vg.dv / cfg.E_bound + 1e-15
        assert dt <= cfg.T_final / cfg.N_min + 1e-15
        assert dt <= cfg.theta_max * eps**2 + 1e-15
        assert n_sub * dt == pytest.approx(interval, rel=1e-12)


def test_run_zero_horizon_returns_initial_state():
    cfg = tiny_config(T_final=0.0)
    sink = ListSink()
    state = run_vpfp(cfg, sink=sink)
    assert state.t == 0.0
    assert len(sink.records) == 1
    assert sink.records[0].mass == pytest.approx(1.0, abs=1e-12)


def test_run_deterministic_records():
    cfg = tiny_config()
    s1, s2 = ListSink(), ListSink()
    run_vpfp(cfg, sink=s1)
    run_vpfp(cfg, sink=s2)
    assert len(s1.records) == len(s2.records)
    for r1, r2 in zip(s1.records, s2.records):
        assert r1 == r2


def test_run_rejects_mismatched_fluid_schedule():
    cfg = tiny_config()
    with pytest.raises(ValueError, match="schedule"):
        run_vpfp(cfg, fluid_traj=[(0.0, np.ones(32))])


def test_run_requires_epsilon():
    cfg = tiny_config()
    cfg = parse_config({k: v for k, v in cfg.to_dict().items() if v is not None and k != "epsilon"})
    with pytest.raises(ValueError, match="epsilon"):
        run_vpfp(cfg)


def test_running_integrals_match_decomposition():
    from vpfp.diagnostics import error_decomposition
    from vpfp.fluid import run_ddp

    cfg = tiny_config()
    fluid = run_ddp(cfg)
    sink, snaps = ListSink(), []
    run_vpfp(cfg, sink=sink, fluid_traj=fluid, snapshots=snaps)
    sg, vg = cfg.build_grids()
    dec = error_decomposition(snaps, fluid, cfg.epsilon, sg, vg)
    last = sink.records[-1]
    assert last.e1_sq_int == pytest.approx(dec.e1**2, rel=1e-10)
    assert last.e2_sq_int == pytest.approx(dec.e2**2, rel=1e-10)
    assert last.e3_sq_int == pytest.approx(dec.e3**2, rel=1e-10)
    assert last.total_sq_int == pytest.approx(dec.total**2, rel=1e-10)
