"""Command line harness: run orchestration, sweeps, persistence, plots.

Subcommands: ``run`` (single kinetic run), ``sweep`` (epsilon convergence
study), ``fluid`` (limit system only), ``oracle`` (particle cross-check),
``plot`` (SVG from a sweep CSV).  All outputs land in per-command output
directories with a manifest.json carrying the fully-resolved config, code
version and wall-clock timings.  CSV/JSON data files are byte-identical
across reruns with the same config and seed; the manifest is exempt (it
records timings).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from . import __version__
from .backend import backend_name
from .config import ConfigError, SimConfig, load_config
from .diagnostics import (
    ListSink,
    beta_exponent,
    error_decomposition,
    fit_rate,
    gamma_exponent,
    initial_density_bound,
    validity_horizon,
    weighted_lp_norm,
    well_preparedness,
)
from .fluid import run_ddp
from .grids import initial_data
from .kinetic import run_vpfp
from .plotting import emit_plot
from .sde import oracle_run


def _fmt(x) -> str:
    """Shortest round-trip decimal representation (deterministic output)."""
    return repr(float(x))


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_manifest(out_dir: Path, cfg: SimConfig, command: str, wall_seconds: float, extra=None):
    payload = {
        "command": command,
        "config": cfg.to_dict(),
        "code_version": __version__,
        "backend": backend_name(),
        "timings": {"wall_seconds": wall_seconds},
    }
    if extra:
        payload.update(extra)
    _write_json(out_dir / "manifest.json", payload)


def diagnostics_csv_text(records, p_list) -> str:
    header = ["t", "mass"]
    header += [f"lp_norm_p{p}" for p in p_list]
    header += [
        "f_minus_rhoeps_M_l2",
        "rhoeps_minus_pieps_l2",
        "pieps_minus_rho_l2",
        "field_discrepancy_inf",
        "d2_dissipation",
    ]
    lines = [",".join(header)]
    for r in records:
        row = [_fmt(r.t), _fmt(r.mass)]
        row += [_fmt(r.lp_norms[p]) for p in p_list]
        row += [
            _fmt(r.f_minus_rhoeps_M_l2),
            _fmt(r.rhoeps_minus_pieps_l2),
            _fmt(r.pieps_minus_rho_l2),
            _fmt(r.field_discrepancy_inf),
            _fmt(r.d2_dissipation),
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


@dataclass
class EpsilonRun:
    epsilon: float
    records: list
    decomposition: object
    field_disc_sup: float
    pieps_minus_rho_sup: float
    mass_drift: float
    mass_leaked: float
    wall_seconds: float


@dataclass
class SweepResult:
    epsilons: list
    runs: dict  # epsilon -> EpsilonRun
    slopes: dict  # series -> RateFit
    theory: dict  # p -> {"beta":..., "gamma":...}
    horizons: dict  # p -> {epsilon: T(eps)}
    warnings: list
    failures: dict  # epsilon -> error message


def _single_eps_run(cfg: SimConfig, eps: float, fluid_traj, out_dir: Path | None) -> EpsilonRun:
    t0 = time.perf_counter()
    run_cfg = cfg.with_epsilon(eps)
    sink = ListSink()
    snaps = []
    state = run_vpfp(run_cfg, sink=sink, fluid_traj=fluid_traj, snapshots=snaps)
    sgrid, vgrid = run_cfg.build_grids()
    dec = error_decomposition(snaps, fluid_traj, eps, sgrid, vgrid)
    recs = sink.records
    wall = time.perf_counter() - t0
    res = EpsilonRun(
        epsilon=eps,
        records=recs,
        decomposition=dec,
        field_disc_sup=max(r.field_discrepancy_inf for r in recs),
        pieps_minus_rho_sup=max(r.pieps_minus_rho_l2 for r in recs),
        mass_drift=max(abs(r.mass - recs[0].mass) for r in recs),
        mass_leaked=state.mass_leaked,
        wall_seconds=wall,
    )
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "diagnostics.csv").write_text(
            diagnostics_csv_text(recs, run_cfg.p_list), encoding="utf-8"
        )
        _write_manifest(out_dir, run_cfg, "sweep:epsilon", wall)
    return res


def run_convergence_sweep(cfg: SimConfig, out_dir=None, jobs: int = 1) -> SweepResult:
    """Run the epsilon sweep, fit slopes, and persist sweep.csv/summary.json.

    Per-epsilon runs are independent and execute on a bounded worker pool;
    failures are recorded and the sweep continues with the remaining runs.
    """
    if not cfg.epsilons or len(cfg.epsilons) < 3:
        raise ConfigError("epsilons", "a sweep needs at least 3 distinct epsilon values")
    eps_list = sorted(cfg.epsilons, reverse=True)
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    sgrid, vgrid = cfg.build_grids()
    f0, rho0, rho_i = initial_data(cfg.init, sgrid, vgrid)
    fluid_traj = run_ddp(cfg)

    warnings = []
    horizons = {}
    theory = {}
    for p in cfg.p_list:
        gamma = gamma_exponent(p, cfg.d)
        beta = beta_exponent(p, cfg.d)
        theory[p] = {"beta": beta, "gamma": gamma}
        f0_norm = weighted_lp_norm(f0, p, sgrid, vgrid)
        m_p = well_preparedness(f0, rho0, min(eps_list), p, beta, sgrid, vgrid)
        c_const = initial_density_bound(rho0, rho_i, p, sgrid)
        horizons[p] = {
            eps: validity_horizon(f0_norm, m_p, c_const, gamma, eps, c_calib=1.0, d=cfg.d)
            for eps in eps_list
        }
        t_min = min(horizons[p].values())
        if cfg.T_final > t_min:
            warnings.append(
                f"T_final = {cfg.T_final} exceeds the p = {p} calibrated horizon {t_min:.4g}"
            )

    runs = {}
    failures = {}

    def work(eps):
        sub_dir = out_path / f"eps_{eps:g}" if out_path is not None else None
        return _single_eps_run(cfg, eps, fluid_traj, sub_dir)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = {eps: pool.submit(work, eps) for eps in eps_list}
    for eps in eps_list:
        try:
            runs[eps] = futures[eps].result()
        except Exception as exc:  # noqa: BLE001 - per-run failures recorded, sweep continues
            failures[eps] = f"{type(exc).__name__}: {exc}"

    ok_eps = [e for e in eps_list if e in runs]
    series = {
        "total": [(e, runs[e].decomposition.total) for e in ok_eps],
        "E1": [(e, runs[e].decomposition.e1) for e in ok_eps],
        "E2": [(e, runs[e].decomposition.e2) for e in ok_eps],
        "E3": [(e, runs[e].decomposition.e3) for e in ok_eps],
        "field_discrepancy": [(e, runs[e].field_disc_sup) for e in ok_eps],
        "pieps_minus_rho_sup": [(e, runs[e].pieps_minus_rho_sup) for e in ok_eps],
    }
    slopes = {}
    for name, pts in series.items():
        try:
            slopes[name] = fit_rate(pts)
        except ValueError as exc:
            warnings.append(f"slope fit for {name} skipped: {exc}")

    result = SweepResult(
        epsilons=eps_list,
        runs=runs,
        slopes=slopes,
        theory=theory,
        horizons=horizons,
        warnings=warnings,
        failures=failures,
    )
    if out_path is not None:
        (out_path / "sweep.csv").write_text(sweep_csv_text(result), encoding="utf-8")
        _write_json(out_path / "summary.json", summary_payload(result))
        _write_manifest(
            out_path,
            cfg,
            "sweep",
            time.perf_counter() - t0,
            extra={"jobs": jobs, "partial": bool(failures)},
        )
    return result


def sweep_csv_text(result: SweepResult) -> str:
    lines = ["epsilon,err_total,err_E1,err_E2,err_E3,field_disc_at_T"]
    for eps in result.epsilons:
        run = result.runs.get(eps)
        if run is None:
            continue
        dec = run.decomposition
        terminal_disc = run.records[-1].field_discrepancy_inf
        lines.append(
            ",".join(
                [_fmt(eps), _fmt(dec.total), _fmt(dec.e1), _fmt(dec.e2), _fmt(dec.e3), _fmt(terminal_disc)]
            )
        )
    return "\n".join(lines) + "\n"


def summary_payload(result: SweepResult) -> dict:
    return {
        "epsilons": result.epsilons,
        "slopes": {
            name: {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual}
            for name, fit in result.slopes.items()
        },
        "theory": {str(p): v for p, v in result.theory.items()},
        "validity_horizon_c_calib_1": {
            str(p): {_fmt(eps): t for eps, t in by_eps.items()}
            for p, by_eps in result.horizons.items()
        },
        "per_epsilon": [
            {
                "epsilon": eps,
                "err_total": result.runs[eps].decomposition.total,
                "err_E1": result.runs[eps].decomposition.e1,
                "err_E2": result.runs[eps].decomposition.e2,
                "err_E3": result.runs[eps].decomposition.e3,
                "field_disc_at_T": result.runs[eps].records[-1].field_discrepancy_inf,
                "field_disc_sup": result.runs[eps].field_disc_sup,
                "pieps_minus_rho_sup": result.runs[eps].pieps_minus_rho_sup,
                "mass_drift": result.runs[eps].mass_drift,
                "mass_leaked": result.runs[eps].mass_leaked,
            }
            for eps in result.epsilons
            if eps in result.runs
        ],
        "warnings": result.warnings,
        "partial": bool(result.failures),
        "failures": {_fmt(eps): msg for eps, msg in result.failures.items()},
    }


class _FluidSink:
    def __init__(self):
        self.rows = []

    def emit(self, row: dict):
        self.rows.append(row)


def _cmd_run(cfg: SimConfig, out_dir: Path, args) -> int:
    t0 = time.perf_counter()
    sink = ListSink()
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        run_vpfp(cfg, sink=sink)
    finally:
        # flush whatever diagnostics were emitted, even on abort
        if sink.records:
            (out_dir / "diagnostics.csv").write_text(
                diagnostics_csv_text(sink.records, cfg.p_list), encoding="utf-8"
            )
    _write_manifest(out_dir, cfg, "run", time.perf_counter() - t0)
    return 0


def _cmd_fluid(cfg: SimConfig, out_dir: Path, args) -> int:
    t0 = time.perf_counter()
    sink = _FluidSink()
    run_ddp(cfg, sink=sink)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = list(sink.rows[0].keys())
    lines = [",".join(header)]
    for row in sink.rows:
        lines.append(",".join(_fmt(row[h]) for h in header))
    (out_dir / "fluid.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(out_dir, cfg, "fluid", time.perf_counter() - t0)
    return 0


def _cmd_sweep(cfg: SimConfig, out_dir: Path, args) -> int:
    result = run_convergence_sweep(cfg, out_dir=out_dir, jobs=args.jobs)
    if result.failures:
        print(json.dumps({"partial": True, "failures": list(result.failures)}), file=sys.stderr)
    return 0


def _cmd_oracle(cfg: SimConfig, out_dir: Path, args) -> int:
    t0 = time.perf_counter()
    report, _, _ = oracle_run(cfg, args.particles, args.time, seed=cfg.seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "report.json", report)
    _write_manifest(out_dir, cfg, "oracle", time.perf_counter() - t0)
    return 0


def _cmd_plot(args, out_dir: Path) -> int:
    t0 = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_plot(args.csv, out_dir / "plot.svg", beta_ref=args.beta)
    _write_json(
        out_dir / "manifest.json",
        {
            "command": "plot",
            "source_csv": str(args.csv),
            "reference_slope": args.beta,
            "code_version": __version__,
            "timings": {"wall_seconds": time.perf_counter() - t0},
        },
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vpfp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed (u64)")

    p_run = sub.add_parser("run", help="single kinetic run")
    common(p_run)
    p_sweep = sub.add_parser("sweep", help="epsilon convergence sweep")
    common(p_sweep)
    p_sweep.add_argument("--epsilons", default=None, help="comma-separated list, overrides config")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel epsilon runs")
    p_fluid = sub.add_parser("fluid", help="drift-diffusion limit run")
    common(p_fluid)
    p_oracle = sub.add_parser("oracle", help="stochastic particle cross-check")
    common(p_oracle)
    p_oracle.add_argument("--particles", type=int, default=100_000)
    p_oracle.add_argument("--time", type=float, default=0.25)
    p_plot = sub.add_parser("plot", help="render sweep.csv to SVG")
    p_plot.add_argument("--csv", required=True, help="sweep.csv path")
    p_plot.add_argument("--out", default=None, help="output directory")
    p_plot.add_argument("--beta", type=float, default=1.0, help="reference slope")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            out_dir = Path(args.out or "out_plot")
            return _cmd_plot(args, out_dir)

        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed", "must be a nonnegative integer")
            cfg = replace(cfg, seed=args.seed)
        if args.command == "sweep" and args.epsilons:
            vals = tuple(float(tok) for tok in args.epsilons.split(","))
            cfg = replace(cfg, epsilons=None)
            from .config import parse_config

            cfg = replace(cfg, epsilons=parse_config({"epsilons": list(vals)}).epsilons)
        out_dir = Path(args.out or cfg.out_dir or f"out_{args.command}")

        if args.command == "run":
            if cfg.epsilon is None:
                raise ConfigError("epsilon", "required for `run`")
            return _cmd_run(cfg, out_dir, args)
        if args.command == "fluid":
            return _cmd_fluid(cfg, out_dir, args)
        if args.command == "sweep":
            return _cmd_sweep(cfg, out_dir, args)
        if args.command == "oracle":
            if cfg.epsilon is None:
                raise ConfigError("epsilon", "required for `oracle`")
            return _cmd_oracle(cfg, out_dir, args)
        raise ValueError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(json.dumps({"error": str(exc), "field": exc.field}), file=sys.stderr)
        return 2
    except (ValueError, OSError, FloatingPointError) as exc:
        print(json.dumps({"error": f"{type(exc).__name__}: {exc}"}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
