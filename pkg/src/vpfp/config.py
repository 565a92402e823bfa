"""Run configuration: strict JSON schema, defaults, validation.

Unknown keys are rejected with the offending key named (typo safety), and
validation errors carry the field path.  The fully-resolved configuration is
echoed into every manifest.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

from .grids import CosineSeries, InitSpec, build_grids

DEFAULT_INIT = {
    "rho0": {"mean": 1.0, "cosines": [[1, 0.5]]},
    "rhoi": {"mean": 1.0, "cosines": []},
}

_TOP_KEYS = {
    "d",
    "L",
    "Nx",
    "Nv",
    "Vmax",
    "epsilon",
    "epsilons",
    "T_final",
    "c_adv",
    "E_bound",
    "N_min",
    "theta_max",
    "diag_interval",
    "p_list",
    "init",
    "seed",
    "out_dir",
}


class ConfigError(ValueError):
    """Validation error with the JSON field path attached."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class SimConfig:
    d: int = 1
    L: float = 1.0
    Nx: int = 128
    Nv: int = 256
    Vmax: float = 8.0
    epsilon: float | None = None
    epsilons: tuple | None = None
    T_final: float = 0.5
    c_adv: float = 0.5
    E_bound: float = 1.0
    N_min: int = 200
    theta_max: float = 0.2
    diag_interval: float | None = None
    p_list: tuple = (2, 4)
    init: InitSpec = None
    seed: int = 0
    out_dir: str | None = None

    def resolved_interval(self) -> float:
        """Diagnostic interval, adjusted to divide T_final exactly."""
        if self.T_final == 0.0:
            return 0.0
        raw = self.diag_interval if self.diag_interval is not None else self.T_final / 64.0
        n = max(1, round(self.T_final / raw))
        return self.T_final / n

    def n_intervals(self) -> int:
        if self.T_final == 0.0:
            return 0
        return round(self.T_final / self.resolved_interval())

    def build_grids(self):
        return build_grids(self.Nx, self.Nv, self.Vmax, self.L)

    def with_epsilon(self, eps: float) -> "SimConfig":
        return replace(self, epsilon=float(eps))

    def to_dict(self) -> dict:
        """Fully-resolved JSON-serializable echo of this configuration."""
        return {
            "d": self.d,
            "L": self.L,
            "Nx": self.Nx,
            "Nv": self.Nv,
            "Vmax": self.Vmax,
            "epsilon": self.epsilon,
            "epsilons": list(self.epsilons) if self.epsilons is not None else None,
            "T_final": self.T_final,
            "c_adv": self.c_adv,
            "E_bound": self.E_bound,
            "N_min": self.N_min,
            "theta_max": self.theta_max,
            "diag_interval": self.resolved_interval() if self.T_final > 0 else None,
            "p_list": list(self.p_list),
            "init": {
                "rho0": {
                    "mean": self.init.rho0.mean,
                    "cosines": [list(mc) for mc in self.init.rho0.modes],
                },
                "rhoi": {
                    "mean": self.init.rhoi.mean,
                    "cosines": [list(mc) for mc in self.init.rhoi.modes],
                },
            },
            "seed": self.seed,
            "out_dir": self.out_dir,
        }


def _require_number(raw, field, minimum=None, maximum=None, strict_min=False):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(field, f"expected a number, got {raw!r}")
    val = float(raw)
    if not math.isfinite(val):
        raise ConfigError(field, f"must be finite, got {raw!r}")
    if minimum is not None:
        if strict_min and val <= minimum:
            raise ConfigError(field, f"must be > {minimum}, got {raw!r}")
        if not strict_min and val < minimum:
            raise ConfigError(field, f"must be >= {minimum}, got {raw!r}")
    if maximum is not None and val > maximum:
        raise ConfigError(field, f"must be <= {maximum}, got {raw!r}")
    return val


def _require_int(raw, field, minimum=None):
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(field, f"expected an integer, got {raw!r}")
    if minimum is not None and raw < minimum:
        raise ConfigError(field, f"must be >= {minimum}, got {raw!r}")
    return raw


def _parse_series(raw, field) -> CosineSeries:
    if not isinstance(raw, dict):
        raise ConfigError(field, f"expected an object, got {raw!r}")
    unknown = set(raw) - {"mean", "cosines"}
    if unknown:
        raise ConfigError(f"{field}.{sorted(unknown)[0]}", "unknown key")
    mean = _require_number(raw.get("mean", 1.0), f"{field}.mean", minimum=0.0, strict_min=True)
    modes = []
    for i, entry in enumerate(raw.get("cosines", [])):
        path = f"{field}.cosines[{i}]"
        if not (isinstance(entry, (list, tuple)) and len(entry) == 2):
            raise ConfigError(path, f"expected a [mode, amplitude] pair, got {entry!r}")
        m = _require_int(entry[0], f"{path}[0]", minimum=1)
        amp = _require_number(entry[1], f"{path}[1]")
        modes.append((m, amp))
    return CosineSeries(mean=mean, modes=tuple(modes))


def parse_config(data: dict) -> SimConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")

    d = _require_int(data.get("d", 1), "d")
    if d != 1:
        raise ConfigError("d", f"only d = 1 is supported, got {d}")
    L = _require_number(data.get("L", 1.0), "L", minimum=0.0, strict_min=True)
    Nx = _require_int(data.get("Nx", 128), "Nx", minimum=8)
    if Nx & (Nx - 1):
        raise ConfigError("Nx", f"must be a power of two, got {Nx}")
    Nv = _require_int(data.get("Nv", 256), "Nv", minimum=8)
    Vmax = _require_number(data.get("Vmax", 8.0), "Vmax", minimum=6.0)

    epsilon = data.get("epsilon")
    if epsilon is not None:
        epsilon = _require_number(epsilon, "epsilon", minimum=0.0, maximum=1.0, strict_min=True)
    epsilons = data.get("epsilons")
    if epsilons is not None:
        if not isinstance(epsilons, (list, tuple)) or not epsilons:
            raise ConfigError("epsilons", f"expected a nonempty list, got {epsilons!r}")
        vals = [
            _require_number(e, f"epsilons[{i}]", minimum=0.0, maximum=1.0, strict_min=True)
            for i, e in enumerate(epsilons)
        ]
        if len(set(vals)) != len(vals):
            raise ConfigError("epsilons", "duplicate entries are not allowed")
        epsilons = tuple(vals)

    T_final = _require_number(data.get("T_final", 0.5), "T_final", minimum=0.0)
    c_adv = _require_number(data.get("c_adv", 0.5), "c_adv", minimum=0.0, maximum=1.0, strict_min=True)
    E_bound = _require_number(data.get("E_bound", 1.0), "E_bound", minimum=0.0, strict_min=True)
    N_min = _require_int(data.get("N_min", 200), "N_min", minimum=1)
    theta_max = _require_number(data.get("theta_max", 0.2), "theta_max", minimum=0.0, strict_min=True)
    diag_interval = data.get("diag_interval")
    if diag_interval is not None:
        diag_interval = _require_number(diag_interval, "diag_interval", minimum=0.0, strict_min=True)

    p_list = data.get("p_list", [2, 4])
    if not isinstance(p_list, (list, tuple)) or not p_list:
        raise ConfigError("p_list", f"expected a nonempty list, got {p_list!r}")
    ps = []
    for i, p in enumerate(p_list):
        p = _require_int(p, f"p_list[{i}]", minimum=2)
        if p <= d:
            raise ConfigError(f"p_list[{i}]", f"exponent must exceed d = {d}")
        ps.append(p)

    init_raw = data.get("init", DEFAULT_INIT)
    if not isinstance(init_raw, dict):
        raise ConfigError("init", f"expected an object, got {init_raw!r}")
    unknown = set(init_raw) - {"rho0", "rhoi"}
    if unknown:
        raise ConfigError(f"init.{sorted(unknown)[0]}", "unknown key")
    init = InitSpec(
        rho0=_parse_series(init_raw.get("rho0", DEFAULT_INIT["rho0"]), "init.rho0"),
        rhoi=_parse_series(init_raw.get("rhoi", DEFAULT_INIT["rhoi"]), "init.rhoi"),
    )

    seed = _require_int(data.get("seed", 0), "seed", minimum=0)
    out_dir = data.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("out_dir", f"expected a string, got {out_dir!r}")

    return SimConfig(
        d=d,
        L=L,
        Nx=Nx,
        Nv=Nv,
        Vmax=Vmax,
        epsilon=epsilon,
        epsilons=epsilons,
        T_final=T_final,
        c_adv=c_adv,
        E_bound=E_bound,
        N_min=N_min,
        theta_max=theta_max,
        diag_interval=diag_interval,
        p_list=tuple(ps),
        init=init,
        seed=seed,
        out_dir=out_dir,
    )


def load_config(path) -> SimConfig:
    """Parse and validate a JSON config file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
    return parse_config(data)


def default_config(**overrides) -> SimConfig:
    """Config with all defaults applied (acceptance-style initial data)."""
    cfg = parse_config({})
    return replace(cfg, **overrides) if overrides else cfg
